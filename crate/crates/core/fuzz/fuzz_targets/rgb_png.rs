#![no_main]

use libfuzzer_sys::fuzz_target;
use objectness::dataset::{decode_rgb_png, encode_rgb_png};

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_rgb_png(data) {
        assert_eq!(img.pixels().len(), img.width() * img.height());
        assert_eq!(decode_rgb_png(&encode_rgb_png(&img)).unwrap(), img);
    }
});
