#![no_main]

use libfuzzer_sys::fuzz_target;
use objectness::dataset::{decode_mask_png, encode_mask_png};

fuzz_target!(|data: &[u8]| {
    if let Ok(mask) = decode_mask_png(data) {
        assert_eq!(decode_mask_png(&encode_mask_png(&mask)).unwrap(), mask);
    }
});
