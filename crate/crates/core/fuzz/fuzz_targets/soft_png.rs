#![no_main]

use libfuzzer_sys::fuzz_target;
use objectness::dataset::decode_soft_png;

fuzz_target!(|data: &[u8]| {
    if let Ok(mask) = decode_soft_png(data) {
        assert!(mask.values().iter().all(|v| (0.0..=1.0).contains(v)));
        let _ = objectness::eval::binarize(&mask, 0.5);
    }
});
