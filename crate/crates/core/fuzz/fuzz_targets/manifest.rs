#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = objectness::dataset::parse_manifest(text) {
            let again = serde_json::to_string(&m).unwrap();
            assert_eq!(objectness::dataset::parse_manifest(&again).unwrap(), m);
        }
    }
});
