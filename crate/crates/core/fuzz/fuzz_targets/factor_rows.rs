#![no_main]

use libfuzzer_sys::fuzz_target;
use objectness::profile::{parse_rows, ObjectFactorRow, Profile, SceneFactorRow};

fuzz_target!(|data: &[u8]| {
    let objects = parse_rows::<ObjectFactorRow>(data).unwrap_or_default();
    let scenes = parse_rows::<SceneFactorRow>(data).unwrap_or_default();
    // Whatever parses must summarize without panicking.
    let _ = objectness::report::build_report("fuzz", &Profile { objects, scenes });
});
