#![no_main]

use libfuzzer_sys::fuzz_target;
use objectness::ablation::Ops;
use objectness::profile::FactorSet;
use objectness::synth::Style;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ops) = text.parse::<Ops>() {
            assert_eq!(ops.to_string().parse::<Ops>().unwrap(), ops);
        }
        let _ = text.parse::<FactorSet>();
        let _ = text.parse::<Style>();
        let _ = objectness::ablation::target_preset(text);
    }
});
