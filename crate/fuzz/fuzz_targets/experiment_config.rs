#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_rigidity::experiments::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        ExperimentConfig::from_json(&cfg.to_json()).expect("serialized config validates");
    }
});
