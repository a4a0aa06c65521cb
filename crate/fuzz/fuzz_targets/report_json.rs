#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_rigidity::rigidity::RigidityReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = RigidityReport::from_json(text) {
        let _ = report.bound_respected();
        let _ = RigidityReport::from_json(&report.to_json());
    }
});
