#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_rigidity::moebius::MoebiusTransform;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = MoebiusTransform::from_line(text) {
        let back = MoebiusTransform::from_line(&m.to_line()).expect("serialized transform parses");
        assert_eq!(back, m);
    }
});
