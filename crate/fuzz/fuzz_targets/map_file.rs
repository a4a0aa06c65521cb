#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_rigidity::maps::MapFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = MapFile::parse(text) {
        let again = MapFile::parse(&file.to_text()).expect("serialized map file parses");
        assert_eq!(again.to_text(), file.to_text());
        let _ = file.into_map();
    }
});
