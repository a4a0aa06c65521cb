#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_rigidity::experiments::{read_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = read_csv(text) {
        let again = read_csv(&write_csv(&rows)).expect("serialized rows parse");
        assert_eq!(again, rows);
    }
});
