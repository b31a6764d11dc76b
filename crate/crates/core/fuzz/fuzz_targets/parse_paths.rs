#![no_main]

use libfuzzer_sys::fuzz_target;
use occnav::formats::{parse_paths, write_paths};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_paths(text) {
        assert_eq!(parse_paths(&write_paths(&records)).unwrap(), records);
    }
});
