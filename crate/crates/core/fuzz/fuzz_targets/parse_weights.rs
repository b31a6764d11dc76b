#![no_main]

use libfuzzer_sys::fuzz_target;
use occnav::formats::{parse_weights, write_weights};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_weights(text) {
        assert_eq!(parse_weights(&write_weights(&p)).unwrap(), p);
    }
});
