#![no_main]

use libfuzzer_sys::fuzz_target;
use occnav::formats::{decode_grid, encode_grid};

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = decode_grid(data) {
        assert_eq!(encode_grid(&map), data);
    }
});
