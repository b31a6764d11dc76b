#![no_main]

use libfuzzer_sys::fuzz_target;
use occnav::formats::{parse_floorplan, write_floorplan};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(fp) = parse_floorplan(text) {
        let again = parse_floorplan(&write_floorplan(&fp)).expect("written floorplan parses");
        assert_eq!(fp, again);
    }
});
