#![no_main]

use libfuzzer_sys::fuzz_target;
use occnav::formats::{read_manifest, write_manifest};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_manifest(data) {
        let mut out = Vec::new();
        write_manifest(&mut out, &rows).unwrap();
        assert_eq!(read_manifest(out.as_slice()).unwrap(), rows);
    }
});
