#![no_main]

use libfuzzer_sys::fuzz_target;
use occnav::formats::{decode_labels, encode_labels};

fuzz_target!(|data: &[u8]| {
    if let Ok((rows, cols, labels)) = decode_labels(data) {
        assert_eq!(encode_labels(rows, cols, &labels).unwrap(), data);
    }
});
