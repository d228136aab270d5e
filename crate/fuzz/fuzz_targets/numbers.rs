#![no_main]

use enomr::config::{parse_number, parse_positive};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_number(text) {
        assert!(v.is_finite());
    }
    if let Ok(v) = parse_positive(text) {
        assert!(v.is_finite() && v > 0.0);
    }
});
