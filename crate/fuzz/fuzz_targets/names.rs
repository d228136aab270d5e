#![no_main]

use enomr::harness::{Precision, Problem};
use enomr::reconstruct::ReconstructionScheme;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = text.parse::<ReconstructionScheme>() {
        assert_eq!(s.name().parse::<ReconstructionScheme>().unwrap(), s);
    }
    if let Ok(p) = text.parse::<Precision>() {
        assert_eq!(p.name().parse::<Precision>().unwrap(), p);
    }
    let _ = Problem::from_name(text, 1.0, 3);
});
