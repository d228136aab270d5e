#![no_main]

use enomr::config::ConfigFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ConfigFile::parse(text) {
        let sections: Vec<String> = cfg.sections().map(str::to_string).collect();
        for s in &sections {
            for (k, v) in cfg.entries(s) {
                assert_eq!(cfg.get(s, k), Some(v));
            }
        }
    }
});
