#![no_main]

use libfuzzer_sys::fuzz_target;
use symlab::experiment::{parse, validate};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse(text) {
            let _ = validate(&cfg);
        }
    }
});
