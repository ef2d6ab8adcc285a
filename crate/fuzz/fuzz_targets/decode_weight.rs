#![no_main]

use libfuzzer_sys::fuzz_target;
use symlab::io::{decode_weight, encode_weight};

fuzz_target!(|data: &[u8]| {
    if let Ok(w) = decode_weight(data) {
        assert_eq!(encode_weight(&w), data);
    }
});
