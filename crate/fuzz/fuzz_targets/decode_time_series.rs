#![no_main]

use libfuzzer_sys::fuzz_target;
use symlab::io::{decode_time_series, encode_time_series};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = decode_time_series(data) {
        assert_eq!(encode_time_series(&s), data);
    }
});
