#![no_main]

use libfuzzer_sys::fuzz_target;
use symlab::io::{decode_grid_function, encode_grid_function};

fuzz_target!(|data: &[u8]| {
    if let Ok(u) = decode_grid_function(data) {
        // accepted input must re-encode to the same bytes
        assert_eq!(encode_grid_function(&u), data);
    }
});
