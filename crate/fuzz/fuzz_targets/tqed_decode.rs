#![no_main]

use libfuzzer_sys::fuzz_target;
use tqent::io::{decode_dataset, encode_dataset};

fuzz_target!(|data: &[u8]| {
    // Anything accepted must re-encode to the same bytes.
    if let Ok(ds) = decode_dataset(data) {
        assert_eq!(encode_dataset(&ds), data);
    }
});
