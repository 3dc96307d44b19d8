#![no_main]

use libfuzzer_sys::fuzz_target;
use tqent::io::{decode_model, encode_model};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = decode_model(text) {
        let again = encode_model(&model).expect("decoded models encode");
        assert_eq!(decode_model(&again).expect("round trip"), model);
    }
});
