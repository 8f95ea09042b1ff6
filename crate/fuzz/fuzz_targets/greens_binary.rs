//! First line is the JSON sidecar, the rest the raw matrix bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv::binary::{decode_f64_le, parse_sidecar};
use slipinv::GreensMatrix;

fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == b'\n').unwrap_or(data.len());
    let (head, body) = data.split_at(split);
    let body = body.get(1..).unwrap_or(&[]);
    let Ok(text) = std::str::from_utf8(head) else { return };
    let Ok(shape) = parse_sidecar(text) else { return };
    let _ = decode_f64_le(body, shape);
    if let Ok(g) = GreensMatrix::from_binary(body, shape) {
        assert_eq!(g.shape(), shape);
    }
});
