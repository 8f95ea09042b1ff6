//! First line is the JSON sidecar, the rest the raw draw bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv::binary::{decode_f64_le, parse_sidecar};
use slipinv::Draws;

fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == b'\n').unwrap_or(data.len());
    let (head, body) = data.split_at(split);
    let body = body.get(1..).unwrap_or(&[]);
    let Ok(text) = std::str::from_utf8(head) else { return };
    let Ok(shape) = parse_sidecar(text) else { return };
    if let Ok(values) = decode_f64_le(body, shape) {
        if let Ok(d) = Draws::from_rows(shape.cols, values) {
            assert_eq!(d.len(), shape.rows);
        }
    }
});
