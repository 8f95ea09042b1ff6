#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv::Draws;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = Draws::from_csv_reader(data, "fuzz") {
        assert_eq!(d.as_slice().len(), d.len() * d.dim());
    }
});
