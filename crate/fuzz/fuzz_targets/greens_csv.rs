#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv::GreensMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = GreensMatrix::from_csv_reader(data, "fuzz") {
        assert_eq!(g.entries().nrows() % 3, 0);
        assert_eq!(g.entries().ncols() % 2, 0);
    }
});
