#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv_cli::gridspec::parse_grid_spec;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(g) = parse_grid_spec(&text) {
        assert_eq!(g.cells().len(), g.lambda_s.len() * g.lambda_d.len());
    }
});
