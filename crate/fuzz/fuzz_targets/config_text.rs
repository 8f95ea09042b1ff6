#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv_cli::config::{parse_config_text, RunConfig};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(entries) = parse_config_text(&text) {
        let _ = RunConfig::from_entries(&entries, std::path::Path::new("/fuzz"));
    }
});
