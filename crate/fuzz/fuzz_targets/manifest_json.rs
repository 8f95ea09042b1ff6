#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv_cli::config::RunConfig;
use slipinv_cli::files::parse_manifest;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(m) = parse_manifest(&text) {
        let _ = RunConfig::from_entries(&m.config, std::path::Path::new("/fuzz"));
    }
});
