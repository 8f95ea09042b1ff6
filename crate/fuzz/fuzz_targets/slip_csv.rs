#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv::FaultMesh;
use slipinv_cli::files::parse_slip_csv;

fuzz_target!(|data: &[u8]| {
    let mesh = FaultMesh::new(
        vec!["a".into(), "b".into()],
        vec![[0.0, 0.0, -1e3], [1e3, 0.0, -1e3]],
        vec![1e6, 1e6],
        vec![1e3, 1e3],
    )
    .unwrap();
    if let Ok(v) = parse_slip_csv(data, "fuzz", &mesh) {
        assert_eq!(v.len(), 4);
    }
});
