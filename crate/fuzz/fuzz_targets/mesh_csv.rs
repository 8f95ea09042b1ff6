#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv::FaultMesh;

fuzz_target!(|data: &[u8]| {
    if let Ok(mesh) = FaultMesh::from_csv_reader(data, "fuzz") {
        let mut out = Vec::new();
        mesh.write_csv(&mut out).unwrap();
        let again = FaultMesh::from_csv_reader(out.as_slice(), "round trip").unwrap();
        assert_eq!(again.len(), mesh.len());
    }
});
