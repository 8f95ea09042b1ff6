#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv::{ObservationVector, StationSet};

fuzz_target!(|data: &[u8]| {
    let stations = StationSet::new(
        vec!["A".into(), "B".into(), "C".into()],
        vec![[0.0, 0.0, 0.0], [1e3, 0.0, 0.0], [0.0, 1e3, 0.0]],
    )
    .unwrap();
    if let Ok(obs) = ObservationVector::from_csv_reader(data, "fuzz", &stations, [0.002, 0.002, 0.005]) {
        assert_eq!(obs.values().len(), 9);
    }
});
