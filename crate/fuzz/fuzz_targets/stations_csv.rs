#![no_main]

use libfuzzer_sys::fuzz_target;
use slipinv::StationSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(st) = StationSet::from_csv_reader(data, "fuzz") {
        let mut out = Vec::new();
        st.write_csv(&mut out).unwrap();
        assert_eq!(StationSet::from_csv_reader(out.as_slice(), "round trip").unwrap(), st);
    }
});
