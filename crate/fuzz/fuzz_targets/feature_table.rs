#![no_main]

//! Input: sidecar JSON, a NUL byte, then the table CSV.

use ensemble_forecast::FeatureTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else { return };
    let Ok(sidecar) = std::str::from_utf8(&data[..split]) else { return };
    if let Ok(t) = FeatureTable::read_csv(&data[split + 1..], sidecar) {
        let mut out = Vec::new();
        t.write_csv(&mut out).expect("parsed table writes");
        let again = FeatureTable::read_csv(out.as_slice(), &t.sidecar_json()).expect("written table reads");
        assert_eq!(t, again);
    }
});
