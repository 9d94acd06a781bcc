#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = ensemble_forecast::ensemble::EnsembleModel::from_json(s);
    }
});
