#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = ensemble_forecast::calendar::read_lunar_new_year_csv(data);
});
