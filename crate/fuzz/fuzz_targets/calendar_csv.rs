#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = ensemble_forecast::calendar::read_calendar_csv(data);
});
