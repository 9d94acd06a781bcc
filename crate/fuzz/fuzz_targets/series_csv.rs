#![no_main]

use std::sync::OnceLock;

use ensemble_forecast::dataset::CalendarConfig;
use ensemble_forecast::FiscalCalendar;
use libfuzzer_sys::fuzz_target;

fn calendar() -> &'static FiscalCalendar {
    static CAL: OnceLock<FiscalCalendar> = OnceLock::new();
    CAL.get_or_init(|| CalendarConfig::default().build(5).expect("standard calendar"))
}

fuzz_target!(|data: &[u8]| {
    let _ = ensemble_forecast::calendar::read_series_csv(data, calendar());
});
