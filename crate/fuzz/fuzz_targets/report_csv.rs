#![no_main]

//! First byte picks the reader: cells, ranks, MAPE by lead, curve or
//! importance.

use ensemble_forecast::{backtest, ensemble, importance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&which, rest)) = data.split_first() else { return };
    match which % 5 {
        0 => drop(backtest::read_cells_csv(rest)),
        1 => drop(backtest::read_rank_csv(rest)),
        2 => drop(backtest::read_mape_by_lead_csv(rest)),
        3 => drop(ensemble::read_curve_csv(rest)),
        _ => drop(importance::read_importance_csv(rest)),
    }
});
