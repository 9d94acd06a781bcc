use std::path::PathBuf;

use ensemble_forecast::backtest::{
    mape_by_lead, rank_counts, run_backtest, write_cells_csv, write_mape_by_lead_csv, write_rank_csv, BacktestReport,
    RankCounts,
};
use ensemble_forecast::dataset::{read_feeds, FEED_FILES};
use ensemble_forecast::svg::{line_chart, Series};
use serde::{Deserialize, Serialize};

use super::{write_json, write_text, write_with, Context};
use crate::CliError;

/// Everything `report` needs from one line of business.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestBundle {
    pub report: BacktestReport,
    pub ranks: RankCounts,
}

pub fn lobs(ctx: &Context) -> Vec<String> {
    ctx.cfg
        .backtest
        .lobs
        .clone()
        .unwrap_or_else(|| vec![ctx.cfg.lob.clone()])
}

pub fn bundle_path(ctx: &Context, lob: &str) -> PathBuf {
    ctx.out.join("backtest").join(format!("{lob}_report.json"))
}

pub fn mape_by_lead_svg(report: &BacktestReport) -> String {
    let series: Vec<Series> = mape_by_lead(report)
        .into_iter()
        .map(|(kind, curve)| Series {
            name: kind.ensemble_name().to_string(),
            points: curve.into_iter().map(|(j, m)| (f64::from(j), m)).collect(),
        })
        .collect();
    line_chart(
        &series,
        &format!("Mean test MAPE by lead time, {}", report.lob),
        "lead time (weeks)",
        "MAPE (%)",
        None,
    )
}

pub fn backtest(ctx: &Context, data: Option<PathBuf>) -> Result<(), CliError> {
    let data = ctx.data_dir(data);
    let mut manifest = ctx.manifest("backtest");
    for f in FEED_FILES {
        manifest.input(&ctx.out, &data.join(f))?;
    }
    let feeds = read_feeds(&data, ctx.cfg.calendar.start_date)?;
    let mut config = ctx.cfg.backtest.config.clone();
    config.seed = ctx.cfg.seed;
    config.workers = ctx.cfg.workers;
    let dir = ctx.stage_dir("backtest")?;
    for lob in lobs(ctx) {
        let report = run_backtest(&feeds, &lob, &config)?;
        let ranks = rank_counts(&report);
        let curves = mape_by_lead(&report);
        let file = |suffix: &str| dir.join(format!("{lob}_{suffix}"));
        let written = vec![
            write_with(&file("cells.csv"), |w| write_cells_csv(w, &report))?,
            write_with(&file("ranks.csv"), |w| write_rank_csv(w, &ranks))?,
            write_with(&file("mape_by_lead.csv"), |w| write_mape_by_lead_csv(w, &curves))?,
            write_text(&file("mape_by_lead.svg"), &mape_by_lead_svg(&report))?,
            write_json(&bundle_path(ctx, &lob), &BacktestBundle { report, ranks })?,
        ];
        manifest.outputs(&ctx.out, &written)?;
    }
    manifest.write(&dir)?;
    Ok(())
}
