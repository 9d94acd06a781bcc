use std::fmt::Write as _;

use ensemble_forecast::backtest::write_rank_csv;
use ensemble_forecast::importance::{top_k, ImportanceReport};
use ensemble_forecast::svg::{bar_chart, heat_map, line_chart, Series};

use super::backtest::{bundle_path, lobs, mape_by_lead_svg, BacktestBundle};
use super::model::{DecollinearOutput, TrainSummary};
use super::{read_text, write_text, write_with, Context};
use crate::CliError;

fn parse<T: serde::de::DeserializeOwned>(path: &std::path::Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Tables and figures from whatever stages have run. The backtest report is
/// required; the others are emitted when their inputs exist.
pub fn report(ctx: &Context) -> Result<(), CliError> {
    let mut manifest = ctx.manifest("report");
    let dir = ctx.stage_dir("report")?;
    let mut written = Vec::new();
    let mut md = String::from("# Report\n\n");

    for lob in lobs(ctx) {
        let path = bundle_path(ctx, &lob);
        manifest.input(&ctx.out, &path)?;
        let bundle: BacktestBundle = parse(&path, &read_text(&path)?)?;
        let ranks = &bundle.ranks;
        written.push(write_with(&dir.join(format!("table1_{lob}.csv")), |w| write_rank_csv(w, ranks))?);
        written.push(write_text(&dir.join(format!("fig6_{lob}.svg")), &mape_by_lead_svg(&bundle.report))?);

        let k = ranks.methods.len();
        let _ = writeln!(md, "## Rank counts, {lob}\n");
        let _ = writeln!(
            md,
            "{} ranked cells, {} flagged cells left out.\n",
            ranks.ranked_cells, ranks.flagged_cells
        );
        let header: Vec<String> = (1..=k).map(|r| format!("rank {r}")).collect();
        let _ = writeln!(md, "| method | {} | total |", header.join(" | "));
        let _ = writeln!(md, "|---|{}---|", "---|".repeat(k));
        let mut consistent = true;
        for (i, m) in ranks.methods.iter().enumerate() {
            let row = &ranks.all[i];
            let total: u32 = row.iter().sum();
            consistent &= total == ranks.ranked_cells;
            let cells: Vec<String> = row.iter().map(u32::to_string).collect();
            let _ = writeln!(md, "| {} | {} | {total} |", m.ensemble_name(), cells.join(" | "));
        }
        let _ = writeln!(
            md,
            "\nRow sums {} the ranked cell count.\n",
            if consistent { "match" } else { "DO NOT match" }
        );
    }

    let decol = ctx.out.join("decollinear").join("report.json");
    if decol.exists() {
        manifest.input(&ctx.out, &decol)?;
        let d: DecollinearOutput = parse(&decol, &read_text(&decol)?)?;
        for (name, m, title) in [
            ("fig3_before.svg", &d.before, "Absolute correlation before treatment"),
            ("fig3_after.svg", &d.after, "Absolute correlation after treatment"),
        ] {
            if let Some(m) = m {
                written.push(write_text(&dir.join(name), &heat_map(&m.values, &m.labels, title))?);
            }
        }
        let _ = writeln!(
            md,
            "## Collinearity\n\n{} clusters, variance ratio {:.3}, representatives: {}.\n",
            d.report.k,
            d.report.variance_ratio,
            d.report.representatives.join(", ")
        );
    }

    let train = ctx.out.join("train").join("summary.json");
    if train.exists() {
        manifest.input(&ctx.out, &train)?;
        let s: TrainSummary = parse(&train, &read_text(&train)?)?;
        let series = Series {
            name: s.kind.clone(),
            points: s.curve.iter().enumerate().map(|(i, m)| ((i + 1) as f64, *m)).collect(),
        };
        let svg = line_chart(
            &[series],
            &format!("Sorted validation MAPE, M = {}", s.m),
            "candidate rank",
            "validation MAPE (%)",
            Some(s.m as f64),
        );
        written.push(write_text(&dir.join("fig4.svg"), &svg)?);
        let _ = writeln!(
            md,
            "## Ensemble size\n\n{} of {} candidates kept (threshold {:.4}).\n",
            s.m, s.candidates, s.threshold
        );
    }

    let imp = ctx.out.join("importance").join("report.json");
    if imp.exists() {
        manifest.input(&ctx.out, &imp)?;
        let r: ImportanceReport = parse(&imp, &read_text(&imp)?)?;
        let (top, _) = top_k(&r, ctx.cfg.importance.top_k);
        let bars: Vec<(String, f64)> = top.iter().map(|v| (v.variable.clone(), v.mean_delta)).collect();
        let svg = bar_chart(
            &bars,
            &format!("Top {} variables", bars.len()),
            &format!("increase in validation {} (percentage points)", r.loss),
        );
        written.push(write_text(&dir.join("fig7.svg"), &svg)?);
        let _ = writeln!(md, "## Importance\n");
        for (i, v) in top.iter().enumerate() {
            let _ = writeln!(md, "{}. {} ({:+.4})", i + 1, v.variable, v.mean_delta);
        }
        md.push('\n');
    }

    written.push(write_text(&dir.join("summary.md"), &md)?);
    manifest.outputs(&ctx.out, &written)?;
    manifest.write(&dir)?;
    Ok(())
}
