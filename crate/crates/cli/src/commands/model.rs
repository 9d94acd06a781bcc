use std::path::PathBuf;

use ensemble_forecast::changepoint::ChangePointOutcome;
use ensemble_forecast::collinearity::{abs_corr_matrix, decollinearize, CollinearityReport};
use ensemble_forecast::ensemble::{search, write_curve_csv, EnsembleModel, Failed};
use ensemble_forecast::importance::{importance_report, top_k, write_importance_csv, Loss, Mape, MisclassificationRate};
use ensemble_forecast::rng::derive_seed;
use ensemble_forecast::svg::{bar_chart, heat_map, line_chart, Series};
use ensemble_forecast::FeatureTable;
use serde::{Deserialize, Serialize};

use super::{plan_for, read_table, read_text, write_json, write_table, write_text, write_with, Context};
use crate::config::LossKind;
use crate::CliError;

/// Absolute correlations of a set of columns, with their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecollinearOutput {
    pub window_id: String,
    pub report: CollinearityReport,
    pub before: Option<CorrMatrix>,
    pub after: Option<CorrMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub window_id: String,
    pub kind: String,
    pub candidates: usize,
    pub m: usize,
    pub threshold: f64,
    pub changepoint: ChangePointOutcome,
    /// Sorted validation MAPEs of the ranked candidates.
    pub curve: Vec<f64>,
    pub failures: Vec<Failed>,
}

fn corr(table: &FeatureTable, labels: Vec<String>) -> Result<Option<CorrMatrix>, CliError> {
    if labels.len() < 2 {
        return Ok(None);
    }
    let values = abs_corr_matrix(table, &labels)?;
    Ok(Some(CorrMatrix { labels, values }))
}

pub fn decollinear(ctx: &Context, table: Option<PathBuf>) -> Result<(), CliError> {
    let path = table.unwrap_or_else(|| ctx.features_path(&ctx.cfg.lob, ctx.cfg.train.lead_time));
    let mut manifest = ctx.manifest("decollinear");
    manifest.input(&ctx.out, &path)?;
    manifest.input(&ctx.out, &super::sidecar_path(&path))?;
    let table = read_table(&path)?;
    let plan = plan_for(ctx, &table)?;
    let fit = plan.train_rows(&table);
    let seed = derive_seed(ctx.cfg.seed, &["cli", "decollinear"]);
    let block = &ctx.cfg.collinearity;
    let report = decollinearize(&fit, block.target_ratio, seed, block.vif)?;
    let numeric = |names: &[String]| -> Vec<String> {
        let cat = &report.categorical;
        names
            .iter()
            .filter(|n| !cat.contains(n) && !report.dropped_constant.contains(n))
            .cloned()
            .collect()
    };
    let before = corr(&fit, numeric(&fit.numeric_names()))?;
    let after = corr(&fit, numeric(&report.selected))?;
    let reduced = table.select_columns(&report.selected)?;

    let dir = ctx.stage_dir("decollinear")?;
    let mut written = write_table(&dir.join("reduced.csv"), &reduced)?;
    for (name, m, title) in [
        ("heatmap_before.svg", &before, "Absolute correlation before treatment"),
        ("heatmap_after.svg", &after, "Absolute correlation after treatment"),
    ] {
        if let Some(m) = m {
            written.push(write_text(&dir.join(name), &heat_map(&m.values, &m.labels, title))?);
        }
    }
    let out = DecollinearOutput {
        window_id: plan.window_id.clone(),
        report,
        before,
        after,
    };
    written.push(write_json(&dir.join("report.json"), &out)?);
    manifest.outputs(&ctx.out, &written)?;
    manifest.write(&dir)?;
    Ok(())
}

pub fn train(ctx: &Context, table: Option<PathBuf>) -> Result<(), CliError> {
    let path = table.unwrap_or_else(|| ctx.reduced_path());
    let mut manifest = ctx.manifest("train");
    manifest.input(&ctx.out, &path)?;
    manifest.input(&ctx.out, &super::sidecar_path(&path))?;
    let table = read_table(&path)?;
    let plan = plan_for(ctx, &table)?;
    let fit = plan.train_rows(&table);
    let val = plan.val_rows(&table);
    let kind = ctx.cfg.train.kind;
    let mut config = ctx.cfg.train.search.clone();
    config.workers = ctx.cfg.workers;
    config.subsets.seed = derive_seed(ctx.cfg.seed, &["cli", "train", "subsets"]);
    let seed = derive_seed(ctx.cfg.seed, &["cli", "train", kind.as_str()]);
    let outcome = search(kind, &table.column_names(), &fit, &[&val], &config, seed, &plan.window_id)?;

    let dir = ctx.stage_dir("train")?;
    let mut written = vec![write_text(&dir.join("ensemble.json"), &(outcome.ensemble.to_json() + "\n"))?];
    written.push(write_with(&dir.join("curve.csv"), |w| write_curve_csv(w, &outcome.evaluation))?);
    let curve: Vec<f64> = outcome.evaluation.ranked.iter().map(|r| r.mape).collect();
    let series = Series {
        name: kind.as_str().to_string(),
        points: curve.iter().enumerate().map(|(i, m)| ((i + 1) as f64, *m)).collect(),
    };
    let svg = line_chart(
        &[series],
        &format!("Sorted validation MAPE, M = {}", outcome.ensemble.m),
        "candidate rank",
        "validation MAPE (%)",
        Some(outcome.ensemble.m as f64),
    );
    written.push(write_text(&dir.join("curve.svg"), &svg)?);
    let summary = TrainSummary {
        window_id: plan.window_id.clone(),
        kind: kind.as_str().to_string(),
        candidates: curve.len() + outcome.evaluation.failed.len(),
        m: outcome.ensemble.m,
        threshold: outcome.threshold,
        changepoint: outcome.changepoint,
        curve,
        failures: outcome.evaluation.failed,
    };
    written.push(write_json(&dir.join("summary.json"), &summary)?);
    manifest.outputs(&ctx.out, &written)?;
    manifest.write(&dir)?;
    Ok(())
}

pub fn importance(ctx: &Context, ensemble: Option<PathBuf>, table: Option<PathBuf>) -> Result<(), CliError> {
    let ens_path = ensemble.unwrap_or_else(|| ctx.out.join("train").join("ensemble.json"));
    let path = table.unwrap_or_else(|| ctx.reduced_path());
    let mut manifest = ctx.manifest("importance");
    manifest.input(&ctx.out, &ens_path)?;
    manifest.input(&ctx.out, &path)?;
    manifest.input(&ctx.out, &super::sidecar_path(&path))?;
    let ens = EnsembleModel::from_json(&read_text(&ens_path)?)?;
    let table = read_table(&path)?;
    let plan = plan_for(ctx, &table)?;
    let fit = plan.train_rows(&table);
    let val = plan.val_rows(&table);
    let block = &ctx.cfg.importance;
    let loss: &dyn Loss = match block.loss {
        LossKind::Mape => &Mape,
        LossKind::Misclassification => &MisclassificationRate,
    };
    let seed = derive_seed(ctx.cfg.seed, &["cli", "importance"]);
    let report = importance_report(
        &ens,
        &fit,
        &val,
        block.variables.as_deref(),
        block.iterations,
        seed,
        ctx.cfg.workers,
        loss,
    )?;

    let dir = ctx.stage_dir("importance")?;
    let mut written = vec![write_with(&dir.join("importance.csv"), |w| write_importance_csv(w, &report))?];
    let (top, _) = top_k(&report, block.top_k);
    let bars: Vec<(String, f64)> = top.iter().map(|v| (v.variable.clone(), v.mean_delta)).collect();
    let svg = bar_chart(
        &bars,
        &format!("Top {} variables, {}", bars.len(), ens.kind.ensemble_name()),
        &format!("increase in validation {} (percentage points)", report.loss),
    );
    written.push(write_text(&dir.join("importance.svg"), &svg)?);
    written.push(write_json(&dir.join("report.json"), &report)?);
    manifest.outputs(&ctx.out, &written)?;
    manifest.write(&dir)?;
    Ok(())
}
