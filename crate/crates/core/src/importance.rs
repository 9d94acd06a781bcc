//! Retrain-based permutation importance over ensemble members.
//!
//! Each iteration shuffles one variable jointly across the training and
//! validation rows, refits every member that uses it on the shuffled
//! training rows, and scores the refit ensemble on the shuffled validation
//! rows. Members that do not use the variable keep their predictions.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{member_predictions, mean_rows, with_workers, EnsembleModel};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::learners::{fit, predict, ModelSpec, Parameters, TrainedModel};
use crate::metrics::mape;
use crate::rng::stream;

const MODULE: &str = "importance";

pub const IMPORTANCE_VERSION: u32 = 1;

/// Scoring function for permutation importance; lower is better.
pub trait Loss: Sync {
    fn name(&self) -> &'static str;
    fn loss(&self, predicted: &[f64], actual: &[f64]) -> Result<f64>;
}

pub struct Mape;

impl Loss for Mape {
    fn name(&self) -> &'static str {
        "mape"
    }

    fn loss(&self, predicted: &[f64], actual: &[f64]) -> Result<f64> {
        mape(predicted, actual)
    }
}

/// Percentage of rows whose rounded prediction differs from the label.
pub struct MisclassificationRate;

impl Loss for MisclassificationRate {
    fn name(&self) -> &'static str {
        "misclassification"
    }

    fn loss(&self, predicted: &[f64], actual: &[f64]) -> Result<f64> {
        if predicted.len() != actual.len() || actual.is_empty() {
            return Err(Error::contract(MODULE, "prediction and label lengths differ or are empty"));
        }
        let wrong = predicted.iter().zip(actual).filter(|(p, a)| p.round() != a.round()).count();
        Ok(100.0 * wrong as f64 / actual.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableImportance {
    pub variable: String,
    /// Mean of `loss_j - loss_0` over iterations.
    pub mean_delta: f64,
    pub std: f64,
    pub iterations: usize,
    /// Members whose spec includes the variable.
    pub used_by: usize,
    /// Running mean of the permuted loss after each iteration.
    pub running_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub version: u32,
    pub ensemble_id: String,
    pub loss: String,
    pub baseline: f64,
    pub iterations: usize,
    /// Descending by mean delta, ties by name.
    pub variables: Vec<VariableImportance>,
}

/// Member spec with any searched ARIMA order pinned to the fitted one.
fn frozen(model: &TrainedModel) -> ModelSpec {
    let mut spec = model.spec.clone();
    if let Parameters::Arimax(m) = &model.parameters {
        spec.arima_order = Some(m.order);
    }
    spec
}

fn shuffled_tables(
    train: &FeatureTable,
    val: &FeatureTable,
    variable: &str,
    seed: u64,
    iteration: usize,
) -> Result<(FeatureTable, FeatureTable, bool)> {
    let a = train.values(variable)?;
    let b = val.values(variable)?;
    let mut joint: Vec<f64> = a.iter().chain(b).copied().collect();
    let original = joint.clone();
    let mut rng = stream(seed, &["importance", variable, &iteration.to_string()]);
    joint.shuffle(&mut rng);
    let unchanged = joint.iter().zip(&original).all(|(x, y)| x.to_bits() == y.to_bits());
    let vb = joint.split_off(a.len());
    Ok((train.with_values(variable, joint)?, val.with_values(variable, vb)?, unchanged))
}

fn check(ensemble: &EnsembleModel, train: &FeatureTable, val: &FeatureTable, variable: &str) -> Result<()> {
    if train.column(variable).is_none() || val.column(variable).is_none() {
        return Err(Error::contract(MODULE, format!("unknown variable `{variable}`")));
    }
    if ensemble.members.is_empty() {
        return Err(Error::contract(MODULE, "ensemble has no members"));
    }
    Ok(())
}

struct Context<'a> {
    ensemble: &'a EnsembleModel,
    train: &'a FeatureTable,
    val: &'a FeatureTable,
    base_preds: Vec<Vec<f64>>,
    baseline: f64,
    loss: &'a dyn Loss,
}

impl<'a> Context<'a> {
    fn new(ensemble: &'a EnsembleModel, train: &'a FeatureTable, val: &'a FeatureTable, loss: &'a dyn Loss) -> Result<Self> {
        let base_preds = member_predictions(ensemble, val)?;
        let baseline = loss.loss(&mean_rows(&base_preds, val.n_rows()), val.response())?;
        Ok(Self {
            ensemble,
            train,
            val,
            base_preds,
            baseline,
            loss,
        })
    }

    fn permuted_loss(&self, variable: &str, seed: u64, iteration: usize) -> Result<f64> {
        let (tr, va, unchanged) = shuffled_tables(self.train, self.val, variable, seed, iteration)?;
        let mut preds = self.base_preds.clone();
        if !unchanged {
            for (p, member) in preds.iter_mut().zip(&self.ensemble.members) {
                if member.model.spec.variables.iter().any(|v| v == variable) {
                    let refit = fit(&frozen(&member.model), &tr, &member.model.train_window_id)?;
                    *p = predict(&refit, &va)?;
                }
            }
        }
        self.loss.loss(&mean_rows(&preds, va.n_rows()), va.response())
    }

    fn variable(&self, variable: &str, iterations: usize, seed: u64, workers: usize) -> Result<VariableImportance> {
        check(self.ensemble, self.train, self.val, variable)?;
        if iterations == 0 {
            return Err(Error::config(MODULE, "iterations", "must be at least 1"));
        }
        let run = |i: &usize| self.permuted_loss(variable, seed, *i);
        let losses: Vec<f64> = if workers <= 1 {
            (0..iterations).collect::<Vec<_>>().iter().map(run).collect::<Result<_>>()?
        } else {
            let idx: Vec<usize> = (0..iterations).collect();
            with_workers(workers, || idx.par_iter().map(run).collect::<Result<_>>())?
        };
        let deltas: Vec<f64> = losses.iter().map(|l| l - self.baseline).collect();
        let n = deltas.len() as f64;
        let mean_delta = deltas.iter().sum::<f64>() / n;
        let std = if deltas.len() > 1 {
            (deltas.iter().map(|d| (d - mean_delta).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut acc = 0.0;
        let running_mean = losses
            .iter()
            .enumerate()
            .map(|(i, l)| {
                acc += l;
                acc / (i + 1) as f64
            })
            .collect();
        Ok(VariableImportance {
            variable: variable.to_string(),
            mean_delta,
            std,
            iterations,
            used_by: self
                .ensemble
                .members
                .iter()
                .filter(|m| m.model.spec.variables.iter().any(|v| v == variable))
                .count(),
            running_mean,
        })
    }
}

/// Importance of one variable.
pub fn permutation_importance(
    ensemble: &EnsembleModel,
    train: &FeatureTable,
    val: &FeatureTable,
    variable: &str,
    iterations: usize,
    seed: u64,
    loss: &dyn Loss,
) -> Result<VariableImportance> {
    check(ensemble, train, val, variable)?;
    Context::new(ensemble, train, val, loss)?.variable(variable, iterations, seed, 1)
}

/// Importance of every listed variable, or of every feature column when
/// `variables` is `None`.
#[allow(clippy::too_many_arguments)]
pub fn importance_report(
    ensemble: &EnsembleModel,
    train: &FeatureTable,
    val: &FeatureTable,
    variables: Option<&[String]>,
    iterations: usize,
    seed: u64,
    workers: usize,
    loss: &dyn Loss,
) -> Result<ImportanceReport> {
    let names: Vec<String> = variables.map_or_else(|| train.column_names(), <[String]>::to_vec);
    for v in &names {
        check(ensemble, train, val, v)?;
    }
    let ctx = Context::new(ensemble, train, val, loss)?;
    let mut out = names
        .iter()
        .map(|v| ctx.variable(v, iterations, seed, workers))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.mean_delta.total_cmp(&a.mean_delta).then_with(|| a.variable.cmp(&b.variable)));
    Ok(ImportanceReport {
        version: IMPORTANCE_VERSION,
        ensemble_id: ensemble.id(),
        loss: loss.name().to_string(),
        baseline: ctx.baseline,
        iterations,
        variables: out,
    })
}

/// The `k` most important variables; the flag is set when fewer than `k`
/// exist.
pub fn top_k(report: &ImportanceReport, k: usize) -> (Vec<VariableImportance>, bool) {
    let n = report.variables.len();
    (report.variables.iter().take(k).cloned().collect(), k > n)
}

pub fn write_importance_csv<W: std::io::Write>(writer: W, report: &ImportanceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::parse(MODULE, "importance csv", e.to_string());
    w.write_record(["rank", "variable", "mean_delta", "std", "iterations", "used_by"])
        .map_err(err)?;
    for (i, v) in report.variables.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            v.variable.clone(),
            format!("{}", v.mean_delta),
            format!("{}", v.std),
            v.iterations.to_string(),
            v.used_by.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::parse(MODULE, "importance csv", e.to_string()))
}

/// One row of the importance CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ImportanceRow {
    pub rank: usize,
    pub variable: String,
    pub mean_delta: f64,
    pub std: f64,
    pub iterations: usize,
    pub used_by: usize,
}

pub fn read_importance_csv<R: std::io::Read>(reader: R) -> Result<Vec<ImportanceRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| Error::parse(MODULE, "importance csv", e.to_string())))
        .collect()
}
