//! Subset search and change-point ensembles.
//!
//! Candidates are variable subsets for one learner family. Each is fitted on
//! the training rows, scored by MAPE over every validation row, and ranked.
//! The ranked curve is cut at its first change point and the surviving
//! models are averaged with equal weight.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::changepoint::{change_point_m, ChangePointConfig, ChangePointOutcome};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::learners::{fit, predict, LearnerKind, ModelSpec, TrainedModel};
use crate::metrics::mape;
use crate::rng::{derive_seed, stream};

const MODULE: &str = "ensemble";

/// Serialization version of [`EnsembleModel`].
pub const ENSEMBLE_VERSION: u32 = 1;

/// Above this many subsets, sampling switches from enumerate-then-pick to
/// rejection sampling.
const ENUMERATE_LIMIT: u128 = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubsetConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub cap: usize,
    pub seed: u64,
    pub always_include: Vec<String>,
}

impl Default for SubsetConfig {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: 8,
            cap: 500,
            seed: 0,
            always_include: Vec::new(),
        }
    }
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

fn combos(n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Variable subsets of sizes `k_min..=k_max` containing every
/// `always_include` name: all of them when there are at most `cap`,
/// otherwise exactly `cap` distinct ones drawn uniformly. Names keep the
/// order of `variables`.
pub fn enumerate_subsets(variables: &[String], config: &SubsetConfig) -> Result<Vec<Vec<String>>> {
    let n = variables.len();
    if config.k_min == 0 || config.k_min > config.k_max {
        return Err(Error::config(MODULE, "k_min", format!("need 1 <= k_min <= k_max, got {}..{}", config.k_min, config.k_max)));
    }
    if config.k_min > n {
        return Err(Error::config(MODULE, "k_min", format!("k_min {} exceeds {n} variables", config.k_min)));
    }
    if config.cap == 0 {
        return Err(Error::config(MODULE, "cap", "must be at least 1"));
    }
    let unique: BTreeSet<&String> = variables.iter().collect();
    if unique.len() != n {
        return Err(Error::config(MODULE, "variables", "duplicate variable names"));
    }
    let forced: BTreeSet<&String> = config.always_include.iter().collect();
    if let Some(missing) = forced.iter().find(|f| !unique.contains(**f)) {
        return Err(Error::config(MODULE, "always_include", format!("`{missing}` is not a candidate variable")));
    }
    let forced_idx: Vec<usize> = (0..n).filter(|&i| forced.contains(&variables[i])).collect();
    let free_idx: Vec<usize> = (0..n).filter(|&i| !forced.contains(&variables[i])).collect();
    let nf = free_idx.len();
    let sizes: Vec<usize> = (config.k_min..=config.k_max.min(n))
        .filter(|&k| k >= forced_idx.len())
        .map(|k| k - forced_idx.len())
        .collect();
    let total: u128 = sizes.iter().map(|&s| binom(nf, s)).fold(0, u128::saturating_add);
    let assemble = |free: &[usize]| -> Vec<String> {
        let mut idx: Vec<usize> = forced_idx.iter().copied().chain(free.iter().map(|&f| free_idx[f])).collect();
        idx.sort_unstable();
        idx.into_iter().map(|i| variables[i].clone()).collect()
    };
    if total == 0 {
        return Err(Error::config(MODULE, "k_max", "no subset size can hold every always_include variable"));
    }
    if total <= config.cap as u128 || total <= ENUMERATE_LIMIT {
        let mut all = Vec::new();
        for &s in &sizes {
            combos(nf, s, &mut all);
        }
        if all.len() <= config.cap {
            return Ok(all.iter().map(|c| assemble(c)).collect());
        }
        let mut rng = stream(config.seed, &["ensemble", "subsets"]);
        let mut picked: Vec<usize> = sample(&mut rng, all.len(), config.cap).into_vec();
        picked.sort_unstable();
        return Ok(picked.into_iter().map(|i| assemble(&all[i])).collect());
    }
    let mut rng = stream(config.seed, &["ensemble", "subsets"]);
    let weights: Vec<f64> = sizes.iter().map(|&s| binom(nf, s) as f64).collect();
    let wsum: f64 = weights.iter().sum();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(config.cap);
    while out.len() < config.cap {
        let mut r = rng.random_range(0.0..wsum);
        let mut size = sizes[sizes.len() - 1];
        for (s, w) in sizes.iter().zip(&weights) {
            if r < *w {
                size = *s;
                break;
            }
            r -= w;
        }
        let mut pick = sample(&mut rng, nf, size).into_vec();
        pick.sort_unstable();
        if seen.insert(pick.clone()) {
            out.push(assemble(&pick));
        }
    }
    Ok(out)
}

/// Specs for one family over the given subsets. Each spec's seed is derived
/// from the global seed and the hash of the spec without its seed.
pub fn candidate_specs(
    kind: LearnerKind,
    subsets: &[Vec<String>],
    lead_time: u32,
    overrides: &BTreeMap<String, f64>,
    seed: u64,
) -> Vec<ModelSpec> {
    subsets
        .iter()
        .map(|vars| {
            let mut spec = ModelSpec::new(kind, vars.clone(), lead_time, 0);
            for (k, v) in overrides {
                spec.hyperparams.insert(k.clone(), *v);
            }
            let h = spec.hash();
            spec.seed = derive_seed(seed, &["ensemble", "spec", &h]);
            spec
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub spec: ModelSpec,
    pub mape: f64,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failed {
    pub spec: ModelSpec,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Ascending by MAPE, ties by spec hash.
    pub ranked: Vec<Ranked>,
    pub failed: Vec<Failed>,
}

/// Predictions pooled over several validation tables.
fn pooled(model: &TrainedModel, vals: &[&FeatureTable]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut p = Vec::new();
    let mut y = Vec::new();
    for v in vals {
        p.extend(predict(model, v)?);
        y.extend_from_slice(v.response());
    }
    Ok((p, y))
}

fn score(spec: &ModelSpec, train: &FeatureTable, vals: &[&FeatureTable], window_id: &str) -> Result<f64> {
    let model = fit(spec, train, window_id)?;
    let (p, y) = pooled(&model, vals)?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(MODULE, "non-finite prediction"));
    }
    mape(&p, &y)
}

pub(crate) fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers <= 1 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Fit every candidate on `train`, score on `vals`, and rank. Failed fits
/// are reported separately and never abort the search.
pub fn evaluate_candidates(
    specs: &[ModelSpec],
    train: &FeatureTable,
    vals: &[&FeatureTable],
    workers: usize,
    window_id: &str,
) -> Result<Evaluation> {
    let mut seen = BTreeSet::new();
    let unique: Vec<&ModelSpec> = specs.iter().filter(|s| seen.insert(s.hash())).collect();
    let run = |s: &&ModelSpec| score(s, train, vals, window_id);
    let results: Vec<Result<f64>> = if workers <= 1 {
        unique.iter().map(run).collect()
    } else {
        with_workers(workers, || unique.par_iter().map(run).collect())
    };
    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    for (spec, r) in unique.into_iter().zip(results) {
        match r {
            Ok(m) if m.is_finite() => ranked.push(Ranked {
                spec: spec.clone(),
                mape: m,
                hash: spec.hash(),
            }),
            Ok(m) => failed.push(Failed {
                spec: spec.clone(),
                error: format!("MAPE {m}"),
            }),
            Err(e) => failed.push(Failed {
                spec: spec.clone(),
                error: e.to_string(),
            }),
        }
    }
    if ranked.is_empty() {
        let first = failed.first().map_or_else(String::new, |f| format!(" (first: {})", f.error));
        return Err(Error::domain(MODULE, format!("all {} candidates failed{first}", failed.len())));
    }
    ranked.sort_by(|a, b| a.mape.total_cmp(&b.mape).then_with(|| a.hash.cmp(&b.hash)));
    Ok(Evaluation { ranked, failed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub model: TrainedModel,
    pub validation_mape: f64,
}

/// Equal-weight average of the top-M models of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleModel {
    pub version: u32,
    pub kind: LearnerKind,
    pub m: usize,
    /// The ensemble's own validation MAPE.
    pub mape0: f64,
    pub members: Vec<Member>,
}

impl EnsembleModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: EnsembleModel =
            serde_json::from_str(s).map_err(|e| Error::parse(MODULE, "ensemble json", e.to_string()))?;
        if e.version != ENSEMBLE_VERSION {
            return Err(Error::parse(MODULE, "ensemble json", format!("unsupported version {}", e.version)));
        }
        if e.m == 0 || e.members.len() != e.m {
            return Err(Error::parse(MODULE, "ensemble json", "member count does not match m"));
        }
        Ok(e)
    }

    pub fn id(&self) -> String {
        crate::rng::sha256_hex(self.to_json().as_bytes())
    }
}

/// Refit the best `m` candidates and record the ensemble's validation MAPE.
pub fn build_ensemble(
    ranked: &[Ranked],
    m: usize,
    train: &FeatureTable,
    vals: &[&FeatureTable],
    window_id: &str,
) -> Result<EnsembleModel> {
    if m == 0 {
        return Err(Error::contract(MODULE, "ensemble size M must be at least 1"));
    }
    if m > ranked.len() {
        return Err(Error::contract(MODULE, format!("M = {m} exceeds {} ranked candidates", ranked.len())));
    }
    let kind = ranked[0].spec.kind;
    if ranked[..m].iter().any(|r| r.spec.kind != kind) {
        return Err(Error::contract(MODULE, "ensemble members must share one learner family"));
    }
    let members = ranked[..m]
        .iter()
        .map(|r| {
            Ok(Member {
                model: fit(&r.spec, train, window_id)?,
                validation_mape: r.mape,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut e = EnsembleModel {
        version: ENSEMBLE_VERSION,
        kind,
        m,
        mape0: f64::NAN,
        members,
    };
    let mut p = Vec::new();
    let mut y = Vec::new();
    for v in vals {
        p.extend(ensemble_predict(&e, v)?);
        y.extend_from_slice(v.response());
    }
    e.mape0 = mape(&p, &y)?;
    Ok(e)
}

/// Arithmetic mean of member predictions.
pub fn ensemble_predict(ensemble: &EnsembleModel, table: &FeatureTable) -> Result<Vec<f64>> {
    let preds = member_predictions(ensemble, table)?;
    Ok(mean_rows(&preds, table.n_rows()))
}

pub fn member_predictions(ensemble: &EnsembleModel, table: &FeatureTable) -> Result<Vec<Vec<f64>>> {
    if ensemble.members.is_empty() {
        return Err(Error::contract(MODULE, "ensemble has no members"));
    }
    ensemble.members.iter().map(|m| predict(&m.model, table)).collect()
}

pub(crate) fn mean_rows(preds: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut sum = vec![0.0; n];
    for p in preds {
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    let m = preds.len() as f64;
    sum.into_iter().map(|s| s / m).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub subsets: SubsetConfig,
    /// Hyperparameter overrides applied to every candidate.
    pub hyperparams: BTreeMap<String, f64>,
    /// Absolute MAPE threshold; when absent, `threshold_factor` times the
    /// best candidate's MAPE.
    pub threshold: Option<f64>,
    pub threshold_factor: f64,
    pub changepoint: ChangePointConfig,
    /// Upper bound on M applied after change-point selection.
    pub max_members: Option<usize>,
    pub workers: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            subsets: SubsetConfig::default(),
            hyperparams: BTreeMap::new(),
            threshold: None,
            threshold_factor: 2.0,
            changepoint: ChangePointConfig::default(),
            max_members: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub ensemble: EnsembleModel,
    pub evaluation: Evaluation,
    pub changepoint: ChangePointOutcome,
    pub threshold: f64,
}

/// M for a ranked list under `config`.
pub fn choose_m(ranked: &[Ranked], config: &SearchConfig) -> Result<(usize, ChangePointOutcome, f64)> {
    let mapes: Vec<f64> = ranked.iter().map(|r| r.mape).collect();
    let threshold = config.threshold.unwrap_or(config.threshold_factor * mapes[0]);
    let cp = if mapes.len() >= 2 {
        change_point_m(&mapes, Some(threshold), &config.changepoint)?
    } else {
        ChangePointOutcome {
            m: 1,
            changepoints: Vec::new(),
            kept: 1,
            sigma: 0.0,
            penalty: 0.0,
            fallback: true,
        }
    };
    let m = cp.m.min(config.max_members.unwrap_or(usize::MAX)).clamp(1, ranked.len());
    Ok((m, cp, threshold))
}

/// Full search for one family: enumerate, evaluate, cut, refit.
pub fn search(
    kind: LearnerKind,
    variables: &[String],
    train: &FeatureTable,
    vals: &[&FeatureTable],
    config: &SearchConfig,
    seed: u64,
    window_id: &str,
) -> Result<SearchOutcome> {
    let subsets = enumerate_subsets(variables, &config.subsets)?;
    let specs = candidate_specs(kind, &subsets, train.lead_time(), &config.hyperparams, seed);
    let evaluation = evaluate_candidates(&specs, train, vals, config.workers, window_id)?;
    let (m, changepoint, threshold) = choose_m(&evaluation.ranked, config)?;
    let ensemble = build_ensemble(&evaluation.ranked, m, train, vals, window_id)?;
    Ok(SearchOutcome {
        ensemble,
        evaluation,
        changepoint,
        threshold,
    })
}

/// Sorted validation-MAPE curve: one row per ranked candidate.
pub fn write_curve_csv<W: std::io::Write>(writer: W, evaluation: &Evaluation) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::parse(MODULE, "curve csv", e.to_string());
    w.write_record(["rank", "mape", "spec_hash", "variables"]).map_err(err)?;
    for (i, r) in evaluation.ranked.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            format!("{}", r.mape),
            r.hash.clone(),
            r.spec.variables.join(";"),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::parse(MODULE, "curve csv", e.to_string()))
}

/// One row of the curve CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CurveRow {
    pub rank: usize,
    pub mape: f64,
    pub spec_hash: String,
    /// Variables joined by `;`.
    pub variables: String,
}

pub fn read_curve_csv<R: std::io::Read>(reader: R) -> Result<Vec<CurveRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| Error::parse(MODULE, "curve csv", e.to_string())))
        .collect()
}
