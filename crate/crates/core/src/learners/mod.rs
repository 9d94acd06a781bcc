//! The four base learners behind one fit/predict contract.
//!
//! | kind     | model                                                   |
//! |----------|---------------------------------------------------------|
//! | `MLR`    | ordinary least squares                                  |
//! | `ARIMAX` | OLS regression with ARIMA(p,d,q) errors, two-stage fit  |
//! | `RF`     | random forest of CART regression trees                  |
//! | `GBT`    | gradient-boosted trees with L2 leaf shrinkage           |
//!
//! MLR and ARIMAX one-hot encode categorical columns (first observed level
//! dropped); the tree learners split on category codes directly.

pub mod arima;
pub mod boost;
pub mod forest;
pub mod mlr;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::rng::sha256_hex;

const MODULE: &str = "learners";

/// Serialization version of [`TrainedModel`].
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    #[serde(rename = "MLR")]
    Mlr,
    #[serde(rename = "ARIMAX")]
    Arimax,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "GBT")]
    Gbt,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [LearnerKind::Mlr, LearnerKind::Arimax, LearnerKind::Rf, LearnerKind::Gbt];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Mlr => "MLR",
            LearnerKind::Arimax => "ARIMAX",
            LearnerKind::Rf => "RF",
            LearnerKind::Gbt => "GBT",
        }
    }

    /// Name of the ensemble built from this family.
    pub fn ensemble_name(self) -> &'static str {
        match self {
            LearnerKind::Mlr => "ELR",
            LearnerKind::Arimax => "ETS",
            LearnerKind::Rf => "ERF",
            LearnerKind::Gbt => "EXGBoost",
        }
    }

    /// Default hyperparameters.
    pub fn defaults(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            LearnerKind::Mlr => &[],
            LearnerKind::Arimax => &[("exogenous", 1.0), ("max_p", 3.0), ("max_d", 1.0), ("max_q", 3.0)],
            LearnerKind::Rf => &[
                ("n_trees", 500.0),
                ("mtry", 0.0),
                ("min_leaf", 5.0),
                ("sample_fraction", 1.0),
                ("bootstrap", 1.0),
            ],
            LearnerKind::Gbt => &[
                ("learning_rate", 0.01),
                ("n_trees", 1000.0),
                ("max_depth", 3.0),
                ("min_leaf", 5.0),
                ("lambda", 1.0),
            ],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s) || k.ensemble_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(MODULE, "kind", format!("unknown learner `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// What to fit: learner family, variable subset, hyperparameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: LearnerKind,
    pub variables: Vec<String>,
    /// ARIMAX only. `None` selects the order by AIC at fit time.
    pub arima_order: Option<ArimaOrder>,
    pub hyperparams: BTreeMap<String, f64>,
    pub lead_time: u32,
    pub seed: u64,
}

impl ModelSpec {
    /// A spec with default hyperparameters.
    pub fn new(kind: LearnerKind, variables: Vec<String>, lead_time: u32, seed: u64) -> Self {
        Self {
            kind,
            variables,
            arima_order: None,
            hyperparams: kind.defaults(),
            lead_time,
            seed,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.hyperparams.insert(key.to_string(), value);
        self
    }

    pub fn with_order(mut self, order: ArimaOrder) -> Self {
        self.arima_order = Some(order);
        self
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("spec serializes").as_bytes())
    }

    pub fn param(&self, key: &str) -> Result<f64> {
        self.hyperparams
            .get(key)
            .copied()
            .ok_or_else(|| Error::config(MODULE, key, format!("missing hyperparameter for {}", self.kind)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.lead_time == 0 {
            return Err(Error::config(MODULE, "lead_time", "must be at least 1"));
        }
        let defaults = self.kind.defaults();
        for (k, v) in &self.hyperparams {
            if !defaults.contains_key(k) {
                return Err(Error::config(MODULE, k.clone(), format!("not a {} hyperparameter", self.kind)));
            }
            if !v.is_finite() {
                return Err(Error::config(MODULE, k.clone(), "must be finite"));
            }
        }
        for k in defaults.keys() {
            self.param(k)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(v) = self.variables.iter().find(|v| !seen.insert(v.as_str())) {
            return Err(Error::config(MODULE, "variables", format!("duplicate variable `{v}`")));
        }
        if let Some(o) = self.arima_order {
            if self.kind != LearnerKind::Arimax {
                return Err(Error::config(MODULE, "arima_order", "only valid for ARIMAX"));
            }
            if o.p > 3 || o.q > 3 || o.d > 1 {
                return Err(Error::config(MODULE, "arima_order", format!("{o} outside p,q <= 3, d <= 1")));
            }
        }
        match self.kind {
            LearnerKind::Rf => {
                let n_trees = self.param("n_trees")?;
                let mtry = self.param("mtry")?;
                if n_trees < 1.0 || n_trees.fract() != 0.0 {
                    return Err(Error::config(MODULE, "n_trees", "must be a positive integer"));
                }
                if mtry < 0.0 || mtry.fract() != 0.0 || mtry > self.variables.len() as f64 {
                    return Err(Error::config(MODULE, "mtry", "must be an integer in 0..=#variables (0 = auto)"));
                }
                check_positive_int(self, "min_leaf")?;
                let f = self.param("sample_fraction")?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::config(MODULE, "sample_fraction", "must lie in (0, 1]"));
                }
                let b = self.param("bootstrap")?;
                if b != 0.0 && b != 1.0 {
                    return Err(Error::config(MODULE, "bootstrap", "must be 0 or 1"));
                }
            }
            LearnerKind::Gbt => {
                let lr = self.param("learning_rate")?;
                if !(lr > 0.0 && lr <= 1.0) {
                    return Err(Error::config(MODULE, "learning_rate", "must lie in (0, 1]"));
                }
                check_positive_int(self, "n_trees")?;
                check_positive_int(self, "max_depth")?;
                check_positive_int(self, "min_leaf")?;
                if self.param("lambda")? < 0.0 {
                    return Err(Error::config(MODULE, "lambda", "must be nonnegative"));
                }
            }
            LearnerKind::Arimax => {
                let (p, d, q) = (self.param("max_p")?, self.param("max_d")?, self.param("max_q")?);
                if !(0.0..=3.0).contains(&p) || !(0.0..=1.0).contains(&d) || !(0.0..=3.0).contains(&q) {
                    return Err(Error::config(MODULE, "max_p", "grid bounds are p,q <= 3, d <= 1"));
                }
            }
            LearnerKind::Mlr => {}
        }
        Ok(())
    }
}

fn check_positive_int(spec: &ModelSpec, key: &str) -> Result<()> {
    let v = spec.param(key)?;
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::config(MODULE, key.to_string(), "must be a positive integer"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n_obs: usize,
    pub rss: f64,
    pub loglik: Option<f64>,
    pub aic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parameters {
    Linear(mlr::LinearModel),
    Arimax(arima::ArimaxModel),
    Forest(forest::Forest),
    Boost(boost::Boosted),
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedModel {
    pub version: u32,
    pub spec: ModelSpec,
    pub train_window_id: String,
    pub diagnostics: FitDiagnostics,
    pub parameters: Parameters,
}

impl TrainedModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel =
            serde_json::from_str(s).map_err(|e| Error::parse(MODULE, "model json", e.to_string()))?;
        if m.version != MODEL_VERSION {
            return Err(Error::parse(MODULE, "model json", format!("unsupported version {}", m.version)));
        }
        Ok(m)
    }
}

pub(crate) fn check_columns(table: &FeatureTable, variables: &[String]) -> Result<()> {
    if let Some(v) = variables.iter().find(|v| table.column(v).is_none()) {
        return Err(Error::contract(MODULE, format!("table has no column `{v}`")));
    }
    Ok(())
}

/// Fit `spec` on `table`.
pub fn fit(spec: &ModelSpec, table: &FeatureTable, train_window_id: &str) -> Result<TrainedModel> {
    spec.validate()?;
    check_columns(table, &spec.variables)?;
    if spec.lead_time != table.lead_time() {
        return Err(Error::contract(
            MODULE,
            format!("spec lead {} vs table lead {}", spec.lead_time, table.lead_time()),
        ));
    }
    let (parameters, diagnostics, spec) = match spec.kind {
        LearnerKind::Mlr => {
            let (m, d) = mlr::fit_mlr(table, &spec.variables)?;
            (Parameters::Linear(m), d, spec.clone())
        }
        LearnerKind::Arimax => {
            let exogenous = spec.param("exogenous")? != 0.0;
            let grid = arima::Grid {
                max_p: spec.param("max_p")? as usize,
                max_d: spec.param("max_d")? as usize,
                max_q: spec.param("max_q")? as usize,
            };
            let vars: &[String] = if exogenous { &spec.variables } else { &[] };
            let (m, d) = match spec.arima_order {
                Some(order) => arima::fit_arimax(table, vars, order)?,
                None => arima::fit_auto(table, vars, grid)?,
            };
            (Parameters::Arimax(m), d, spec.clone())
        }
        LearnerKind::Rf => {
            let params = forest::ForestParams::from_spec(spec)?;
            let (m, d) = forest::fit_rf(table, &spec.variables, &params, spec.seed)?;
            (Parameters::Forest(m), d, spec.clone())
        }
        LearnerKind::Gbt => {
            let params = boost::BoostParams::from_spec(spec)?;
            let (m, d) = boost::fit_gbt(table, &spec.variables, &params)?;
            (Parameters::Boost(m), d, spec.clone())
        }
    };
    Ok(TrainedModel {
        version: MODEL_VERSION,
        spec,
        train_window_id: train_window_id.to_string(),
        diagnostics,
        parameters,
    })
}

/// One prediction per row of `table`.
pub fn predict(model: &TrainedModel, table: &FeatureTable) -> Result<Vec<f64>> {
    check_columns(table, &model.spec.variables)?;
    match &model.parameters {
        Parameters::Linear(m) => m.predict(table),
        Parameters::Arimax(m) => m.predict(table),
        Parameters::Forest(m) => m.predict(table),
        Parameters::Boost(m) => m.predict(table),
    }
}

/// Feature-major matrix of the named columns.
pub(crate) fn columns_of(table: &FeatureTable, variables: &[String]) -> Result<Vec<Vec<f64>>> {
    variables.iter().map(|v| table.values(v).map(<[f64]>::to_vec)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in LearnerKind::ALL {
            let spec = ModelSpec::new(kind, vec!["a".into(), "b".into(), "c".into()], 1, 0);
            spec.validate().unwrap();
        }
        let bad = ModelSpec::new(LearnerKind::Gbt, vec![], 1, 0).with_param("n_trees", 0.0);
        assert!(matches!(bad.validate(), Err(Error::Config { .. })));
        let bad = ModelSpec::new(LearnerKind::Mlr, vec![], 1, 0).with_param("lambda", 1.0);
        assert!(bad.validate().is_err());
        let bad = ModelSpec::new(LearnerKind::Arimax, vec![], 1, 0).with_order(ArimaOrder::new(4, 0, 0));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ModelSpec::new(LearnerKind::Rf, vec!["x".into()], 1, 0);
        let b = ModelSpec::new(LearnerKind::Rf, vec!["x".into()], 1, 1);
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!("elr".parse::<LearnerKind>().unwrap(), LearnerKind::Mlr);
        assert_eq!("GBT".parse::<LearnerKind>().unwrap(), LearnerKind::Gbt);
    }
}
