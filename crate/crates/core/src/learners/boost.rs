//! Gradient-boosted regression trees with squared-error loss.

use serde::{Deserialize, Serialize};

use super::tree::{build, Presorted, Tree, TreeParams};
use super::{columns_of, FitDiagnostics, ModelSpec};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::rng::stream;

const MODULE: &str = "learners";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub learning_rate: f64,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub lambda: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            n_trees: 1000,
            max_depth: 3,
            min_leaf: 5,
            lambda: 1.0,
        }
    }
}

impl BoostParams {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Ok(Self {
            learning_rate: spec.param("learning_rate")?,
            n_trees: spec.param("n_trees")? as usize,
            max_depth: spec.param("max_depth")? as usize,
            min_leaf: spec.param("min_leaf")? as usize,
            lambda: spec.param("lambda")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub variables: Vec<String>,
    /// Training mean.
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl Boosted {
    pub fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let data = columns_of(table, &self.variables)?;
        let cols: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        Ok((0..table.n_rows())
            .map(|i| self.base + self.learning_rate * self.trees.iter().map(|t| t.predict_at(&cols, i)).sum::<f64>())
            .collect())
    }
}

pub fn fit_gbt(table: &FeatureTable, variables: &[String], params: &BoostParams) -> Result<(Boosted, FitDiagnostics)> {
    let n = table.n_rows();
    if n == 0 {
        return Err(Error::domain(MODULE, "boosting on an empty table"));
    }
    if params.n_trees == 0 {
        return Err(Error::config(MODULE, "n_trees", "must be at least 1"));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::config(MODULE, "learning_rate", "must lie in (0, 1]"));
    }
    let data = columns_of(table, variables)?;
    let cols: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
    let sorted = Presorted::new(&cols);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf as f64,
        lambda: params.lambda,
        mtry: variables.len(),
    };
    let y = table.response();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut f = vec![base; n];
    let weight = vec![1.0; n];
    // no per-node sampling, so the stream is never drawn from
    let mut rng = stream(0, &["gbt"]);
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut resid = vec![0.0; n];
    for _ in 0..params.n_trees {
        for i in 0..n {
            resid[i] = y[i] - f[i];
        }
        let tree = build(&cols, &sorted, &resid, &weight, &tree_params, &mut rng);
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += params.learning_rate * tree.predict_at(&cols, i);
        }
        trees.push(tree);
    }
    let rss = f.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((
        Boosted {
            variables: variables.to_vec(),
            base,
            learning_rate: params.learning_rate,
            trees,
        },
        FitDiagnostics {
            n_obs: n,
            rss,
            loglik: None,
            aic: None,
        },
    ))
}
