//! Random forest regression.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{build, Presorted, Tree, TreeParams};
use super::{columns_of, FitDiagnostics, ModelSpec};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::rng::stream;

const MODULE: &str = "learners";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; 0 means `ceil(#variables / 3)`.
    pub mtry: usize,
    pub min_leaf: usize,
    pub sample_fraction: f64,
    /// Draw rows with replacement; otherwise without.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: 0,
            min_leaf: 5,
            sample_fraction: 1.0,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Ok(Self {
            n_trees: spec.param("n_trees")? as usize,
            mtry: spec.param("mtry")? as usize,
            min_leaf: spec.param("min_leaf")? as usize,
            sample_fraction: spec.param("sample_fraction")?,
            bootstrap: spec.param("bootstrap")? != 0.0,
        })
    }

    pub fn effective_mtry(&self, n_vars: usize) -> usize {
        if self.mtry == 0 {
            n_vars.div_ceil(3).max(1)
        } else {
            self.mtry
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub variables: Vec<String>,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let data = columns_of(table, &self.variables)?;
        let cols: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let n_trees = self.trees.len() as f64;
        Ok((0..table.n_rows())
            .map(|i| self.trees.iter().map(|t| t.predict_at(&cols, i)).sum::<f64>() / n_trees)
            .collect())
    }
}

/// Row weights for one tree: bootstrap counts, or 0/1 for a subsample.
pub(crate) fn draw_weights<R: Rng>(n: usize, fraction: f64, bootstrap: bool, rng: &mut R) -> Vec<f64> {
    let m = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut w = vec![0.0; n];
    if bootstrap {
        for _ in 0..m {
            w[rng.random_range(0..n)] += 1.0;
        }
    } else if m == n {
        w.iter_mut().for_each(|v| *v = 1.0);
    } else {
        for i in sample(rng, n, m) {
            w[i] = 1.0;
        }
    }
    w
}

pub fn fit_rf(
    table: &FeatureTable,
    variables: &[String],
    params: &ForestParams,
    seed: u64,
) -> Result<(Forest, FitDiagnostics)> {
    let n = table.n_rows();
    if n == 0 {
        return Err(Error::domain(MODULE, "random forest on an empty table"));
    }
    if params.n_trees == 0 {
        return Err(Error::config(MODULE, "n_trees", "must be at least 1"));
    }
    let data = columns_of(table, variables)?;
    let cols: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
    let sorted = Presorted::new(&cols);
    let tree_params = TreeParams {
        max_depth: usize::MAX,
        min_leaf: params.min_leaf as f64,
        lambda: 0.0,
        mtry: params.effective_mtry(variables.len()),
    };
    let y = table.response();
    let trees: Vec<Tree> = (0..params.n_trees)
        .map(|i| {
            let mut rng = stream(seed, &["rf", "tree", &i.to_string()]);
            let w = draw_weights(n, params.sample_fraction, params.bootstrap, &mut rng);
            build(&cols, &sorted, y, &w, &tree_params, &mut rng)
        })
        .collect();
    let forest = Forest {
        variables: variables.to_vec(),
        trees,
    };
    let fitted = forest.predict(table)?;
    let rss = fitted.iter().zip(y).map(|(f, y)| (f - y).powi(2)).sum();
    Ok((
        forest,
        FitDiagnostics {
            n_obs: n,
            rss,
            loglik: None,
            aic: None,
        },
    ))
}
