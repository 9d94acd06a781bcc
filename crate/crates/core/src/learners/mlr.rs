//! Multiple linear regression and the shared one-hot design matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::FitDiagnostics;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::linalg::lstsq;

const MODULE: &str = "learners";

/// One column of the expanded design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum Term {
    Numeric { name: String },
    /// 1 when the categorical column equals `level`.
    Indicator { name: String, level: u16 },
}

impl Term {
    pub fn label(&self) -> String {
        match self {
            Term::Numeric { name } => name.clone(),
            Term::Indicator { name, level } => format!("{name}={level}"),
        }
    }
}

/// Expand variables into design terms. Categorical columns get one
/// indicator per level observed in `table` except the smallest.
pub fn design_terms(table: &FeatureTable, variables: &[String]) -> Result<Vec<Term>> {
    let mut terms = Vec::new();
    for v in variables {
        let col = table
            .column(v)
            .ok_or_else(|| Error::contract(MODULE, format!("table has no column `{v}`")))?;
        if col.role.is_categorical() {
            let mut levels: Vec<u16> = col.values.iter().map(|x| *x as u16).collect();
            levels.sort_unstable();
            levels.dedup();
            terms.extend(levels.into_iter().skip(1).map(|level| Term::Indicator {
                name: v.clone(),
                level,
            }));
        } else {
            terms.push(Term::Numeric { name: v.clone() });
        }
    }
    Ok(terms)
}

/// Design columns for `terms`; levels unseen at fit time map to all zeros.
pub fn design_columns(table: &FeatureTable, terms: &[Term]) -> Result<Vec<Vec<f64>>> {
    terms
        .iter()
        .map(|t| match t {
            Term::Numeric { name } => table.values(name).map(<[f64]>::to_vec),
            Term::Indicator { name, level } => Ok(table
                .values(name)?
                .iter()
                .map(|v| if *v == f64::from(*level) { 1.0 } else { 0.0 })
                .collect()),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub terms: Vec<Term>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let cols = design_columns(table, &self.terms)?;
        let mut out = vec![self.intercept; table.n_rows()];
        for (c, b) in cols.iter().zip(&self.coefficients) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += b * v;
            }
        }
        Ok(out)
    }
}

/// OLS with intercept. Returns the model and the training residuals.
pub(crate) fn ols(table: &FeatureTable, variables: &[String]) -> Result<(LinearModel, Vec<f64>)> {
    let terms = design_terms(table, variables)?;
    let n = table.n_rows();
    if n <= terms.len() + 1 {
        return Err(Error::domain(
            MODULE,
            format!("{n} rows for {} coefficients plus intercept", terms.len()),
        ));
    }
    let mut cols = vec![vec![1.0; n]];
    cols.extend(design_columns(table, &terms)?);
    let ls = lstsq(&cols, table.response());
    if ls.rank < cols.len() {
        let names: Vec<String> = ls
            .dependent
            .iter()
            .map(|&i| if i == 0 { "(intercept)".to_string() } else { terms[i - 1].label() })
            .collect();
        return Err(Error::domain(
            MODULE,
            format!("design matrix is rank deficient; dependent columns: {}", names.join(", ")),
        ));
    }
    Ok((
        LinearModel {
            terms,
            intercept: ls.beta[0],
            coefficients: ls.beta[1..].to_vec(),
        },
        ls.residuals,
    ))
}

pub fn fit_mlr(table: &FeatureTable, variables: &[String]) -> Result<(LinearModel, FitDiagnostics)> {
    let (model, resid) = ols(table, variables)?;
    let n = resid.len();
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let k = model.coefficients.len() + 2;
    let loglik = gaussian_loglik(rss, n);
    Ok((
        model,
        FitDiagnostics {
            n_obs: n,
            rss,
            loglik: Some(loglik),
            aic: Some(2.0 * k as f64 - 2.0 * loglik),
        },
    ))
}

/// Standard errors of the OLS estimates, intercept first, from
/// `s^2 (X'X)^-1` with `s^2 = rss / (n - k)`.
pub fn coefficient_std_errors(table: &FeatureTable, variables: &[String]) -> Result<Vec<f64>> {
    let (model, resid) = ols(table, variables)?;
    let n = table.n_rows();
    let mut cols = vec![vec![1.0; n]];
    cols.extend(design_columns(table, &model.terms)?);
    let k = cols.len();
    let x = DMatrix::from_fn(n, k, |i, j| cols[j][i]);
    let xtx = x.transpose() * &x;
    let inv = xtx
        .cholesky()
        .ok_or_else(|| Error::domain(MODULE, "X'X is not positive definite"))?
        .inverse();
    let s2 = resid.iter().map(|r| r * r).sum::<f64>() / (n - k) as f64;
    Ok((0..k).map(|j| (s2 * inv[(j, j)]).sqrt()).collect())
}

/// Concentrated Gaussian log-likelihood for a residual sum of squares.
pub(crate) fn gaussian_loglik(rss: f64, n: usize) -> f64 {
    let n = n as f64;
    let sigma2 = (rss / n).max(f64::MIN_POSITIVE);
    -0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
}
