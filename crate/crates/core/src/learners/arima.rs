//! Regression with ARIMA errors, fitted in two stages: OLS of the response
//! on the variables, then ARMA(p, q) on the d-times differenced residuals by
//! conditional sum of squares.
//!
//! The residual series is indexed by table row (origin week). When
//! predicting a row with origin `t`, only residuals whose response week is
//! at most `t` are treated as known, i.e. origins up to `t - lead_time`.

use serde::{Deserialize, Serialize};

use super::mlr::{gaussian_loglik, ols, LinearModel};
use super::{ArimaOrder, FitDiagnostics};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::linalg::{lstsq, solve};

const MODULE: &str = "learners";

/// Reflection coefficients must stay strictly inside this bound.
const UNIT_BOUND: f64 = 0.9999;

/// Order grid for AIC selection (inclusive bounds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub max_p: usize,
    pub max_d: usize,
    pub max_q: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            max_p: 3,
            max_d: 1,
            max_q: 3,
        }
    }
}

impl Grid {
    pub fn orders(&self) -> Vec<ArimaOrder> {
        let mut out = Vec::new();
        for d in 0..=self.max_d {
            for p in 0..=self.max_p {
                for q in 0..=self.max_q {
                    out.push(ArimaOrder::new(p, d, q));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaxModel {
    pub regression: LinearModel,
    pub order: ArimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub lead_time: u32,
    /// Origin weeks of the training rows.
    pub history_weeks: Vec<u32>,
    /// Regression residuals of the training rows.
    pub history_residuals: Vec<f64>,
}

/// `d`-th difference.
pub fn difference(u: &[f64], d: usize) -> Vec<f64> {
    let mut w = u.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|p| p[1] - p[0]).collect();
    }
    w
}

/// Whether `1 - a_1 z - ... - a_p z^p` has all roots outside the unit circle,
/// checked through the step-down recursion.
pub fn is_stationary(a: &[f64]) -> bool {
    let mut a = a.to_vec();
    while let Some(&k) = a.last() {
        if !k.is_finite() || k.abs() >= UNIT_BOUND {
            return false;
        }
        let p = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..p - 1).map(|i| (a[i] + k * a[p - 2 - i]) / denom).collect();
        a = next;
    }
    true
}

/// MA polynomial `1 + θ_1 z + ...` invertible.
pub fn is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    is_stationary(&neg)
}

/// Conditional residuals `e_i` for `i >= start` (zeros before).
pub fn css_residuals(w: &[f64], ar: &[f64], ma: &[f64], start: usize) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for i in start..w.len() {
        let mut pred = 0.0;
        for (a, phi) in ar.iter().enumerate() {
            pred += phi * w[i - a - 1];
        }
        for (b, theta) in ma.iter().enumerate() {
            if i > start + b {
                pred += theta * e[i - b - 1];
            }
        }
        e[i] = w[i] - pred;
    }
    e
}

fn css(w: &[f64], ar: &[f64], ma: &[f64], start: usize) -> f64 {
    if !is_stationary(ar) || !is_invertible(ma) {
        return f64::INFINITY;
    }
    let e = css_residuals(w, ar, ma, start);
    let s: f64 = e[start..].iter().map(|v| v * v).sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

/// Result of one ARMA fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaFit {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub css: f64,
    pub n_eff: usize,
}

fn lagged(w: &[f64], rows: std::ops::Range<usize>, lag: usize) -> Vec<f64> {
    rows.map(|i| w[i - lag]).collect()
}

/// Hannan-Rissanen starting values.
fn hannan_rissanen(w: &[f64], p: usize, q: usize, start: usize) -> (Vec<f64>, Vec<f64>) {
    let n = w.len();
    if q == 0 {
        if p == 0 {
            return (vec![], vec![]);
        }
        let cols: Vec<Vec<f64>> = (1..=p).map(|a| lagged(w, start..n, a)).collect();
        return (lstsq(&cols, &w[start..]).beta, vec![]);
    }
    let m = (p + q + 2).min((n - start) / 4).max(1);
    let long_start = m.max(start);
    let cols: Vec<Vec<f64>> = (1..=m).map(|a| lagged(w, long_start..n, a)).collect();
    let phi_long = lstsq(&cols, &w[long_start..]).beta;
    let mut ehat = vec![0.0; n];
    for i in long_start..n {
        ehat[i] = w[i] - (1..=m).map(|a| phi_long[a - 1] * w[i - a]).sum::<f64>();
    }
    let s2 = (long_start + q).max(start);
    if n <= s2 + p + q + 2 {
        return (vec![0.0; p], vec![0.0; q]);
    }
    let mut cols: Vec<Vec<f64>> = (1..=p).map(|a| lagged(w, s2..n, a)).collect();
    cols.extend((1..=q).map(|b| lagged(&ehat, s2..n, b)));
    let beta = lstsq(&cols, &w[s2..]).beta;
    (beta[..p].to_vec(), beta[p..].to_vec())
}

/// ARMA(p, q) by conditional sum of squares over `w[start..]`, using
/// Levenberg-Marquardt from Hannan-Rissanen starting values. `None` when no
/// stationary, invertible estimate is found.
pub fn fit_arma_css(w: &[f64], p: usize, q: usize, start: usize) -> Option<ArmaFit> {
    if start < p || w.len() <= start + p + q {
        return None;
    }
    let n_eff = w.len() - start;
    let (mut ar, mut ma) = hannan_rissanen(w, p, q, start);
    if q == 0 {
        let s = css(w, &ar, &ma, start);
        return s.is_finite().then_some(ArmaFit { ar, ma, css: s, n_eff });
    }
    for _ in 0..60 {
        if is_stationary(&ar) && is_invertible(&ma) {
            break;
        }
        ar.iter_mut().chain(ma.iter_mut()).for_each(|v| *v *= 0.5);
    }
    let k = p + q;
    let mut x: Vec<f64> = ar.iter().chain(&ma).copied().collect();
    let eval = |x: &[f64]| css(w, &x[..p], &x[p..], start);
    let resid = |x: &[f64]| css_residuals(w, &x[..p], &x[p..], start)[start..].to_vec();
    let mut ss = eval(&x);
    if !ss.is_finite() {
        return None;
    }
    let mut mu = 1e-3;
    for _ in 0..100 {
        let e0 = resid(&x);
        let mut jac: Vec<Vec<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            let h = 1e-7 * x[i].abs().max(1.0);
            let mut xh = x.clone();
            xh[i] += h;
            let eh = resid(&xh);
            jac.push(eh.iter().zip(&e0).map(|(a, b)| (a - b) / h).collect());
        }
        let g: Vec<f64> = jac.iter().map(|c| c.iter().zip(&e0).map(|(a, b)| a * b).sum()).collect();
        let a: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| jac[i].iter().zip(&jac[j]).map(|(p, q)| p * q).sum()).collect())
            .collect();
        let mut improved = false;
        while mu < 1e12 {
            let cols: Vec<Vec<f64>> = (0..k)
                .map(|j| {
                    (0..k)
                        .map(|i| if i == j { a[i][j] * (1.0 + mu) + mu * 1e-12 } else { a[i][j] })
                        .collect()
                })
                .collect();
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(delta) = solve(&cols, &rhs) else {
                mu *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
            let sn = eval(&xn);
            if sn < ss {
                let gain = ss - sn;
                x = xn;
                ss = sn;
                mu = (mu / 10.0).max(1e-12);
                improved = gain > 1e-12 * ss.max(f64::MIN_POSITIVE);
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let (ar, ma) = (x[..p].to_vec(), x[p..].to_vec());
    (is_stationary(&ar) && is_invertible(&ma) && ss.is_finite()).then_some(ArmaFit { ar, ma, css: ss, n_eff })
}

/// AIC of an ARMA fit with `n_reg` regression coefficients (intercept
/// included) and the innovation variance counted as parameters.
pub fn arma_aic(fit: &ArmaFit, n_reg: usize) -> f64 {
    let k = fit.ar.len() + fit.ma.len() + 1 + n_reg;
    2.0 * k as f64 - 2.0 * gaussian_loglik(fit.css, fit.n_eff)
}

/// Residual-series length needed for an order: more than
/// `p + q + d + n_reg + 10`.
fn long_enough(n: usize, order: ArimaOrder, n_reg: usize) -> bool {
    n > order.p + order.q + order.d + n_reg + 10
}

/// Evaluate every grid order on the residual series `u`. Every order is
/// scored over the same original indices (`>= max_p + max_d`) so the AICs
/// are comparable. Discarded orders map to `None`.
pub fn grid_aic(u: &[f64], grid: Grid, n_reg: usize) -> Vec<(ArimaOrder, Option<f64>)> {
    let origin = grid.max_p + grid.max_d;
    grid.orders()
        .into_iter()
        .map(|o| {
            if !long_enough(u.len(), o, n_reg) {
                return (o, None);
            }
            let w = difference(u, o.d);
            let aic = fit_arma_css(&w, o.p, o.q, origin - o.d).map(|f| arma_aic(&f, n_reg));
            (o, aic.filter(|a| a.is_finite()))
        })
        .collect()
}

/// Argmin AIC, ties to smaller p+q then smaller d. If every order was
/// discarded, `(0, d, 0)` with the smallest usable d.
pub fn select_from(scores: &[(ArimaOrder, Option<f64>)]) -> ArimaOrder {
    let mut best: Option<(f64, ArimaOrder)> = None;
    for (o, aic) in scores {
        let Some(a) = aic else { continue };
        let better = match best {
            None => true,
            Some((ba, bo)) => {
                if (a - ba).abs() <= 1e-9 * ba.abs().max(1.0) {
                    (o.p + o.q, o.d) < (bo.p + bo.q, bo.d)
                } else {
                    *a < ba
                }
            }
        };
        if better {
            best = Some((*a, *o));
        }
    }
    best.map(|(_, o)| o).unwrap_or_else(|| {
        let d = scores
            .iter()
            .filter(|(o, _)| o.p == 0 && o.q == 0)
            .map(|(o, _)| o.d)
            .min()
            .unwrap_or(0);
        ArimaOrder::new(0, d, 0)
    })
}

pub fn select_order(table: &FeatureTable, variables: &[String], grid: Grid) -> Result<ArimaOrder> {
    let (reg, u) = ols(table, variables)?;
    Ok(select_from(&grid_aic(&u, grid, reg.coefficients.len() + 1)))
}

fn finish(
    table: &FeatureTable,
    regression: LinearModel,
    u: Vec<f64>,
    order: ArimaOrder,
    start: usize,
) -> Result<(ArimaxModel, FitDiagnostics)> {
    let n_reg = regression.coefficients.len() + 1;
    if !long_enough(u.len(), order, n_reg) {
        return Err(Error::domain(
            MODULE,
            format!("{} rows too short for ARIMA{order} with {n_reg} regression terms", u.len()),
        ));
    }
    let w = difference(&u, order.d);
    let fit = fit_arma_css(&w, order.p, order.q, start)
        .ok_or_else(|| Error::domain(MODULE, format!("ARIMA{order}: no stationary, invertible estimate")))?;
    let loglik = gaussian_loglik(fit.css, fit.n_eff);
    let diagnostics = FitDiagnostics {
        n_obs: fit.n_eff,
        rss: fit.css,
        loglik: Some(loglik),
        aic: Some(arma_aic(&fit, n_reg)),
    };
    Ok((
        ArimaxModel {
            regression,
            order,
            sigma2: fit.css / fit.n_eff as f64,
            ar: fit.ar,
            ma: fit.ma,
            lead_time: table.lead_time(),
            history_weeks: table.weeks().to_vec(),
            history_residuals: u,
        },
        diagnostics,
    ))
}

/// Fit with a fixed order.
pub fn fit_arimax(table: &FeatureTable, variables: &[String], order: ArimaOrder) -> Result<(ArimaxModel, FitDiagnostics)> {
    let (regression, u) = ols(table, variables)?;
    finish(table, regression, u, order, order.p)
}

/// Fit with the AIC-selected order.
pub fn fit_auto(table: &FeatureTable, variables: &[String], grid: Grid) -> Result<(ArimaxModel, FitDiagnostics)> {
    let (regression, u) = ols(table, variables)?;
    let order = select_from(&grid_aic(&u, grid, regression.coefficients.len() + 1));
    let start = grid.max_p + grid.max_d - order.d;
    finish(table, regression, u, order, start)
}

/// Forecast the value after a partially observed series. `u[i] = None`
/// marks an unobserved step, which is filled by its forecast.
pub fn filter_forecast(u: &[Option<f64>], ar: &[f64], ma: &[f64], d: usize) -> f64 {
    let n = u.len();
    let mut level = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut e = vec![0.0; n];
    let start = d + ar.len();
    for i in 0..n {
        let pred = if i >= start {
            let mut s = 0.0;
            for (a, phi) in ar.iter().enumerate() {
                s += phi * w[i - a - 1];
            }
            for (b, theta) in ma.iter().enumerate() {
                if i > start + b {
                    s += theta * e[i - b - 1];
                }
            }
            s
        } else {
            0.0
        };
        match u[i] {
            Some(v) => {
                level[i] = v;
                w[i] = if d == 1 { if i == 0 { 0.0 } else { v - level[i - 1] } } else { v };
                e[i] = if i >= start { w[i] - pred } else { 0.0 };
            }
            None => {
                w[i] = pred;
                e[i] = 0.0;
                level[i] = if d == 1 { if i == 0 { 0.0 } else { level[i - 1] + pred } } else { pred };
            }
        }
    }
    level.last().copied().unwrap_or(0.0)
}

impl ArimaxModel {
    pub fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let reg = self.regression.predict(table)?;
        let j = self.lead_time;
        let table_resid: Vec<(u32, f64)> = table
            .weeks()
            .iter()
            .zip(table.response().iter().zip(&reg))
            .map(|(w, (y, r))| (*w, y - r))
            .collect();
        let mut out = Vec::with_capacity(reg.len());
        for (row, &t) in table.weeks().iter().enumerate() {
            let cutoff = t.checked_sub(j);
            let mut known: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
            if let Some(c) = cutoff {
                for (w, r) in self.history_weeks.iter().zip(&self.history_residuals) {
                    if *w <= c {
                        known.insert(*w, *r);
                    }
                }
                for (w, r) in &table_resid {
                    if *w <= c {
                        known.insert(*w, *r);
                    }
                }
            }
            let err = match known.keys().next() {
                Some(&first) if first < t => {
                    let series: Vec<Option<f64>> = (first..=t).map(|w| known.get(&w).copied()).collect();
                    filter_forecast(&series, &self.ar, &self.ma, self.order.d)
                }
                _ => 0.0,
            };
            out.push(reg[row] + err);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{ColumnRole, FeatureColumn};
    use crate::learners::mlr::Term;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, &["test", "ar1"]);
        let mut x = 0.0;
        let mut out = Vec::with_capacity(n);
        for i in 0..n + 100 {
            x = phi * x + rng.sample::<f64, _>(StandardNormal);
            if i >= 100 {
                out.push(x);
            }
        }
        out
    }

    #[test]
    fn stationarity_checks() {
        assert!(is_stationary(&[0.5]));
        assert!(!is_stationary(&[1.0]));
        assert!(!is_stationary(&[-1.2]));
        assert!(is_stationary(&[0.5, 0.3]));
        assert!(!is_stationary(&[0.5, 0.6]));
        assert!(!is_stationary(&[0.0, 1.1]));
        assert!(is_invertible(&[0.8]));
        assert!(!is_invertible(&[-1.5]));
        assert!(is_stationary(&[]));
    }

    #[test]
    fn white_noise_prefers_null_order() {
        let mut counts = std::collections::BTreeMap::new();
        for seed in 0..40 {
            let mut rng = stream(seed, &["test", "wn"]);
            let u: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
            let o = select_from(&grid_aic(&u, Grid::default(), 1));
            *counts.entry(o).or_insert(0) += 1;
        }
        let (mode, _) = counts.iter().max_by_key(|(_, c)| **c).unwrap();
        assert_eq!(*mode, ArimaOrder::new(0, 0, 0), "{counts:?}");
        let d0: i32 = counts.iter().filter(|(o, _)| o.d == 0).map(|(_, c)| *c).sum();
        assert!(d0 >= 36, "{counts:?}");
    }

    #[test]
    fn recovers_ar1() {
        let u = ar1(0.7, 500, 3);
        let o = select_from(&grid_aic(&u, Grid::default(), 1));
        assert!(o.p >= 1);
        let fit = fit_arma_css(&u, 1, 0, 1).unwrap();
        assert!((0.6..=0.8).contains(&fit.ar[0]), "{:?}", fit.ar);
    }

    #[test]
    fn recovers_arma11() {
        let mut rng = stream(5, &["test", "arma"]);
        let mut prev_e = 0.0;
        let mut x = 0.0;
        let mut w = Vec::new();
        for i in 0..2100 {
            let e: f64 = rng.sample(StandardNormal);
            x = 0.5 * x + e + 0.4 * prev_e;
            prev_e = e;
            if i >= 100 {
                w.push(x);
            }
        }
        let fit = fit_arma_css(&w, 1, 1, 1).unwrap();
        assert!((fit.ar[0] - 0.5).abs() < 0.08, "{:?}", fit);
        assert!((fit.ma[0] - 0.4).abs() < 0.08, "{:?}", fit);
        assert!((fit.css / fit.n_eff as f64 - 1.0).abs() < 0.1);
    }

    #[test]
    fn differencing_removes_trend() {
        let u: Vec<f64> = (0..100).map(|i| 0.3 * f64::from(i) + (f64::from(i) * 0.7).sin() * 0.01).collect();
        let w = difference(&u, 1);
        assert!(w.iter().all(|v| (v - 0.3).abs() < 0.03));
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let centered: Vec<f64> = w.iter().map(|v| v - mean).collect();
        let fit = fit_arma_css(&centered, 1, 0, 1).unwrap();
        assert!(fit.css.is_finite());
    }

    #[test]
    fn forecast_recursion() {
        // AR(1) with phi 0.5, last residual 2, two steps ahead: 0.5
        let series = [Some(1.0), Some(2.0), None, None];
        assert!((filter_forecast(&series, &[0.5], &[], 0) - 0.5).abs() < 1e-12);
        // d = 1 keeps the level for a null model
        let series = [Some(1.0), Some(3.0), None];
        assert_eq!(filter_forecast(&series, &[], &[], 1), 3.0);
    }

    #[test]
    fn predict_adds_error_forecast() {
        let model = ArimaxModel {
            regression: LinearModel {
                terms: vec![Term::Numeric { name: "x".into() }],
                intercept: 0.0,
                coefficients: vec![1.0],
            },
            order: ArimaOrder::new(1, 0, 0),
            ar: vec![0.5],
            ma: vec![],
            sigma2: 1.0,
            lead_time: 2,
            history_weeks: vec![1, 2, 3],
            history_residuals: vec![0.0, 1.0, 2.0],
        };
        let t = FeatureTable::new(
            vec![5],
            vec![FeatureColumn {
                name: "x".into(),
                role: ColumnRole::Numeric,
                values: vec![10.0],
            }],
            "y",
            vec![99.0],
            2,
        )
        .unwrap();
        let p = model.predict(&t).unwrap();
        assert!((p[0] - 10.5).abs() < 1e-12);
    }

    #[test]
    fn aic_of_selected_is_minimal() {
        let u = ar1(0.4, 300, 9);
        let scores = grid_aic(&u, Grid::default(), 1);
        let sel = select_from(&scores);
        let sel_aic = scores.iter().find(|(o, _)| *o == sel).unwrap().1.unwrap();
        for (_, a) in &scores {
            if let Some(a) = a {
                assert!(sel_aic <= *a + 1e-9);
            }
        }
    }
}
