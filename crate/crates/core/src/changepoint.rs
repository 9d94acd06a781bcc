//! Ensemble size from the sorted validation-MAPE curve: truncate at a MAPE
//! threshold, run PELT change-in-mean detection, and keep the models before
//! the most significant change point.
//!
//! Segment cost is the within-segment sum of squares (Gaussian, known
//! variance), so the penalty is in squared data units: `β = c · σ̂² · ln n`.
//! `σ̂` is the MAD of first differences over `0.6745 · √2`, falling back to
//! their standard deviation when the MAD is zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "ensemble";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChangePointConfig {
    /// `c` in `β = c · σ̂² · ln n`.
    pub penalty_factor: f64,
    /// Shortest admissible segment.
    pub min_segment: usize,
    /// Fallback size when no change point is found.
    pub m_min: usize,
}

impl Default for ChangePointConfig {
    fn default() -> Self {
        Self {
            penalty_factor: 2.0,
            min_segment: 2,
            m_min: 5,
        }
    }
}

/// Diagnostics of one [`change_point_m`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointOutcome {
    pub m: usize,
    /// Segment starts found by PELT on the truncated curve.
    pub changepoints: Vec<usize>,
    /// Curve length after the threshold.
    pub kept: usize,
    pub sigma: f64,
    pub penalty: f64,
    pub fallback: bool,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Noise scale estimate from first differences.
pub fn robust_sigma(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return 0.0;
    }
    let mut d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(&mut d.clone());
    let mut dev: Vec<f64> = d.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&mut dev);
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let s = mad / (0.6745 * std::f64::consts::SQRT_2);
    if s > 1e-9 * scale {
        return s;
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let sd = (d.iter_mut().map(|v| (*v - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    let s = sd / std::f64::consts::SQRT_2;
    if s > 1e-9 * scale {
        s
    } else {
        0.0
    }
}

/// Exact penalized change-in-mean segmentation by PELT. Returns segment
/// start indices (excluding 0), ascending.
pub fn pelt_mean(x: &[f64], penalty: f64, min_segment: usize) -> Vec<usize> {
    let n = x.len();
    let min_segment = min_segment.max(1);
    if n < 2 * min_segment {
        return Vec::new();
    }
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, v) in x.iter().enumerate() {
        s1[i + 1] = s1[i] + v;
        s2[i + 1] = s2[i] + v * v;
    }
    let cost = |a: usize, b: usize| {
        let len = (b - a) as f64;
        let s = s1[b] - s1[a];
        (s2[b] - s2[a] - s * s / len).max(0.0)
    };
    let mut f = vec![f64::INFINITY; n + 1];
    let mut last = vec![0usize; n + 1];
    f[0] = -penalty;
    let mut candidates: Vec<usize> = vec![0];
    for t in 1..=n {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for &s in &candidates {
            if t - s < min_segment || !f[s].is_finite() {
                continue;
            }
            let v = f[s] + cost(s, t) + penalty;
            if v < best {
                best = v;
                arg = s;
            }
        }
        f[t] = best;
        last[t] = arg;
        if best.is_finite() {
            candidates.retain(|&s| t - s < min_segment || !f[s].is_finite() || f[s] + cost(s, t) <= best);
        }
        candidates.push(t);
    }
    let mut cps = Vec::new();
    let mut t = n;
    while t > 0 {
        let s = last[t];
        if s > 0 {
            cps.push(s);
        }
        t = s;
    }
    cps.reverse();
    cps
}

/// Index of the most significant change point: the one whose removal
/// raises the segmentation cost the most. Ties go to the earliest.
pub fn most_significant(x: &[f64], changepoints: &[usize]) -> Option<usize> {
    let cost = |a: usize, b: usize| {
        let v = &x[a..b];
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|u| (u - m).powi(2)).sum::<f64>()
    };
    let mut bounds = vec![0];
    bounds.extend_from_slice(changepoints);
    bounds.push(x.len());
    let mut best: Option<(usize, f64)> = None;
    for i in 1..bounds.len() - 1 {
        let (a, t, b) = (bounds[i - 1], bounds[i], bounds[i + 1]);
        let gain = cost(a, b) - cost(a, t) - cost(t, b);
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((t, gain));
        }
    }
    best.map(|(t, _)| t)
}

struct Raw {
    m: usize,
    changepoints: Vec<usize>,
    sigma: f64,
    penalty: f64,
    fallback: bool,
}

fn raw_m(curve: &[f64], config: &ChangePointConfig) -> Raw {
    let fallback = |sigma, penalty| Raw {
        m: config.m_min.min(curve.len()).max(1),
        changepoints: Vec::new(),
        sigma,
        penalty,
        fallback: true,
    };
    let sigma = robust_sigma(curve);
    if sigma <= 0.0 {
        return fallback(0.0, 0.0);
    }
    let penalty = config.penalty_factor * sigma * sigma * (curve.len() as f64).ln();
    let cps = pelt_mean(curve, penalty, config.min_segment);
    match most_significant(curve, &cps) {
        Some(m) => Raw {
            m,
            changepoints: cps,
            sigma,
            penalty,
            fallback: false,
        },
        None => fallback(sigma, penalty),
    }
}

/// Number of top models to average.
///
/// With a threshold, M is the smallest cut over this and every looser
/// threshold, so lowering the threshold can never raise M.
pub fn change_point_m(sorted_mapes: &[f64], threshold: Option<f64>, config: &ChangePointConfig) -> Result<ChangePointOutcome> {
    if sorted_mapes.len() < 2 {
        return Err(Error::contract(MODULE, "change point needs at least two MAPEs"));
    }
    if sorted_mapes.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::contract(MODULE, "MAPEs must be sorted ascending"));
    }
    let n = sorted_mapes.len();
    let kept = threshold.map_or(n, |t| sorted_mapes.iter().take_while(|v| **v <= t).count());
    if kept == 0 {
        return Ok(ChangePointOutcome {
            m: config.m_min.min(n).max(1),
            changepoints: Vec::new(),
            kept: 0,
            sigma: 0.0,
            penalty: 0.0,
            fallback: true,
        });
    }
    let raw = raw_m(&sorted_mapes[..kept], config);
    let mut m = raw.m;
    // lengths reachable by a looser threshold
    for k in kept + 1..=n {
        if m == 1 {
            break;
        }
        if k == n || sorted_mapes[k] > sorted_mapes[k - 1] {
            m = m.min(raw_m(&sorted_mapes[..k], config).m);
        }
    }
    Ok(ChangePointOutcome {
        m,
        changepoints: raw.changepoints,
        kept,
        sigma: raw.sigma,
        penalty: raw.penalty,
        fallback: raw.fallback && m == raw.m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Exhaustive single split minimizing two-segment within sum of squares.
    fn best_split(x: &[f64], min_seg: usize) -> usize {
        let ss = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m).powi(2)).sum::<f64>()
        };
        (min_seg..=x.len() - min_seg)
            .min_by(|&a, &b| (ss(&x[..a]) + ss(&x[a..])).total_cmp(&(ss(&x[..b]) + ss(&x[b..]))))
            .unwrap()
    }

    #[test]
    fn small_step() {
        let mut rng = stream(1, &["test"]);
        let mut x = vec![1.0, 1.0, 1.0, 1.0, 1.0, 9.0, 9.0, 9.0];
        for v in x.iter_mut() {
            *v += 1e-3 * rng.random::<f64>();
        }
        x.sort_by(f64::total_cmp);
        let out = change_point_m(&x, None, &ChangePointConfig::default()).unwrap();
        assert_eq!(out.m, 5);
        assert_eq!(best_split(&x, 2), 5);
        let exact = change_point_m(&[1.0, 1.0, 1.0, 1.0, 1.0, 9.0, 9.0, 9.0], None, &ChangePointConfig::default()).unwrap();
        assert_eq!(exact.m, 5);
        assert!(!exact.fallback);
    }

    #[test]
    fn ramp_falls_back() {
        let x: Vec<f64> = (0..40).map(|i| 10.0 + 0.5 * f64::from(i)).collect();
        let out = change_point_m(&x, None, &ChangePointConfig::default()).unwrap();
        assert!(out.fallback);
        assert_eq!(out.m, 5);
        let short = change_point_m(&[1.0, 2.0, 3.0], None, &ChangePointConfig::default()).unwrap();
        assert_eq!(short.m, 3);
    }

    #[test]
    fn planted_step_at_57() {
        let mut rng = stream(57, &["test"]);
        let mut x: Vec<f64> = (0..200)
            .map(|i| {
                let base = if i < 57 { 10.0 } else { 14.0 };
                base + 0.3 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        x.sort_by(f64::total_cmp);
        let out = change_point_m(&x, None, &ChangePointConfig::default()).unwrap();
        assert_eq!(out.m, 57);
    }

    #[test]
    fn threshold_never_raises_m() {
        let mut rng = stream(3, &["test"]);
        let mut x: Vec<f64> = (0..120)
            .map(|i| if i < 30 { 5.0 } else if i < 80 { 8.0 } else { 20.0 } + 0.2 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        x.sort_by(f64::total_cmp);
        let mut prev = usize::MAX;
        for t in [100.0, 25.0, 12.0, 9.0, 6.0, 5.5, x[0]] {
            let m = change_point_m(&x, Some(t), &ChangePointConfig::default()).unwrap().m;
            assert!(m <= prev || prev == usize::MAX, "t {t}: {m} > {prev}");
            prev = m;
        }
    }

    #[test]
    fn pelt_matches_single_split_oracle() {
        for seed in 0..50 {
            let mut rng = stream(seed, &["oracle"]);
            let n = rng.random_range(20..120);
            let k = rng.random_range(5..n - 5);
            let jump = rng.random_range(2.0..6.0);
            let mut x: Vec<f64> = (0..n)
                .map(|i| if i < k { 1.0 } else { 1.0 + jump } + 0.2 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            x.sort_by(f64::total_cmp);
            let cps = pelt_mean(&x, 2.0 * robust_sigma(&x).powi(2) * (n as f64).ln(), 2);
            assert_eq!(most_significant(&x, &cps), Some(best_split(&x, 2)), "seed {seed}");
            assert_eq!(change_point_m(&x, None, &ChangePointConfig::default()).unwrap().m, k, "seed {seed}");
        }
    }

    proptest::proptest! {
        #[test]
        fn lowering_threshold_never_raises_m(
            mut x in proptest::collection::vec(0.0f64..50.0, 2..60),
            cuts in proptest::collection::vec(0.0f64..1.0, 1..6),
        ) {
            x.sort_by(f64::total_cmp);
            let (lo, hi) = (x[0], x[x.len() - 1]);
            let mut ts: Vec<f64> = cuts.iter().map(|c| lo + c * (hi - lo)).collect();
            ts.sort_by(|a, b| b.total_cmp(a));
            let mut prev = change_point_m(&x, None, &ChangePointConfig::default()).unwrap().m;
            for t in ts {
                let m = change_point_m(&x, Some(t), &ChangePointConfig::default()).unwrap().m;
                proptest::prop_assert!(m >= 1 && m <= prev);
                prev = m;
            }
        }
    }

    #[test]
    fn rejects_unsorted() {
        assert!(change_point_m(&[2.0, 1.0], None, &ChangePointConfig::default()).is_err());
        assert!(change_point_m(&[2.0], None, &ChangePointConfig::default()).is_err());
    }
}
