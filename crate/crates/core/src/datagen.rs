//! Synthetic weekly feeds: sales, bookings, average selling price and macro
//! outlook snapshots.
//!
//! Sales are multiplicative:
//! `base · growth(t) · season(q) · profile(wq) · cny(t) · exp(noise)`.
//! A booking series at lead `j` is a noisy log-linear blend of the sale at
//! `t + j` (weight `booking_signal_strength`) and its noise-free level.
//! Randomness comes from named ChaCha8 streams (see [`crate::rng`]).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calendar::{FiscalCalendar, WeeklySeries};
use crate::error::{Error, Result};
use crate::features::{cny_effect, ColumnRole, FeatureColumn, FeatureTable, Feeds, OutlookSnapshot};
use crate::rng::stream;

const MODULE: &str = "datagen";

/// Longest booking lead generated.
pub const MAX_LEAD: u32 = 16;

/// Macro outlook indicators and their typical level.
pub const INDICATORS: [(&str, f64); 5] = [
    ("gdp_ww", 3.0),
    ("gdp_cn", 7.0),
    ("gdp_eu", 1.5),
    ("fx_rmb", 6.5),
    ("fx_eur", 0.9),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_years: u32,
    pub lobs: Vec<String>,
    /// Compound growth per quarter (0.01 = 1%).
    pub trend_per_quarter: f64,
    /// Relative level shift of fiscal quarters 1..4.
    pub season_amplitudes: [f64; 4],
    /// Weight of weeks 1..13 within a quarter; must sum to 13. Week 14 of a
    /// long quarter reuses the week-13 weight.
    pub in_quarter_profile: [f64; 13],
    /// Fractional dip in a week fully inside the lunar-new-year window.
    pub cny_dip: f64,
    pub booking_signal_strength: f64,
    /// Log-scale noise standard deviation.
    pub noise_sigma: f64,
    pub base_level: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_years: 5,
            lobs: vec!["DT".into(), "MB".into(), "SVR".into()],
            trend_per_quarter: 0.01,
            season_amplitudes: [-0.06, 0.0, 0.04, 0.02],
            in_quarter_profile: [
                0.8, 0.82, 0.85, 0.87, 0.9, 0.92, 0.95, 0.98, 1.0, 1.05, 1.12, 1.25, 1.49,
            ],
            cny_dip: 0.3,
            booking_signal_strength: 0.9,
            noise_sigma: 0.03,
            base_level: 1000.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(MODULE, field, msg));
        if self.n_years == 0 {
            return bad("n_years", "must be at least 1");
        }
        if self.lobs.is_empty() {
            return bad("lobs", "at least one line of business required");
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(l) = self.lobs.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::config(MODULE, "lobs", format!("duplicate `{l}`")));
        }
        if !self.trend_per_quarter.is_finite() || self.trend_per_quarter <= -1.0 {
            return bad("trend_per_quarter", "must be finite and above -1");
        }
        if self.season_amplitudes.iter().any(|a| !a.is_finite() || *a <= -1.0) {
            return bad("season_amplitudes", "must be finite and above -1");
        }
        if self.in_quarter_profile.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return bad("in_quarter_profile", "weights must be finite and positive");
        }
        let total: f64 = self.in_quarter_profile.iter().sum();
        if (total - 13.0).abs() > 1e-9 {
            return Err(Error::config(
                MODULE,
                "in_quarter_profile",
                format!("weights sum to {total}, expected 13"),
            ));
        }
        if !(0.0..=1.0).contains(&self.cny_dip) {
            return bad("cny_dip", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.booking_signal_strength) {
            return bad("booking_signal_strength", "must lie in [0, 1]");
        }
        if !(self.noise_sigma > 0.0) || !self.noise_sigma.is_finite() {
            return bad("noise_sigma", "must be positive");
        }
        if !(self.base_level > 0.0) || !self.base_level.is_finite() {
            return bad("base_level", "must be positive");
        }
        Ok(())
    }
}

fn lob_scale(i: usize) -> (f64, f64) {
    // (volume multiplier, base selling price)
    const TABLE: [(f64, f64); 3] = [(1.0, 80.0), (1.6, 110.0), (0.45, 600.0)];
    let (v, p) = TABLE[i % 3];
    (v / (1 + i / 3) as f64, p)
}

/// Booked fraction of a week's eventual sales visible `j` weeks ahead.
fn booked_fraction(j: u32) -> f64 {
    0.85 * 0.93f64.powi(j as i32 - 1)
}

/// Generate all feeds over the first `config.n_years` fiscal years of
/// `calendar`.
pub fn generate(config: &SynthConfig, calendar: &FiscalCalendar) -> Result<Feeds> {
    config.validate()?;
    if calendar.n_years() < config.n_years {
        return Err(Error::config(
            MODULE,
            "n_years",
            format!("calendar covers {} years, {} requested", calendar.n_years(), config.n_years),
        ));
    }
    let n_quarters = 4 * config.n_years;
    let n = calendar.quarter_start(n_quarters).expect("quarter exists")
        + u32::from(calendar.quarter(n_quarters).expect("quarter exists").weeks_in_quarter)
        - 1;
    let cny = cny_effect(calendar)?;
    let stamps: Vec<_> = (1..=n).map(|w| calendar.stamp(w).expect("week in calendar")).collect();

    // expected level excluding noise, per lob scale 1
    let level: Vec<f64> = stamps
        .iter()
        .map(|s| {
            let t = f64::from(s.absolute_week - 1);
            let growth = (1.0 + config.trend_per_quarter).powf(t / 13.0);
            let season = 1.0 + config.season_amplitudes[usize::from(s.quarter) - 1];
            let profile = config.in_quarter_profile[usize::from(s.week_of_quarter.min(13)) - 1];
            let dip = 1.0 - config.cny_dip * cny.values[s.absolute_week as usize - 1];
            config.base_level * growth * season * profile * dip
        })
        .collect();

    let sigma = config.noise_sigma;
    let mut common_rng = stream(config.seed, &["datagen", "common"]);
    let common: Vec<f64> = (0..n).map(|_| common_rng.sample(StandardNormal)).collect();

    let mut sales = Vec::new();
    let mut booking = Vec::new();
    let mut asp = Vec::new();
    for (i, lob) in config.lobs.iter().enumerate() {
        let (volume, price) = lob_scale(i);
        let mut rng = stream(config.seed, &["datagen", "sales", lob]);
        let expected: Vec<f64> = level.iter().map(|l| l * volume).collect();
        let values: Vec<f64> = expected
            .iter()
            .zip(&common)
            .map(|(e, c)| {
                let idio: f64 = rng.sample(StandardNormal);
                e * (sigma * (0.6 * c + 0.8 * idio)).exp()
            })
            .collect();

        let s = config.booking_signal_strength;
        for j in 1..=MAX_LEAD.min(n - 1) {
            let mut rng = stream(config.seed, &["datagen", "booking", lob, &j.to_string()]);
            let frac = booked_fraction(j);
            let b: Vec<f64> = (0..(n - j) as usize)
                .map(|t| {
                    let target = t + j as usize;
                    let eps: f64 = rng.sample(StandardNormal);
                    let log_b = frac.ln() + s * values[target].ln() + (1.0 - s) * expected[target].ln() + sigma * eps;
                    log_b.exp()
                })
                .collect();
            booking.push(WeeklySeries::from_values(format!("{lob}_backlog_{j}"), calendar, 1, &b)?);
        }

        let mut rng = stream(config.seed, &["datagen", "asp", lob]);
        let a: Vec<f64> = stamps
            .iter()
            .map(|st| {
                let eps: f64 = rng.sample(StandardNormal);
                price * (1.0 - 0.002 * f64::from(st.quarter_seq - 1)) * (0.5 * sigma * eps).exp()
            })
            .collect();
        asp.push(WeeklySeries::from_values(format!("{lob}_asp"), calendar, 1, &a)?);
        sales.push(WeeklySeries::from_values(lob.clone(), calendar, 1, &values)?);
    }

    let mut outlook = Vec::new();
    for (name, base) in INDICATORS {
        let mut rng = stream(config.seed, &["datagen", "outlook", name]);
        let mut truth = base;
        for target in 1..=n_quarters {
            let shock: f64 = rng.sample(StandardNormal);
            truth += 0.05 * base * shock;
            for as_of in target.saturating_sub(3).max(1)..=target {
                let horizon = f64::from(target - as_of + 1);
                let eps: f64 = rng.sample(StandardNormal);
                outlook.push(OutlookSnapshot {
                    indicator: name.to_string(),
                    as_of_quarter_seq: as_of,
                    target_quarter_seq: target,
                    value: truth + 0.02 * base * horizon * eps,
                });
            }
        }
    }

    Ok(Feeds {
        calendar: calendar.clone(),
        sales,
        booking,
        asp,
        outlook,
    })
}

/// A numeric table with `groups` clusters of `per_group` near-duplicate
/// columns (`g<i>_<k>`) driven by independent latent factors, plus a
/// response loading on every factor. Used to exercise decollinearization.
pub fn collinear_fixture(seed: u64, n_rows: usize, groups: usize, per_group: usize) -> Result<FeatureTable> {
    if n_rows < 3 || groups == 0 || per_group == 0 {
        return Err(Error::config(MODULE, "collinear_fixture", "needs rows, groups and members"));
    }
    let mut rng = stream(seed, &["datagen", "collinear"]);
    let latent: Vec<Vec<f64>> = (0..groups)
        .map(|_| (0..n_rows).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut columns = Vec::new();
    for (g, z) in latent.iter().enumerate() {
        for k in 0..per_group {
            let noise = 0.02 + 0.02 * k as f64;
            let values = z
                .iter()
                .map(|v| (1.0 + 0.1 * k as f64) * v + noise * rng.sample::<f64, _>(StandardNormal))
                .collect();
            columns.push(FeatureColumn {
                name: format!("g{}_{}", g + 1, k + 1),
                role: ColumnRole::Numeric,
                values,
            });
        }
    }
    let response = (0..n_rows)
        .map(|i| {
            let signal: f64 = latent.iter().enumerate().map(|(g, z)| z[i] / (g + 1) as f64).sum();
            100.0 + 5.0 * signal + 0.5 * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    FeatureTable::new((1..=n_rows as u32).collect(), columns, "y", response, 1)
}
