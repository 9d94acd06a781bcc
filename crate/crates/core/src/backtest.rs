//! Moving-window backtests, rank tables and MAPE-by-lead curves.
//!
//! A plan for test week `W` and lead `j` trains on rows whose response falls
//! in `[W - val - train, W - val - 1]`, validates on responses in
//! `[W - val, W - j]`, and forecasts `W` from origin `W - j`. The newest
//! validation response is therefore observed at the forecast origin.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collinearity::{decollinearize, TARGET_RATIO};
use crate::ensemble::{ensemble_predict, member_predictions, search, with_workers, SearchConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureTable, Feeds};
use crate::learners::LearnerKind;
use crate::rng::derive_seed;

const MODULE: &str = "backtest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub lead_time: u32,
    /// Response-week ranges, inclusive.
    pub train: (u32, u32),
    pub val: (u32, u32),
    pub test_week: u32,
    pub window_id: String,
}

impl WindowPlan {
    pub fn new(test_week: u32, lead_time: u32, train_weeks: u32, val_weeks: u32) -> Result<Self> {
        if lead_time == 0 {
            return Err(Error::config(MODULE, "leads", "lead time must be at least 1"));
        }
        if train_weeks == 0 {
            return Err(Error::config(MODULE, "train_weeks", "must be at least 1"));
        }
        if val_weeks < lead_time {
            return Err(Error::config(
                MODULE,
                "val_weeks",
                format!("{val_weeks} validation weeks leave no usable response at lead {lead_time}"),
            ));
        }
        let span = train_weeks + val_weeks;
        if test_week <= span {
            return Err(Error::domain(
                MODULE,
                format!("test week {test_week} needs {} more weeks of history", span + 1 - test_week),
            ));
        }
        let plan = Self {
            lead_time,
            train: (test_week - span, test_week - val_weeks - 1),
            val: (test_week - val_weeks, test_week - lead_time),
            test_week,
            window_id: format!("w{test_week}-j{lead_time}"),
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Forecast origin of the test row.
    pub fn origin(&self) -> u32 {
        self.test_week - self.lead_time
    }

    /// Structural leakage guard.
    pub fn validate(&self) -> Result<()> {
        let ok = self.lead_time >= 1
            && self.train.0 <= self.train.1
            && self.val.0 == self.train.1 + 1
            && self.val.0 <= self.val.1
            && self.val.1 + self.lead_time <= self.test_week;
        if ok {
            Ok(())
        } else {
            Err(Error::contract(MODULE, format!("plan {} reads data at or after its test week", self.window_id)))
        }
    }

    /// Latest response week any fit or score may read.
    pub fn last_known_week(&self) -> u32 {
        self.train.1.max(self.val.1)
    }

    pub fn train_rows(&self, table: &FeatureTable) -> FeatureTable {
        let (a, b) = self.train;
        let j = self.lead_time;
        table.filter_rows(|o| (a..=b).contains(&(o + j)))
    }

    pub fn val_rows(&self, table: &FeatureTable) -> FeatureTable {
        let (a, b) = self.val;
        let j = self.lead_time;
        table.filter_rows(|o| (a..=b).contains(&(o + j)))
    }

    pub fn test_rows(&self, table: &FeatureTable) -> FeatureTable {
        let origin = self.origin();
        table.filter_rows(|o| o == origin)
    }
}

/// One plan per test week in `test_span`, both spans inclusive.
pub fn plan_windows(
    data_span: (u32, u32),
    test_span: (u32, u32),
    lead_time: u32,
    train_weeks: u32,
    val_weeks: u32,
) -> Result<Vec<WindowPlan>> {
    if test_span.0 > test_span.1 || data_span.0 > data_span.1 {
        return Err(Error::config(MODULE, "test_span", "empty span"));
    }
    if test_span.1 > data_span.1 {
        return Err(Error::domain(
            MODULE,
            format!("test week {} is past the last data week {}", test_span.1, data_span.1),
        ));
    }
    let earliest = data_span.0 + train_weeks + val_weeks;
    if test_span.0 < earliest {
        return Err(Error::domain(
            MODULE,
            format!("insufficient history: test week {} is {} weeks short", test_span.0, earliest - test_span.0),
        ));
    }
    (test_span.0..=test_span.1)
        .map(|w| WindowPlan::new(w, lead_time, train_weeks, val_weeks))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    pub methods: Vec<LearnerKind>,
    pub leads: Vec<u32>,
    /// Inclusive test weeks; by default the 52 weeks right after the first
    /// full training and validation block.
    pub test_span: Option<(u32, u32)>,
    pub train_weeks: u32,
    pub val_weeks: u32,
    pub target_ratio: f64,
    pub features: FeatureConfig,
    pub search: SearchConfig,
    /// Per-family hyperparameter overrides, keyed by family name.
    pub hyperparams: BTreeMap<LearnerKind, BTreeMap<String, f64>>,
    pub seed: u64,
    pub workers: usize,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            methods: LearnerKind::ALL.to_vec(),
            leads: vec![1, 5, 16],
            test_span: None,
            train_weeks: 104,
            val_weeks: 52,
            target_ratio: TARGET_RATIO,
            features: FeatureConfig::default(),
            search: SearchConfig::default(),
            hyperparams: BTreeMap::new(),
            seed: 0,
            workers: 1,
        }
    }
}

impl BacktestConfig {
    pub fn resolved_test_span(&self, data_span: (u32, u32)) -> (u32, u32) {
        self.test_span.unwrap_or_else(|| {
            let first = data_span.0 + self.train_weeks + self.val_weeks;
            (first, (first + 51).min(data_span.1))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config(MODULE, "methods", "at least one method is required"));
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return Err(Error::config(MODULE, "methods", "duplicate method"));
        }
        if self.leads.is_empty() || self.leads.contains(&0) {
            return Err(Error::config(MODULE, "leads", "leads must be non-empty and at least 1"));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::config(MODULE, "target_ratio", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Outcome of one (method, plan) pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lob: String,
    pub method: LearnerKind,
    pub test_week: u32,
    pub lead_time: u32,
    pub window_id: String,
    pub actual: f64,
    pub prediction: Option<f64>,
    pub mape: Option<f64>,
    pub m: Option<usize>,
    /// Largest gap between the ensemble prediction and the mean of member
    /// predictions over the scored rows.
    pub mean_gap: Option<f64>,
    pub variables: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub lob: String,
    pub methods: Vec<LearnerKind>,
    pub leads: Vec<u32>,
    pub plans: Vec<WindowPlan>,
    /// Ordered by lead, test week, then method order.
    pub cells: Vec<Cell>,
}

fn run_plan(
    table: &FeatureTable,
    plan: &WindowPlan,
    lob: &str,
    config: &BacktestConfig,
) -> Vec<Cell> {
    let test = plan.test_rows(table);
    let actual = test.response().first().copied().unwrap_or(f64::NAN);
    let failed = |method: LearnerKind, e: String| Cell {
        lob: lob.to_string(),
        method,
        test_week: plan.test_week,
        lead_time: plan.lead_time,
        window_id: plan.window_id.clone(),
        actual,
        prediction: None,
        mape: None,
        m: None,
        mean_gap: None,
        variables: Vec::new(),
        error: Some(e),
    };
    let train = plan.train_rows(table);
    let val = plan.val_rows(table);
    let setup = (|| {
        if test.n_rows() != 1 {
            return Err(Error::domain(MODULE, format!("no row at origin week {}", plan.origin())));
        }
        if train.n_rows() == 0 || val.n_rows() == 0 {
            return Err(Error::domain(MODULE, "empty training or validation block"));
        }
        let w = plan.test_week.to_string();
        let j = plan.lead_time.to_string();
        let seed = derive_seed(config.seed, &["backtest", lob, &j, &w, "collinearity"]);
        decollinearize(&train, config.target_ratio, seed, false)
    })();
    let report = match setup {
        Ok(r) => r,
        Err(e) => return config.methods.iter().map(|&m| failed(m, e.to_string())).collect(),
    };
    let scored = match val.concat(&test) {
        Ok(t) => t,
        Err(e) => return config.methods.iter().map(|&m| failed(m, e.to_string())).collect(),
    };
    config
        .methods
        .iter()
        .map(|&method| {
            let w = plan.test_week.to_string();
            let j = plan.lead_time.to_string();
            let seed = derive_seed(config.seed, &["backtest", lob, &j, &w, method.as_str()]);
            let mut search_cfg = config.search.clone();
            search_cfg.workers = 1;
            search_cfg.subsets.seed = derive_seed(config.seed, &["backtest", lob, &j, &w, "subsets"]);
            if let Some(h) = config.hyperparams.get(&method) {
                search_cfg.hyperparams.extend(h.iter().map(|(k, v)| (k.clone(), *v)));
            }
            let run = || -> Result<Cell> {
                let out = search(method, &report.selected, &train, &[&val], &search_cfg, seed, &plan.window_id)?;
                let p = ensemble_predict(&out.ensemble, &scored)?;
                let members = member_predictions(&out.ensemble, &scored)?;
                let m = members.len() as f64;
                let gap = (0..scored.n_rows())
                    .map(|i| (p[i] - members.iter().map(|r| r[i]).sum::<f64>() / m).abs())
                    .fold(0.0f64, f64::max);
                let pred = p[p.len() - 1];
                if !pred.is_finite() {
                    return Err(Error::domain(MODULE, "non-finite test prediction"));
                }
                Ok(Cell {
                    lob: lob.to_string(),
                    method,
                    test_week: plan.test_week,
                    lead_time: plan.lead_time,
                    window_id: plan.window_id.clone(),
                    actual,
                    prediction: Some(pred),
                    mape: Some(100.0 * (pred - actual).abs() / actual.abs()),
                    m: Some(out.ensemble.m),
                    mean_gap: Some(gap),
                    variables: report.selected.clone(),
                    error: None,
                })
            };
            run().unwrap_or_else(|e| failed(method, e.to_string()))
        })
        .collect()
}

/// Run every method over every plan of every lead for one line of business.
pub fn run_backtest(feeds: &Feeds, lob: &str, config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate()?;
    let sales = feeds.sales_of(lob)?;
    let data_span = match (sales.first_week(), sales.last_week()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::domain(MODULE, format!("no sales for `{lob}`"))),
    };
    let test_span = config.resolved_test_span(data_span);
    let mut jobs = Vec::new();
    let mut plans = Vec::new();
    for &lead in &config.leads {
        for plan in plan_windows(data_span, test_span, lead, config.train_weeks, config.val_weeks)? {
            plans.push(plan.clone());
            jobs.push((lead, plan));
        }
    }
    let tables: BTreeMap<u32, FeatureTable> = config
        .leads
        .iter()
        .map(|&j| Ok((j, feeds.table(lob, j, &config.features)?)))
        .collect::<Result<_>>()?;
    let run = |(lead, plan): &(u32, WindowPlan)| run_plan(&tables[lead], plan, lob, config);
    let cells: Vec<Vec<Cell>> = if config.workers <= 1 {
        jobs.iter().map(run).collect()
    } else {
        with_workers(config.workers, || jobs.par_iter().map(run).collect())
    };
    Ok(BacktestReport {
        lob: lob.to_string(),
        methods: config.methods.clone(),
        leads: config.leads.clone(),
        plans,
        cells: cells.into_iter().flatten().collect(),
    })
}

/// Rank counts for one lead-time bucket: `counts[method][rank - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCounts {
    pub methods: Vec<LearnerKind>,
    pub all: Vec<Vec<u32>>,
    pub short: Vec<Vec<u32>>,
    pub long: Vec<Vec<u32>>,
    /// Cells where every method succeeded.
    pub ranked_cells: u32,
    pub flagged_cells: u32,
}

/// Ranks within each (test week, lead) cell. A cell where any method failed
/// is flagged and left out. Ties go to the method listed first.
pub fn rank_counts(report: &BacktestReport) -> RankCounts {
    let k = report.methods.len();
    let zero = || vec![vec![0u32; k]; k];
    let mut out = RankCounts {
        methods: report.methods.clone(),
        all: zero(),
        short: zero(),
        long: zero(),
        ranked_cells: 0,
        flagged_cells: 0,
    };
    let mut groups: BTreeMap<(u32, u32), Vec<&Cell>> = BTreeMap::new();
    for c in &report.cells {
        groups.entry((c.lead_time, c.test_week)).or_default().push(c);
    }
    for ((lead, _), cells) in groups {
        let scores: Vec<Option<f64>> = report
            .methods
            .iter()
            .map(|m| cells.iter().find(|c| c.method == *m).and_then(|c| c.mape))
            .collect();
        if scores.iter().any(Option::is_none) {
            out.flagged_cells += 1;
            continue;
        }
        let scores: Vec<f64> = scores.into_iter().flatten().collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        for (rank, &mi) in order.iter().enumerate() {
            out.all[mi][rank] += 1;
            if lead <= 5 {
                out.short[mi][rank] += 1;
            }
            if lead >= 12 {
                out.long[mi][rank] += 1;
            }
        }
        out.ranked_cells += 1;
    }
    out
}

/// Mean test MAPE per method and lead over successful cells.
pub fn mape_by_lead(report: &BacktestReport) -> BTreeMap<LearnerKind, BTreeMap<u32, f64>> {
    let mut acc: BTreeMap<LearnerKind, BTreeMap<u32, (f64, u32)>> = BTreeMap::new();
    for c in &report.cells {
        if let Some(m) = c.mape {
            let e = acc.entry(c.method).or_default().entry(c.lead_time).or_insert((0.0, 0));
            e.0 += m;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(k, v)| (k, v.into_iter().map(|(j, (s, n))| (j, s / f64::from(n))).collect()))
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

pub fn write_cells_csv<W: Write>(writer: W, report: &BacktestReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::parse(MODULE, "cells csv", e.to_string());
    w.write_record(["lob", "method", "test_week", "lead_time", "actual", "prediction", "mape", "m", "error"])
        .map_err(err)?;
    for c in &report.cells {
        w.write_record([
            c.lob.clone(),
            c.method.ensemble_name().to_string(),
            c.test_week.to_string(),
            c.lead_time.to_string(),
            format!("{}", c.actual),
            fmt_opt(c.prediction),
            fmt_opt(c.mape),
            c.m.map_or_else(String::new, |m| m.to_string()),
            c.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::parse(MODULE, "cells csv", e.to_string()))
}

pub fn write_rank_csv<W: Write>(writer: W, counts: &RankCounts) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::parse(MODULE, "rank csv", e.to_string());
    let k = counts.methods.len();
    let mut header = vec!["method".to_string()];
    for r in 1..=k {
        header.push(format!("rank{r}_all"));
        header.push(format!("rank{r}_le5"));
        header.push(format!("rank{r}_ge12"));
    }
    w.write_record(&header).map_err(err)?;
    for (i, m) in counts.methods.iter().enumerate() {
        let mut row = vec![m.ensemble_name().to_string()];
        for r in 0..k {
            row.push(counts.all[i][r].to_string());
            row.push(counts.short[i][r].to_string());
            row.push(counts.long[i][r].to_string());
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::parse(MODULE, "rank csv", e.to_string()))
}

pub fn write_mape_by_lead_csv<W: Write>(writer: W, curves: &BTreeMap<LearnerKind, BTreeMap<u32, f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::parse(MODULE, "mape csv", e.to_string());
    w.write_record(["method", "lead_time", "mean_mape"]).map_err(err)?;
    for (m, curve) in curves {
        for (j, v) in curve {
            w.write_record([m.ensemble_name().to_string(), j.to_string(), format!("{v}")])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::parse(MODULE, "mape csv", e.to_string()))
}

/// One row of the cells CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub lob: String,
    pub method: LearnerKind,
    pub test_week: u32,
    pub lead_time: u32,
    pub actual: f64,
    pub prediction: Option<f64>,
    pub mape: Option<f64>,
    pub m: Option<usize>,
    pub error: Option<String>,
}

#[derive(Deserialize)]
struct RawCell {
    lob: String,
    method: String,
    test_week: u32,
    lead_time: u32,
    actual: f64,
    prediction: Option<f64>,
    mape: Option<f64>,
    m: Option<usize>,
    error: String,
}

fn csv_rows<T: serde::de::DeserializeOwned, R: Read>(reader: R, what: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(|e| Error::parse(MODULE, what, e.to_string())))
        .collect()
}

pub fn read_cells_csv<R: Read>(reader: R) -> Result<Vec<CellRecord>> {
    csv_rows::<RawCell, _>(reader, "cells csv")?
        .into_iter()
        .map(|r| {
            Ok(CellRecord {
                lob: r.lob,
                method: r.method.parse()?,
                test_week: r.test_week,
                lead_time: r.lead_time,
                actual: r.actual,
                prediction: r.prediction,
                mape: r.mape,
                m: r.m,
                error: (!r.error.is_empty()).then_some(r.error),
            })
        })
        .collect()
}

/// Read a rank CSV. The file does not carry the flagged-cell count, so
/// `flagged_cells` is zero and `ranked_cells` is recovered from the first
/// method's row sum.
pub fn read_rank_csv<R: Read>(reader: R) -> Result<RankCounts> {
    let err = |m: String| Error::parse(MODULE, "rank csv", m);
    let mut rdr = csv::Reader::from_reader(reader);
    let width = rdr.headers().map_err(|e| err(e.to_string()))?.len();
    if width < 4 || (width - 1) % 3 != 0 {
        return Err(err(format!("unexpected column count {width}")));
    }
    let k = (width - 1) / 3;
    let mut out = RankCounts {
        methods: Vec::new(),
        all: Vec::new(),
        short: Vec::new(),
        long: Vec::new(),
        ranked_cells: 0,
        flagged_cells: 0,
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        out.methods.push(rec[0].parse()?);
        let nums = (1..width)
            .map(|i| rec[i].parse::<u32>().map_err(|e| err(format!("column {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        out.all.push((0..k).map(|r| nums[3 * r]).collect());
        out.short.push((0..k).map(|r| nums[3 * r + 1]).collect());
        out.long.push((0..k).map(|r| nums[3 * r + 2]).collect());
    }
    if out.methods.len() != k {
        return Err(err(format!("{} methods for {k} ranks", out.methods.len())));
    }
    out.ranked_cells = out.all.first().map_or(0, |r| r.iter().sum());
    Ok(out)
}

#[derive(Deserialize)]
struct RawLeadMape {
    method: String,
    lead_time: u32,
    mean_mape: f64,
}

pub fn read_mape_by_lead_csv<R: Read>(reader: R) -> Result<BTreeMap<LearnerKind, BTreeMap<u32, f64>>> {
    let mut out: BTreeMap<LearnerKind, BTreeMap<u32, f64>> = BTreeMap::new();
    for r in csv_rows::<RawLeadMape, _>(reader, "mape csv")? {
        out.entry(r.method.parse()?).or_default().insert(r.lead_time, r.mean_mape);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_arithmetic() {
        let plans = plan_windows((1, 260), (157, 208), 1, 104, 52).unwrap();
        assert_eq!(plans.len(), 52);
        assert_eq!(plans[0].train, (1, 104));
        assert_eq!(plans[0].val, (105, 156));
        for w in plans.windows(2) {
            assert_eq!(w[1].test_week, w[0].test_week + 1);
        }
        let p1 = WindowPlan::new(200, 1, 104, 52).unwrap();
        let p16 = WindowPlan::new(200, 16, 104, 52).unwrap();
        let rows = |p: &WindowPlan| p.val.1 - p.val.0 + 1;
        assert_eq!(rows(&p1) - rows(&p16), 15);
        assert!(plans.iter().all(|p| p.last_known_week() < p.test_week));
    }

    #[test]
    fn shortfall_and_leakage() {
        let e = plan_windows((1, 260), (150, 160), 1, 104, 52).unwrap_err();
        assert!(e.to_string().contains("7 weeks short"), "{e}");
        let mut p = WindowPlan::new(200, 4, 104, 52).unwrap();
        p.test_week = 60;
        assert!(p.validate().is_err());
        assert!(plan_windows((1, 100), (90, 120), 1, 10, 10).is_err());
        assert!(WindowPlan::new(200, 5, 104, 4).is_err());
    }

    fn cell(method: LearnerKind, week: u32, lead: u32, mape: Option<f64>) -> Cell {
        Cell {
            lob: "DT".into(),
            method,
            test_week: week,
            lead_time: lead,
            window_id: String::new(),
            actual: 1.0,
            prediction: mape,
            mape,
            m: Some(1),
            mean_gap: Some(0.0),
            variables: Vec::new(),
            error: None,
        }
    }

    #[test]
    fn ranks_are_permutations() {
        let methods = vec![LearnerKind::Mlr, LearnerKind::Rf];
        let mut cells = Vec::new();
        for w in 1..=4 {
            cells.push(cell(LearnerKind::Mlr, w, 1, Some(f64::from(w))));
            cells.push(cell(LearnerKind::Rf, w, 1, Some(2.5)));
        }
        let report = BacktestReport {
            lob: "DT".into(),
            methods,
            leads: vec![1],
            plans: Vec::new(),
            cells,
        };
        let r = rank_counts(&report);
        assert_eq!(r.ranked_cells, 4);
        assert_eq!(r.all[0], vec![2, 2]);
        assert_eq!(r.all[1], vec![2, 2]);
        for rank in 0..2 {
            assert_eq!(r.all[0][rank] + r.all[1][rank], 4);
        }
        let curves = mape_by_lead(&report);
        assert_eq!(curves[&LearnerKind::Mlr][&1], 2.5);
    }

    #[test]
    fn ties_follow_method_order_and_failures_are_flagged() {
        let report = BacktestReport {
            lob: "DT".into(),
            methods: vec![LearnerKind::Rf, LearnerKind::Mlr],
            leads: vec![12],
            plans: Vec::new(),
            cells: vec![
                cell(LearnerKind::Rf, 1, 12, Some(1.0)),
                cell(LearnerKind::Mlr, 1, 12, Some(1.0)),
                cell(LearnerKind::Rf, 2, 12, None),
                cell(LearnerKind::Mlr, 2, 12, Some(1.0)),
            ],
        };
        let r = rank_counts(&report);
        assert_eq!(r.all[0], vec![1, 0]);
        assert_eq!(r.long[1], vec![0, 1]);
        assert_eq!(r.short[0], vec![0, 0]);
        assert_eq!((r.ranked_cells, r.flagged_cells), (1, 1));
    }
}
