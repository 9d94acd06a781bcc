//! Feature engineering: outlook revisions, lunar-new-year effect, calendar
//! indicators, lagged sales, and lead-time alignment into a [`FeatureTable`].
//!
//! A table row at origin week `t` pairs the features observed at `t` with the
//! response at `t + lead_time`. Nothing is interpolated or imputed; rows with
//! any missing input are dropped.
//!
//! Outlook deltas are computed per target quarter: a week in quarter `Q` sees
//! the latest revision of the outlook *for `Q`*. Deltas never carry over from
//! one target quarter to the next.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::Days;
use serde::{Deserialize, Serialize};

use crate::calendar::{check_header, csv_err, FiscalCalendar, WeekStamp, WeeklySeries};
use crate::error::{Error, Result};

const MODULE: &str = "features";

/// Role of a feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum ColumnRole {
    Numeric,
    /// Integer levels `1..=cardinality`.
    Categorical { cardinality: u16 },
}

impl ColumnRole {
    pub fn is_categorical(self) -> bool {
        matches!(self, ColumnRole::Categorical { .. })
    }
}

/// A feature observed over a contiguous run of weeks, before alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesColumn {
    pub name: String,
    pub role: ColumnRole,
    pub first_week: u32,
    pub values: Vec<f64>,
}

impl SeriesColumn {
    pub fn numeric(name: impl Into<String>, first_week: u32, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            role: ColumnRole::Numeric,
            first_week,
            values,
        }
    }

    pub fn last_week(&self) -> Option<u32> {
        (!self.values.is_empty()).then(|| self.first_week + self.values.len() as u32 - 1)
    }

    pub fn at(&self, week: u32) -> Option<f64> {
        let idx = week.checked_sub(self.first_week)? as usize;
        self.values.get(idx).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    #[serde(flatten)]
    pub role: ColumnRole,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// The aligned design matrix for one lead time.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    weeks: Vec<u32>,
    columns: Vec<FeatureColumn>,
    response_name: String,
    response: Vec<f64>,
    lead_time: u32,
}

impl FeatureTable {
    pub fn new(
        weeks: Vec<u32>,
        columns: Vec<FeatureColumn>,
        response_name: impl Into<String>,
        response: Vec<f64>,
        lead_time: u32,
    ) -> Result<Self> {
        let response_name = response_name.into();
        let n = weeks.len();
        if lead_time == 0 {
            return Err(Error::config(MODULE, "lead_time", "must be at least 1"));
        }
        if weeks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::contract(MODULE, "table weeks must be strictly increasing"));
        }
        if response.len() != n {
            return Err(Error::contract(MODULE, "response length differs from row count"));
        }
        if let Some(i) = response.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::domain(
                MODULE,
                format!("response `{response_name}` not strictly positive at row {i}"),
            ));
        }
        let mut names = BTreeSet::new();
        names.insert(response_name.as_str());
        names.insert("week");
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::contract(MODULE, format!("duplicate column name `{}`", c.name)));
            }
            if c.values.len() != n {
                return Err(Error::contract(
                    MODULE,
                    format!("column `{}` has {} values for {n} rows", c.name, c.values.len()),
                ));
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract(MODULE, format!("column `{}` has missing values", c.name)));
            }
            if let ColumnRole::Categorical { cardinality } = c.role {
                if let Some(v) = c
                    .values
                    .iter()
                    .find(|v| v.fract() != 0.0 || **v < 1.0 || **v > f64::from(cardinality))
                {
                    return Err(Error::contract(
                        MODULE,
                        format!("categorical `{}` level {v} outside 1..={cardinality}", c.name),
                    ));
                }
            }
        }
        Ok(Self {
            weeks,
            columns,
            response_name,
            response,
            lead_time,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.weeks.len()
    }

    /// Origin week of each row.
    pub fn weeks(&self) -> &[u32] {
        &self.weeks
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::contract(MODULE, format!("unknown column `{name}`")))
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn numeric_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.role == ColumnRole::Numeric)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn categorical_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.role.is_categorical())
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn lead_time(&self) -> u32 {
        self.lead_time
    }

    /// Week whose value is the response of row `i`.
    pub fn target_week(&self, i: usize) -> u32 {
        self.weeks[i] + self.lead_time
    }

    /// Rows whose origin week satisfies `keep`, in order.
    pub fn filter_rows(&self, keep: impl Fn(u32) -> bool) -> FeatureTable {
        let idx: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(self.weeks[i])).collect();
        self.take_rows(&idx)
    }

    pub fn take_rows(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            weeks: idx.iter().map(|&i| self.weeks[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| FeatureColumn {
                    name: c.name.clone(),
                    role: c.role,
                    values: idx.iter().map(|&i| c.values[i]).collect(),
                })
                .collect(),
            response_name: self.response_name.clone(),
            response: idx.iter().map(|&i| self.response[i]).collect(),
            lead_time: self.lead_time,
        }
    }

    /// Keep only the named feature columns (in the given order).
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureTable> {
        let columns = names
            .iter()
            .map(|n| {
                self.column(n)
                    .cloned()
                    .ok_or_else(|| Error::contract(MODULE, format!("unknown column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureTable::new(
            self.weeks.clone(),
            columns,
            self.response_name.clone(),
            self.response.clone(),
            self.lead_time,
        )
    }

    /// Append the rows of `other`, which must share the column layout and
    /// start after this table ends.
    pub fn concat(&self, other: &FeatureTable) -> Result<FeatureTable> {
        if self.columns.len() != other.columns.len()
            || self
                .columns
                .iter()
                .zip(&other.columns)
                .any(|(a, b)| a.name != b.name || a.role != b.role)
            || self.lead_time != other.lead_time
        {
            return Err(Error::contract(MODULE, "concat: column layouts differ"));
        }
        let mut weeks = self.weeks.clone();
        weeks.extend_from_slice(&other.weeks);
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| {
                let mut values = a.values.clone();
                values.extend_from_slice(&b.values);
                FeatureColumn {
                    name: a.name.clone(),
                    role: a.role,
                    values,
                }
            })
            .collect();
        let mut response = self.response.clone();
        response.extend_from_slice(&other.response);
        FeatureTable::new(weeks, columns, self.response_name.clone(), response, self.lead_time)
    }

    /// Replace the values of one feature column.
    pub fn with_values(&self, name: &str, values: Vec<f64>) -> Result<FeatureTable> {
        let mut out = self.clone();
        let col = out
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::contract(MODULE, format!("unknown column `{name}`")))?;
        if values.len() != col.values.len() {
            return Err(Error::contract(MODULE, "replacement column has wrong length"));
        }
        col.values = values;
        Ok(out)
    }

    /// Indicator columns for a categorical feature, one per level in
    /// `levels` (callers drop the reference level themselves).
    pub fn one_hot(&self, name: &str, levels: &[u16]) -> Result<Vec<Vec<f64>>> {
        let col = self
            .column(name)
            .ok_or_else(|| Error::contract(MODULE, format!("unknown column `{name}`")))?;
        if !col.role.is_categorical() {
            return Err(Error::contract(MODULE, format!("`{name}` is not categorical")));
        }
        Ok(levels
            .iter()
            .map(|&l| {
                col.values
                    .iter()
                    .map(|&v| if v == f64::from(l) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect())
    }

    pub fn sidecar(&self) -> TableSidecar {
        TableSidecar {
            version: SIDECAR_VERSION,
            lead_time: self.lead_time,
            index: "week".to_string(),
            response: self.response_name.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| SidecarColumn {
                    name: c.name.clone(),
                    role: c.role,
                })
                .collect(),
        }
    }

    /// Write the table as CSV (`week,<features...>,<response>`).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["week".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        header.push(self.response_name.clone());
        w.write_record(&header).map_err(|e| csv_err("table csv", e))?;
        for i in 0..self.n_rows() {
            let mut rec = Vec::with_capacity(header.len());
            rec.push(self.weeks[i].to_string());
            for c in &self.columns {
                rec.push(c.values[i].to_string());
            }
            rec.push(self.response[i].to_string());
            w.write_record(&rec).map_err(|e| csv_err("table csv", e))?;
        }
        w.flush().map_err(|e| Error::io("table csv", e))
    }

    /// One-line JSON declaring column roles.
    pub fn sidecar_json(&self) -> String {
        let mut s = serde_json::to_string(&self.sidecar()).expect("sidecar serializes");
        s.push('\n');
        s
    }

    /// Parse a table CSV using its JSON sidecar.
    pub fn read_csv<R: Read>(reader: R, sidecar_json: &str) -> Result<FeatureTable> {
        let sidecar: TableSidecar = serde_json::from_str(sidecar_json.trim())
            .map_err(|e| Error::parse(MODULE, "table sidecar", e.to_string()))?;
        if sidecar.version != SIDECAR_VERSION {
            return Err(Error::parse(
                MODULE,
                "table sidecar",
                format!("unsupported version {}", sidecar.version),
            ));
        }
        let mut expected: Vec<&str> = vec![sidecar.index.as_str()];
        expected.extend(sidecar.columns.iter().map(|c| c.name.as_str()));
        expected.push(sidecar.response.as_str());
        let mut rdr = csv::Reader::from_reader(reader);
        check_header(&mut rdr, &expected, "table csv")?;
        let mut weeks = Vec::new();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); sidecar.columns.len()];
        let mut response = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_err("table csv", e))?;
            if rec.len() != expected.len() {
                return Err(Error::parse(MODULE, "table csv", format!("row {} has {} fields", row + 1, rec.len())));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(MODULE, "table csv", format!("row {}: `{s}`: {e}", row + 1)))
            };
            weeks.push(rec[0].trim().parse::<u32>().map_err(|e| {
                Error::parse(MODULE, "table csv", format!("row {}: week `{}`: {e}", row + 1, &rec[0]))
            })?);
            for (j, col) in values.iter_mut().enumerate() {
                col.push(parse(&rec[j + 1])?);
            }
            response.push(parse(&rec[expected.len() - 1])?);
        }
        let columns = sidecar
            .columns
            .into_iter()
            .zip(values)
            .map(|(c, values)| FeatureColumn {
                name: c.name,
                role: c.role,
                values,
            })
            .collect();
        FeatureTable::new(weeks, columns, sidecar.response, response, sidecar.lead_time).map_err(|e| {
            Error::parse(MODULE, "table csv", e.to_string())
        })
    }
}

pub const SIDECAR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSidecar {
    pub version: u32,
    pub lead_time: u32,
    pub index: String,
    pub response: String,
    pub columns: Vec<SidecarColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarColumn {
    pub name: String,
    #[serde(flatten)]
    pub role: ColumnRole,
}

/// One macro-outlook snapshot: the value forecast for `target_quarter_seq`
/// as published in quarter `as_of_quarter_seq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlookSnapshot {
    pub indicator: String,
    pub as_of_quarter_seq: u32,
    pub target_quarter_seq: u32,
    pub value: f64,
}

pub fn read_outlook_csv<R: Read>(reader: R) -> Result<Vec<OutlookSnapshot>> {
    let mut rdr = csv::Reader::from_reader(reader);
    check_header(
        &mut rdr,
        &["indicator", "as_of_quarter_seq", "target_quarter_seq", "value"],
        "outlook csv",
    )?;
    let rows: Vec<OutlookSnapshot> = rdr
        .deserialize()
        .map(|r| r.map_err(|e| csv_err("outlook csv", e)))
        .collect::<Result<_>>()?;
    if let Some(r) = rows.iter().find(|r| !r.value.is_finite()) {
        return Err(Error::parse(MODULE, "outlook csv", format!("non-finite value for {}", r.indicator)));
    }
    Ok(rows)
}

pub fn write_outlook_csv<W: Write>(writer: W, rows: &[OutlookSnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| csv_err("outlook csv", e))?;
    }
    w.flush().map_err(|e| Error::io("outlook csv", e))
}

/// Outlook revision columns `<indicator>_delta`, one value per calendar week.
///
/// A snapshot published in quarter `s` counts as issued in the first week of
/// `s` and is visible to strictly later weeks. For a week in quarter `Q` the
/// value is the latest visible snapshot for `Q` minus the one before it, or 0
/// while fewer than two are visible. Snapshots for one (indicator, target)
/// must appear with strictly increasing `as_of_quarter_seq`.
pub fn outlook_delta(snapshots: &[OutlookSnapshot], calendar: &FiscalCalendar) -> Result<Vec<SeriesColumn>> {
    let mut by_key: BTreeMap<(&str, u32), Vec<(u32, f64)>> = BTreeMap::new();
    for s in snapshots {
        let list = by_key.entry((s.indicator.as_str(), s.target_quarter_seq)).or_default();
        if let Some(&(prev, _)) = list.last() {
            if s.as_of_quarter_seq <= prev {
                return Err(Error::contract(
                    MODULE,
                    format!(
                        "outlook `{}` for quarter {}: snapshot as of {} follows as of {}",
                        s.indicator, s.target_quarter_seq, s.as_of_quarter_seq, prev
                    ),
                ));
            }
        }
        list.push((s.as_of_quarter_seq, s.value));
    }
    let indicators: BTreeSet<&str> = snapshots.iter().map(|s| s.indicator.as_str()).collect();
    let n = calendar.n_weeks();
    let mut out = Vec::new();
    for ind in indicators {
        let mut values = Vec::with_capacity(n as usize);
        for stamp in calendar.weeks() {
            let v = by_key
                .get(&(ind, stamp.quarter_seq))
                .map(|list| {
                    let visible: Vec<f64> = list
                        .iter()
                        .filter(|(as_of, _)| {
                            calendar
                                .quarter_start(*as_of)
                                .map_or(*as_of < stamp.quarter_seq, |issue| issue < stamp.absolute_week)
                        })
                        .map(|(_, v)| *v)
                        .collect();
                    match visible.as_slice() {
                        [.., a, b] => b - a,
                        _ => 0.0,
                    }
                })
                .unwrap_or(0.0);
            values.push(v);
        }
        out.push(SeriesColumn::numeric(format!("{ind}_delta"), 1, values));
    }
    Ok(out)
}

/// Weekly lunar-new-year effect: each of the 11 days from LNY-5 to LNY+5
/// carries 1/11, and a week's value is the weight of its days.
pub fn cny_effect(calendar: &FiscalCalendar) -> Result<SeriesColumn> {
    let n = calendar.n_weeks() as usize;
    let mut values = vec![0.0; n];
    let start = calendar.start_date();
    let end = calendar.week_start_date(calendar.n_weeks()) + Days::new(6);
    for year in calendar.covered_years() {
        let lny = calendar.lunar_new_year().get(&year).ok_or_else(|| {
            Error::config(MODULE, "lunar_new_year", format!("no lunar new year date for {year}"))
        })?;
        for offset in -5i64..=5 {
            let day = if offset < 0 {
                *lny - Days::new(offset.unsigned_abs())
            } else {
                *lny + Days::new(offset as u64)
            };
            if day < start || day > end {
                continue;
            }
            let idx = ((day - start).num_days() / 7) as usize;
            values[idx] += 1.0 / 11.0;
        }
    }
    Ok(SeriesColumn {
        name: "cny_effect".to_string(),
        role: ColumnRole::Numeric,
        first_week: 1,
        values,
    })
}

/// `seasonality` (categorical, 4 levels), `week_of_quarter` (categorical,
/// cardinality = longest quarter in the calendar) and `quarter_seq` (numeric).
pub fn calendar_features(weeks: &[WeekStamp], calendar: &FiscalCalendar) -> Result<Vec<SeriesColumn>> {
    if weeks.windows(2).any(|w| w[1].absolute_week != w[0].absolute_week + 1) {
        return Err(Error::contract(MODULE, "calendar_features: weeks must be consecutive"));
    }
    let first = weeks.first().map_or(1, |w| w.absolute_week);
    let max_weeks = calendar
        .quarters()
        .iter()
        .map(|q| u16::from(q.weeks_in_quarter))
        .max()
        .unwrap_or(13);
    Ok(vec![
        SeriesColumn {
            name: "seasonality".into(),
            role: ColumnRole::Categorical { cardinality: 4 },
            first_week: first,
            values: weeks.iter().map(|w| f64::from(w.quarter)).collect(),
        },
        SeriesColumn {
            name: "week_of_quarter".into(),
            role: ColumnRole::Categorical { cardinality: max_weeks },
            first_week: first,
            values: weeks.iter().map(|w| f64::from(w.week_of_quarter)).collect(),
        },
        SeriesColumn::numeric("quarter_seq", first, weeks.iter().map(|w| f64::from(w.quarter_seq)).collect()),
    ])
}

/// Lagged copies of a series: column `<lob>_w_<k>` at week `t` holds the
/// value at `t - k`.
pub fn lag_features(series: &WeeklySeries, lags: &[u32]) -> Result<Vec<SeriesColumn>> {
    let first = series
        .first_week()
        .ok_or_else(|| Error::config(MODULE, "lags", format!("series {} is empty", series.lob())))?;
    let values = series.values();
    lags.iter()
        .map(|&k| {
            if k == 0 {
                return Err(Error::config(MODULE, "lags", "lag must be at least 1"));
            }
            if k as usize >= values.len() {
                return Err(Error::config(
                    MODULE,
                    "lags",
                    format!("lag {k} >= series length {}", values.len()),
                ));
            }
            Ok(SeriesColumn::numeric(
                format!("{}_w_{k}", series.lob()),
                first + k,
                values[..values.len() - k as usize].to_vec(),
            ))
        })
        .collect()
}

/// Align feature columns with the response `lead_time` weeks ahead.
///
/// Rows are the origin weeks covered by every column whose target week has a
/// response; rows with any non-finite input are dropped.
pub fn assemble(columns: &[SeriesColumn], response: &WeeklySeries, lead_time: u32) -> Result<FeatureTable> {
    if lead_time == 0 {
        return Err(Error::config(MODULE, "lead_time", "must be at least 1"));
    }
    let (Some(r_first), Some(r_last)) = (response.first_week(), response.last_week()) else {
        return Err(Error::domain(MODULE, "empty response series"));
    };
    let mut lo = r_first.saturating_sub(lead_time).max(1);
    let mut hi = r_last.saturating_sub(lead_time);
    for c in columns {
        let Some(last) = c.last_week() else {
            return Err(Error::domain(MODULE, format!("column `{}` is empty", c.name)));
        };
        lo = lo.max(c.first_week);
        hi = hi.min(last);
    }
    if r_last < lead_time || lo > hi {
        return Err(Error::domain(
            MODULE,
            format!("no origin week has every feature and a response {lead_time} weeks ahead"),
        ));
    }
    let mut weeks = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); columns.len()];
    let mut y = Vec::new();
    for t in lo..=hi {
        let Some(target) = response.value_at(t + lead_time) else { continue };
        let row: Option<Vec<f64>> = columns.iter().map(|c| c.at(t).filter(|v| v.is_finite())).collect();
        let Some(row) = row else { continue };
        if !target.is_finite() {
            continue;
        }
        weeks.push(t);
        for (col, v) in values.iter_mut().zip(row) {
            col.push(v);
        }
        y.push(target);
    }
    if weeks.is_empty() {
        return Err(Error::domain(MODULE, "feature and response ranges do not intersect"));
    }
    let columns = columns
        .iter()
        .zip(values)
        .map(|(c, values)| FeatureColumn {
            name: c.name.clone(),
            role: c.role,
            values,
        })
        .collect();
    FeatureTable::new(weeks, columns, format!("{}_target", response.lob()), y, lead_time)
}

/// Raw feeds the standard feature set is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Feeds {
    pub calendar: FiscalCalendar,
    /// Weekly sales, one series per line of business.
    pub sales: Vec<WeeklySeries>,
    /// `<lob>_backlog_<j>`: bookings for week `t + j` as seen at week `t`.
    pub booking: Vec<WeeklySeries>,
    /// `<lob>_asp`: average selling price.
    pub asp: Vec<WeeklySeries>,
    pub outlook: Vec<OutlookSnapshot>,
}

/// Which feature families go into the standard table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub lags: Vec<u32>,
    pub include_booking: bool,
    pub include_asp: bool,
    pub include_outlook: bool,
    pub include_cny: bool,
    pub include_calendar: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            lags: vec![1, 2, 3, 4],
            include_booking: true,
            include_asp: true,
            include_outlook: true,
            include_cny: true,
            include_calendar: true,
        }
    }
}

impl Feeds {
    pub fn sales_of(&self, lob: &str) -> Result<&WeeklySeries> {
        self.sales
            .iter()
            .find(|s| s.lob() == lob)
            .ok_or_else(|| Error::config(MODULE, "lob", format!("no sales series for `{lob}`")))
    }

    pub fn lobs(&self) -> Vec<String> {
        self.sales.iter().map(|s| s.lob().to_string()).collect()
    }

    /// Every feature column for a lead-`lead_time` model, before alignment.
    /// Lags and bookings are taken across all lines of business; bookings
    /// enter only at the matching lead.
    pub fn feature_columns(&self, lead_time: u32, config: &FeatureConfig) -> Result<Vec<SeriesColumn>> {
        let mut cols = Vec::new();
        for s in &self.sales {
            cols.extend(lag_features(s, &config.lags)?);
        }
        if config.include_booking {
            let suffix = format!("_backlog_{lead_time}");
            for b in self.booking.iter().filter(|b| b.lob().ends_with(&suffix)) {
                if let Some(first) = b.first_week() {
                    cols.push(SeriesColumn::numeric(b.lob(), first, b.values()));
                }
            }
        }
        if config.include_asp {
            for a in &self.asp {
                if let Some(first) = a.first_week() {
                    cols.push(SeriesColumn::numeric(a.lob(), first, a.values()));
                }
            }
        }
        if config.include_outlook && !self.outlook.is_empty() {
            cols.extend(outlook_delta(&self.outlook, &self.calendar)?);
        }
        if config.include_cny {
            cols.push(cny_effect(&self.calendar)?);
        }
        if config.include_calendar {
            let stamps: Vec<WeekStamp> = self.calendar.weeks().collect();
            cols.extend(calendar_features(&stamps, &self.calendar)?);
        }
        Ok(cols)
    }

    pub fn table(&self, lob: &str, lead_time: u32, config: &FeatureConfig) -> Result<FeatureTable> {
        let cols = self.feature_columns(lead_time, config)?;
        assemble(&cols, self.sales_of(lob)?, lead_time)
    }
}
