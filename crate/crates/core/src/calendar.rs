//! Fiscal calendar arithmetic and the weekly series container.
//!
//! The calendar is always supplied as data: an ordered list of fiscal
//! quarters with their week counts (13 or 14), one lunar-new-year date per
//! calendar year, and the date on which the first fiscal week starts. Nothing
//! here maps ISO weeks onto fiscal weeks.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "core";

/// Fiscal time coordinates of one week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WeekStamp {
    /// 1-based index, consecutive over the calendar.
    pub absolute_week: u32,
    pub fiscal_year: i32,
    /// 1..=4
    pub quarter: u8,
    /// 1..=13, or 1..=14 in a 14-week quarter.
    pub week_of_quarter: u8,
    /// 1-based consecutive quarter counter.
    pub quarter_seq: u32,
}

/// One row of the fiscal calendar file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiscalQuarter {
    pub fiscal_year: i32,
    pub quarter: u8,
    pub weeks_in_quarter: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiscalCalendar {
    quarters: Vec<FiscalQuarter>,
    /// Absolute week of the first week of each quarter (index = quarter_seq - 1).
    quarter_starts: Vec<u32>,
    lunar_new_year: BTreeMap<i32, NaiveDate>,
    start_date: NaiveDate,
}

impl FiscalCalendar {
    /// Build a calendar; quarters must be contiguous and have 13 or 14 weeks.
    pub fn new(
        quarters: Vec<FiscalQuarter>,
        lunar_new_year: BTreeMap<i32, NaiveDate>,
        start_date: NaiveDate,
    ) -> Result<Self> {
        if quarters.is_empty() {
            return Err(Error::config(MODULE, "calendar", "no quarters"));
        }
        for (i, q) in quarters.iter().enumerate() {
            if !(1..=4).contains(&q.quarter) {
                return Err(Error::config(
                    MODULE,
                    "quarter",
                    format!("row {}: quarter {} outside 1..=4", i + 1, q.quarter),
                ));
            }
            if q.weeks_in_quarter != 13 && q.weeks_in_quarter != 14 {
                return Err(Error::config(
                    MODULE,
                    "weeks_in_quarter",
                    format!("row {}: {} weeks (must be 13 or 14)", i + 1, q.weeks_in_quarter),
                ));
            }
            if i > 0 {
                let prev = quarters[i - 1];
                let expected = if prev.quarter == 4 {
                    (prev.fiscal_year + 1, 1)
                } else {
                    (prev.fiscal_year, prev.quarter + 1)
                };
                if (q.fiscal_year, q.quarter) != expected {
                    return Err(Error::config(
                        MODULE,
                        "calendar",
                        format!(
                            "row {}: FY{} Q{} does not follow FY{} Q{}",
                            i + 1,
                            q.fiscal_year,
                            q.quarter,
                            prev.fiscal_year,
                            prev.quarter
                        ),
                    ));
                }
            }
        }
        let mut quarter_starts = Vec::with_capacity(quarters.len());
        let mut next = 1u32;
        for q in &quarters {
            quarter_starts.push(next);
            next += u32::from(q.weeks_in_quarter);
        }
        Ok(Self {
            quarters,
            quarter_starts,
            lunar_new_year,
            start_date,
        })
    }

    /// A calendar of `n_years` fiscal years of 13-week quarters starting in
    /// `first_year`, with Q1 stretched to 14 weeks in each of `long_years`.
    pub fn standard(
        first_year: i32,
        n_years: u32,
        long_years: &[i32],
        lunar_new_year: BTreeMap<i32, NaiveDate>,
        start_date: NaiveDate,
    ) -> Result<Self> {
        let mut quarters = Vec::new();
        for fy in first_year..first_year + n_years as i32 {
            for quarter in 1..=4u8 {
                let weeks_in_quarter = if quarter == 1 && long_years.contains(&fy) { 14 } else { 13 };
                quarters.push(FiscalQuarter {
                    fiscal_year: fy,
                    quarter,
                    weeks_in_quarter,
                });
            }
        }
        Self::new(quarters, lunar_new_year, start_date)
    }

    pub fn quarters(&self) -> &[FiscalQuarter] {
        &self.quarters
    }

    pub fn lunar_new_year(&self) -> &BTreeMap<i32, NaiveDate> {
        &self.lunar_new_year
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn n_weeks(&self) -> u32 {
        self.quarter_starts.last().copied().unwrap_or(1) - 1
            + self.quarters.last().map_or(0, |q| u32::from(q.weeks_in_quarter))
    }

    pub fn n_quarters(&self) -> u32 {
        self.quarters.len() as u32
    }

    pub fn first_year(&self) -> i32 {
        self.quarters[0].fiscal_year
    }

    /// Number of whole fiscal years covered.
    pub fn n_years(&self) -> u32 {
        self.quarters.iter().filter(|q| q.quarter == 4).count() as u32
    }

    pub fn quarter(&self, quarter_seq: u32) -> Option<FiscalQuarter> {
        let idx = quarter_seq.checked_sub(1)? as usize;
        self.quarters.get(idx).copied()
    }

    /// Absolute week of the first week of a quarter.
    pub fn quarter_start(&self, quarter_seq: u32) -> Option<u32> {
        let idx = quarter_seq.checked_sub(1)? as usize;
        self.quarter_starts.get(idx).copied()
    }

    pub fn stamp(&self, absolute_week: u32) -> Option<WeekStamp> {
        if absolute_week == 0 || absolute_week > self.n_weeks() {
            return None;
        }
        let idx = self.quarter_starts.partition_point(|&s| s <= absolute_week) - 1;
        let q = self.quarters[idx];
        Some(WeekStamp {
            absolute_week,
            fiscal_year: q.fiscal_year,
            quarter: q.quarter,
            week_of_quarter: (absolute_week - self.quarter_starts[idx] + 1) as u8,
            quarter_seq: idx as u32 + 1,
        })
    }

    pub fn lookup(&self, fiscal_year: i32, quarter: u8, week_of_quarter: u8) -> Option<WeekStamp> {
        let idx = self
            .quarters
            .iter()
            .position(|q| q.fiscal_year == fiscal_year && q.quarter == quarter)?;
        if week_of_quarter == 0 || week_of_quarter > self.quarters[idx].weeks_in_quarter {
            return None;
        }
        self.stamp(self.quarter_starts[idx] + u32::from(week_of_quarter) - 1)
    }

    pub fn weeks(&self) -> impl Iterator<Item = WeekStamp> + '_ {
        (1..=self.n_weeks()).filter_map(move |w| self.stamp(w))
    }

    /// First day of a fiscal week.
    pub fn week_start_date(&self, absolute_week: u32) -> NaiveDate {
        self.start_date + Days::new(7 * u64::from(absolute_week.saturating_sub(1)))
    }

    /// Calendar years touched by the calendar span.
    pub fn covered_years(&self) -> std::ops::RangeInclusive<i32> {
        let last = self.week_start_date(self.n_weeks()) + Days::new(6);
        self.start_date.year()..=last.year()
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for q in &self.quarters {
            w.serialize(q).map_err(|e| csv_err("calendar csv", e))?;
        }
        w.flush().map_err(|e| Error::io("calendar csv", e))
    }

    pub fn lunar_new_year_to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["year", "date"]).map_err(|e| csv_err("lunar new year csv", e))?;
        for (year, date) in &self.lunar_new_year {
            w.write_record([year.to_string(), date.format("%Y-%m-%d").to_string()])
                .map_err(|e| csv_err("lunar new year csv", e))?;
        }
        w.flush().map_err(|e| Error::io("lunar new year csv", e))
    }
}

pub(crate) fn csv_err(what: &str, e: csv::Error) -> Error {
    Error::parse(MODULE, what, e.to_string())
}

pub(crate) fn check_header<R: Read>(
    reader: &mut csv::Reader<R>,
    expected: &[&str],
    what: &'static str,
) -> Result<()> {
    let headers = reader.headers().map_err(|e| csv_err(what, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            MODULE,
            what,
            format!(
                "header `{}` does not match `{}`",
                headers.iter().collect::<Vec<_>>().join(","),
                expected.join(",")
            ),
        ));
    }
    Ok(())
}

/// Parse the fiscal calendar file (`fiscal_year,quarter,weeks_in_quarter`).
pub fn read_calendar_csv<R: Read>(reader: R) -> Result<Vec<FiscalQuarter>> {
    let mut rdr = csv::Reader::from_reader(reader);
    check_header(&mut rdr, &["fiscal_year", "quarter", "weeks_in_quarter"], "calendar csv")?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| csv_err("calendar csv", e)))
        .collect()
}

/// Parse the lunar-new-year file (`year,date`, ISO-8601 dates).
pub fn read_lunar_new_year_csv<R: Read>(reader: R) -> Result<BTreeMap<i32, NaiveDate>> {
    #[derive(Deserialize)]
    struct Row {
        year: i32,
        date: String,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    check_header(&mut rdr, &["year", "date"], "lunar new year csv")?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| csv_err("lunar new year csv", e))?;
        let date = NaiveDate::parse_from_str(row.date.trim(), "%Y-%m-%d").map_err(|e| {
            Error::parse(MODULE, "lunar new year csv", format!("date `{}`: {e}", row.date))
        })?;
        if date.year() != row.year {
            return Err(Error::parse(
                MODULE,
                "lunar new year csv",
                format!("date {date} is not in year {}", row.year),
            ));
        }
        if out.insert(row.year, date).is_some() {
            return Err(Error::parse(
                MODULE,
                "lunar new year csv",
                format!("duplicate year {}", row.year),
            ));
        }
    }
    Ok(out)
}

/// A weekly series for one line of business (or one derived feed such as
/// `DT_backlog_3`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklySeries {
    lob: String,
    points: Vec<(WeekStamp, f64)>,
}

impl WeeklySeries {
    /// Points must be gap-free, strictly increasing in week, and finite.
    pub fn new(lob: impl Into<String>, points: Vec<(WeekStamp, f64)>) -> Result<Self> {
        let lob = lob.into();
        for pair in points.windows(2) {
            if pair[1].0.absolute_week != pair[0].0.absolute_week + 1 {
                return Err(Error::contract(
                    MODULE,
                    format!(
                        "series {lob}: week {} follows week {} (gap or disorder)",
                        pair[1].0.absolute_week, pair[0].0.absolute_week
                    ),
                ));
            }
        }
        if let Some((stamp, v)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::contract(
                MODULE,
                format!("series {lob}: non-finite value {v} at week {}", stamp.absolute_week),
            ));
        }
        Ok(Self { lob, points })
    }

    /// Series over consecutive calendar weeks starting at `first_week`.
    pub fn from_values(
        lob: impl Into<String>,
        calendar: &FiscalCalendar,
        first_week: u32,
        values: &[f64],
    ) -> Result<Self> {
        let lob = lob.into();
        let mut points = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            let week = first_week + i as u32;
            let stamp = calendar.stamp(week).ok_or_else(|| {
                Error::contract(MODULE, format!("series {lob}: week {week} outside calendar"))
            })?;
            points.push((stamp, v));
        }
        Self::new(lob, points)
    }

    pub fn lob(&self) -> &str {
        &self.lob
    }

    pub fn points(&self) -> &[(WeekStamp, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|(_, v)| *v).collect()
    }

    pub fn first_week(&self) -> Option<u32> {
        self.points.first().map(|(s, _)| s.absolute_week)
    }

    pub fn last_week(&self) -> Option<u32> {
        self.points.last().map(|(s, _)| s.absolute_week)
    }

    pub fn value_at(&self, absolute_week: u32) -> Option<f64> {
        let first = self.first_week()?;
        let idx = absolute_week.checked_sub(first)? as usize;
        self.points.get(idx).map(|(_, v)| *v)
    }

    /// Same series with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.lob.clone(),
            self.points.iter().map(|(s, v)| (*s, v * factor)).collect(),
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    lob: String,
    fiscal_year: i32,
    quarter: u8,
    week_of_quarter: u8,
    value: f64,
}

/// Parse a weekly series file (`lob,fiscal_year,quarter,week_of_quarter,value`).
/// Rows are grouped by `lob` in order of first appearance.
pub fn read_series_csv<R: Read>(reader: R, calendar: &FiscalCalendar) -> Result<Vec<WeeklySeries>> {
    let mut rdr = csv::Reader::from_reader(reader);
    check_header(
        &mut rdr,
        &["lob", "fiscal_year", "quarter", "week_of_quarter", "value"],
        "series csv",
    )?;
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<(WeekStamp, f64)>> = BTreeMap::new();
    for row in rdr.deserialize::<SeriesRow>() {
        let row = row.map_err(|e| csv_err("series csv", e))?;
        let stamp = calendar
            .lookup(row.fiscal_year, row.quarter, row.week_of_quarter)
            .ok_or_else(|| {
                Error::parse(
                    MODULE,
                    "series csv",
                    format!(
                        "FY{} Q{} week {} is not in the calendar",
                        row.fiscal_year, row.quarter, row.week_of_quarter
                    ),
                )
            })?;
        if !groups.contains_key(&row.lob) {
            order.push(row.lob.clone());
        }
        groups.entry(row.lob).or_default().push((stamp, row.value));
    }
    order
        .into_iter()
        .map(|lob| {
            let points = groups.remove(&lob).unwrap_or_default();
            WeeklySeries::new(lob, points)
        })
        .collect()
}

pub fn write_series_csv<W: Write>(writer: W, series: &[WeeklySeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lob", "fiscal_year", "quarter", "week_of_quarter", "value"])
        .map_err(|e| csv_err("series csv", e))?;
    for s in series {
        for (stamp, value) in &s.points {
            w.write_record([
                s.lob.clone(),
                stamp.fiscal_year.to_string(),
                stamp.quarter.to_string(),
                stamp.week_of_quarter.to_string(),
                value.to_string(),
            ])
            .map_err(|e| csv_err("series csv", e))?;
        }
    }
    w.flush().map_err(|e| Error::io("series csv", e))
}

/// Year-over-year growth of one fiscal quarter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarterYoy {
    pub quarter_seq: u32,
    pub fiscal_year: i32,
    pub quarter: u8,
    pub yoy: f64,
}

/// Quarterly YoY growth: `total(q) / total(same quarter a year earlier) - 1`,
/// with 14-week quarter totals scaled by 13/14 first.
///
/// Only quarters fully covered by the series take part. Fewer than five
/// covered quarters yields an empty vector.
pub fn quarterly_yoy(series: &WeeklySeries, calendar: &FiscalCalendar) -> Vec<QuarterYoy> {
    let mut totals: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
    for (stamp, value) in series.points() {
        let e = totals.entry(stamp.quarter_seq).or_insert((0.0, 0));
        e.0 += value;
        e.1 += 1;
    }
    let normalized: BTreeMap<u32, f64> = totals
        .into_iter()
        .filter_map(|(seq, (total, count))| {
            let q = calendar.quarter(seq)?;
            if count != u32::from(q.weeks_in_quarter) {
                return None;
            }
            let total = if q.weeks_in_quarter == 14 { total * 13.0 / 14.0 } else { total };
            Some((seq, total))
        })
        .collect();
    if normalized.len() < 5 {
        return Vec::new();
    }
    normalized
        .iter()
        .filter_map(|(&seq, &total)| {
            let prior = *normalized.get(&seq.checked_sub(4)?)?;
            let q = calendar.quarter(seq)?;
            Some(QuarterYoy {
                quarter_seq: seq,
                fiscal_year: q.fiscal_year,
                quarter: q.quarter,
                yoy: total / prior - 1.0,
            })
        })
        .collect()
}

/// The Sunday on or before January 1 of `first_year`; the default first day
/// of fiscal week 1.
pub fn default_start_date(first_year: i32) -> NaiveDate {
    let jan1 = NaiveDate::from_ymd_opt(first_year, 1, 1).expect("valid year");
    jan1 - Days::new(u64::from(jan1.weekday().num_days_from_sunday()))
}

/// Lunar new year dates 2010-2030, for synthetic calendars.
pub fn builtin_lunar_new_year() -> BTreeMap<i32, NaiveDate> {
    const DATES: [(i32, u32, u32); 21] = [
        (2010, 2, 14),
        (2011, 2, 3),
        (2012, 1, 23),
        (2013, 2, 10),
        (2014, 1, 31),
        (2015, 2, 19),
        (2016, 2, 8),
        (2017, 1, 28),
        (2018, 2, 16),
        (2019, 2, 5),
        (2020, 1, 25),
        (2021, 2, 12),
        (2022, 2, 1),
        (2023, 1, 22),
        (2024, 2, 10),
        (2025, 1, 29),
        (2026, 2, 17),
        (2027, 2, 6),
        (2028, 1, 26),
        (2029, 2, 13),
        (2030, 2, 3),
    ];
    DATES
        .iter()
        .map(|&(y, m, d)| (y, NaiveDate::from_ymd_opt(y, m, d).expect("valid date")))
        .collect()
}
