//! On-disk layout of a feed directory and calendar settings.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::{
    default_start_date, read_calendar_csv, read_lunar_new_year_csv, read_series_csv, write_series_csv,
    FiscalCalendar,
};
use crate::error::{Error, Result};
use crate::features::{read_outlook_csv, write_outlook_csv, Feeds};

pub const CALENDAR_FILE: &str = "calendar.csv";
pub const LUNAR_NEW_YEAR_FILE: &str = "lunar_new_year.csv";
pub const SALES_FILE: &str = "sales.csv";
pub const BOOKING_FILE: &str = "booking.csv";
pub const ASP_FILE: &str = "asp.csv";
pub const OUTLOOK_FILE: &str = "outlook.csv";

/// Files of a feed directory, in a fixed order.
pub const FEED_FILES: [&str; 6] = [CALENDAR_FILE, LUNAR_NEW_YEAR_FILE, SALES_FILE, BOOKING_FILE, ASP_FILE, OUTLOOK_FILE];

/// Calendar settings not carried by the calendar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalendarConfig {
    pub first_year: i32,
    /// Years whose first quarter has 14 weeks.
    pub long_years: Vec<i32>,
    /// First day of fiscal week 1; defaults to the Sunday on or before
    /// January 1 of the first fiscal year.
    pub start_date: Option<NaiveDate>,
}

impl Default for CalendarConfig {
    fn default() -> Self {
        Self {
            first_year: 2012,
            long_years: vec![2016],
            start_date: None,
        }
    }
}

impl CalendarConfig {
    pub fn build(&self, n_years: u32) -> Result<FiscalCalendar> {
        FiscalCalendar::standard(
            self.first_year,
            n_years,
            &self.long_years,
            crate::calendar::builtin_lunar_new_year(),
            self.start_date.unwrap_or_else(|| default_start_date(self.first_year)),
        )
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Write every feed file into `dir`, which must exist.
pub fn write_feeds(dir: &Path, feeds: &Feeds) -> Result<Vec<PathBuf>> {
    let path = |f: &str| dir.join(f);
    let finish = |w: BufWriter<File>, p: &Path| -> Result<()> {
        w.into_inner().map_err(|e| Error::io(p, e.into_error()))?.flush().map_err(|e| Error::io(p, e))
    };
    let p = path(CALENDAR_FILE);
    let mut w = create(&p)?;
    feeds.calendar.to_csv(&mut w)?;
    finish(w, &p)?;
    let p = path(LUNAR_NEW_YEAR_FILE);
    let mut w = create(&p)?;
    feeds.calendar.lunar_new_year_to_csv(&mut w)?;
    finish(w, &p)?;
    for (file, series) in [(SALES_FILE, &feeds.sales), (BOOKING_FILE, &feeds.booking), (ASP_FILE, &feeds.asp)] {
        let p = path(file);
        let mut w = create(&p)?;
        write_series_csv(&mut w, series)?;
        finish(w, &p)?;
    }
    let p = path(OUTLOOK_FILE);
    let mut w = create(&p)?;
    write_outlook_csv(&mut w, &feeds.outlook)?;
    finish(w, &p)?;
    Ok(FEED_FILES.iter().map(|f| path(f)).collect())
}

/// Read a feed directory. `start_date` anchors week 1; when absent the
/// default for the calendar's first fiscal year is used.
pub fn read_feeds(dir: &Path, start_date: Option<NaiveDate>) -> Result<Feeds> {
    let path = |f: &str| dir.join(f);
    let quarters = read_calendar_csv(open(&path(CALENDAR_FILE))?)?;
    let lny = read_lunar_new_year_csv(open(&path(LUNAR_NEW_YEAR_FILE))?)?;
    let first_year = quarters
        .first()
        .map(|q| q.fiscal_year)
        .ok_or_else(|| Error::parse("calendar", "calendar csv", "no quarters"))?;
    let calendar = FiscalCalendar::new(quarters, lny, start_date.unwrap_or_else(|| default_start_date(first_year)))?;
    let sales = read_series_csv(open(&path(SALES_FILE))?, &calendar)?;
    let booking = read_series_csv(open(&path(BOOKING_FILE))?, &calendar)?;
    let asp = read_series_csv(open(&path(ASP_FILE))?, &calendar)?;
    let outlook = read_outlook_csv(open(&path(OUTLOOK_FILE))?)?;
    Ok(Feeds {
        calendar,
        sales,
        booking,
        asp,
        outlook,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, SynthConfig};

    #[test]
    fn feeds_round_trip() {
        let cfg = SynthConfig {
            n_years: 2,
            ..SynthConfig::default()
        };
        let cal = CalendarConfig::default().build(2).unwrap();
        let feeds = generate(&cfg, &cal).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_feeds(dir.path(), &feeds).unwrap();
        let back = read_feeds(dir.path(), None).unwrap();
        assert_eq!(back, feeds);
        let e = read_feeds(&dir.path().join("missing"), None).unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }
}
