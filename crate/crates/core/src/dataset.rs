//! Record ingestion: raw `label,latitude,longitude,date` rows are turned into
//! processed `label,latitude,longitude,day,holiday_diff` rows.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use indexmap::IndexMap;

use crate::error::{Error, Result};

/// Input dimension names in model order.
pub const DIMENSION_NAMES: [&str; 4] = ["latitude", "longitude", "day", "holiday_diff"];

pub const RAW_HEADER: [&str; 4] = ["label", "latitude", "longitude", "date"];
pub const PROCESSED_HEADER: [&str; 5] = ["label", "latitude", "longitude", "day", "holiday_diff"];

/// Trims and lowercases a class label.
pub fn normalize_label(label: &str) -> String {
    label.trim().to_lowercase()
}

fn check_label(label: &str) -> std::result::Result<String, String> {
    let label = normalize_label(label);
    if label.is_empty() {
        return Err("empty label".to_string());
    }
    Ok(label)
}

fn check_coordinates(latitude: f64, longitude: f64) -> std::result::Result<(), String> {
    if !(-90.0..=90.0).contains(&latitude) {
        return Err(format!("latitude {latitude} outside [-90, 90]"));
    }
    if !(-180.0..=180.0).contains(&longitude) {
        return Err(format!("longitude {longitude} outside [-180, 180]"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    label: String,
    latitude: f64,
    longitude: f64,
    date: NaiveDate,
}

impl RawRecord {
    pub fn new(label: &str, latitude: f64, longitude: f64, date: NaiveDate) -> Result<Self> {
        let label = check_label(label).map_err(Error::Data)?;
        check_coordinates(latitude, longitude).map_err(Error::Data)?;
        Ok(Self {
            label,
            latitude,
            longitude,
            date,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }
}

/// One labeled observation in model-input form.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedRecord {
    pub label: String,
    pub latitude: f64,
    pub longitude: f64,
    pub day: u32,
    pub holiday_diff: u32,
}

impl ProcessedRecord {
    pub fn new(label: &str, latitude: f64, longitude: f64, day: u32, holiday_diff: u32) -> Result<Self> {
        let label = check_label(label).map_err(Error::Data)?;
        check_coordinates(latitude, longitude).map_err(Error::Data)?;
        if !(1..=31).contains(&day) {
            return Err(Error::Data(format!("day {day} outside [1, 31]")));
        }
        Ok(Self {
            label,
            latitude,
            longitude,
            day,
            holiday_diff,
        })
    }

    pub fn input(&self) -> InputVector {
        InputVector {
            latitude: self.latitude,
            longitude: self.longitude,
            day: self.day,
            holiday_diff: self.holiday_diff,
        }
    }
}

/// The four model inputs, always in (latitude, longitude, day, holiday_diff) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputVector {
    pub latitude: f64,
    pub longitude: f64,
    pub day: u32,
    pub holiday_diff: u32,
}

impl InputVector {
    pub fn from_date(latitude: f64, longitude: f64, date: NaiveDate, calendar: &HolidayCalendar) -> Self {
        Self {
            latitude,
            longitude,
            day: date.day(),
            holiday_diff: calendar.difference(date),
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [
            self.latitude,
            self.longitude,
            f64::from(self.day),
            f64::from(self.holiday_diff),
        ]
    }
}

/// Sorted, duplicate-free set of public holidays.
#[derive(Debug, Clone, PartialEq)]
pub struct HolidayCalendar {
    holidays: Vec<NaiveDate>,
}

impl HolidayCalendar {
    pub fn new(mut holidays: Vec<NaiveDate>) -> Result<Self> {
        if holidays.is_empty() {
            return Err(Error::Config("holiday calendar is empty".into()));
        }
        holidays.sort_unstable();
        holidays.dedup();
        Ok(Self { holidays })
    }

    /// Parses one ISO-8601 date per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dates = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let date = NaiveDate::parse_from_str(line, "%Y-%m-%d").map_err(|e| {
                Error::Config(format!("holiday calendar line {}: '{line}': {e}", i + 1))
            })?;
            dates.push(date);
        }
        Self::new(dates)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn holidays(&self) -> &[NaiveDate] {
        &self.holidays
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.holidays.binary_search(&date).is_ok()
    }

    /// Absolute distance in days to the nearest holiday.
    pub fn difference(&self, date: NaiveDate) -> u32 {
        let idx = self.holidays.partition_point(|h| *h < date);
        let after = self.holidays.get(idx).map(|h| (*h - date).num_days());
        let before = idx
            .checked_sub(1)
            .map(|i| (date - self.holidays[i]).num_days());
        let days = match (before, after) {
            (Some(b), Some(a)) => b.min(a),
            (Some(d), None) | (None, Some(d)) => d,
            (None, None) => unreachable!("calendar is non-empty"),
        };
        u32::try_from(days).expect("day difference fits in u32")
    }
}

pub fn holiday_difference(date: NaiveDate, calendar: &HolidayCalendar) -> u32 {
    calendar.difference(date)
}

pub fn process_record(raw: &RawRecord, calendar: &HolidayCalendar) -> ProcessedRecord {
    ProcessedRecord {
        label: raw.label.clone(),
        latitude: raw.latitude,
        longitude: raw.longitude,
        day: raw.date.day(),
        holiday_diff: calendar.difference(raw.date),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Schema {
    Raw,
    Processed,
}

/// Maps each expected column to its position in the header.
fn column_positions(header: &csv::StringRecord, path: &str) -> Result<(Schema, Vec<usize>)> {
    let names: Vec<String> = header.iter().map(|h| h.trim().to_lowercase()).collect();
    let schema = if names.iter().any(|n| n == "date") {
        Schema::Raw
    } else {
        Schema::Processed
    };
    let expected: &[&str] = match schema {
        Schema::Raw => &RAW_HEADER,
        Schema::Processed => &PROCESSED_HEADER,
    };
    let header_err = |message: String| Error::Ingestion {
        path: path.to_string(),
        row: 1,
        message,
    };
    for name in &names {
        if !expected.contains(&name.as_str()) {
            return Err(header_err(format!(
                "unknown column '{name}' (expected {})",
                expected.join(",")
            )));
        }
    }
    let mut positions = Vec::with_capacity(expected.len());
    for column in expected {
        let hits: Vec<usize> = names
            .iter()
            .enumerate()
            .filter(|(_, n)| n == column)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => positions.push(*i),
            [] => return Err(header_err(format!("missing column '{column}'"))),
            _ => return Err(header_err(format!("duplicate column '{column}'"))),
        }
    }
    Ok((schema, positions))
}

fn parse_field<T: std::str::FromStr>(value: &str, column: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| format!("column '{column}': cannot parse '{value}': {e}"))
}

/// Either schema as an in-memory list; a raw file needs a calendar.
pub fn read_dataset<R: Read>(
    reader: R,
    source: &str,
    calendar: Option<&HolidayCalendar>,
) -> Result<Vec<ProcessedRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = match csv.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        Ok(_) => {
            return Err(Error::Ingestion {
                path: source.to_string(),
                row: 1,
                message: "missing header".into(),
            })
        }
        Err(e) => {
            return Err(Error::Ingestion {
                path: source.to_string(),
                row: 1,
                message: e.to_string(),
            })
        }
    };
    let (schema, positions) = column_positions(&header, source)?;
    if schema == Schema::Raw && calendar.is_none() {
        return Err(Error::Config(format!(
            "{source}: raw records need a holiday calendar (holiday_calendar_path)"
        )));
    }

    let mut records = Vec::new();
    for row in csv.records() {
        let row = row.map_err(|e| Error::Ingestion {
            path: source.to_string(),
            row: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let fail = |message: String| Error::Ingestion {
            path: source.to_string(),
            row: line,
            message,
        };
        if row.len() != header.len() {
            return Err(fail(format!("expected {} fields, found {}", header.len(), row.len())));
        }
        let field = |k: usize| &row[positions[k]];
        let record = match schema {
            Schema::Raw => {
                let latitude: f64 = parse_field(field(1), "latitude").map_err(fail)?;
                let longitude: f64 = parse_field(field(2), "longitude").map_err(fail)?;
                let date = NaiveDate::parse_from_str(field(3).trim(), "%Y-%m-%d")
                    .map_err(|e| fail(format!("column 'date': invalid date '{}': {e}", field(3))))?;
                let raw = RawRecord::new(field(0), latitude, longitude, date)
                    .map_err(|e| fail(e.to_string()))?;
                process_record(&raw, calendar.expect("checked above"))
            }
            Schema::Processed => {
                let latitude: f64 = parse_field(field(1), "latitude").map_err(fail)?;
                let longitude: f64 = parse_field(field(2), "longitude").map_err(fail)?;
                let day: u32 = parse_field(field(3), "day").map_err(fail)?;
                let holiday_diff: u32 = parse_field(field(4), "holiday_diff").map_err(fail)?;
                ProcessedRecord::new(field(0), latitude, longitude, day, holiday_diff)
                    .map_err(|e| fail(e.to_string()))?
            }
        };
        records.push(record);
    }
    Ok(records)
}

/// Loads a raw or processed CSV (schema picked from the header), preserving file order.
pub fn load_dataset(
    path: impl AsRef<Path>,
    calendar: Option<&HolidayCalendar>,
) -> Result<Vec<ProcessedRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, &path.display().to_string(), calendar)
}

pub fn write_processed<W: Write>(writer: W, records: &[ProcessedRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Data(format!("writing processed csv: {e}"));
    csv.write_record(PROCESSED_HEADER).map_err(to_err)?;
    for r in records {
        csv.write_record([
            r.label.clone(),
            r.latitude.to_string(),
            r.longitude.to_string(),
            r.day.to_string(),
            r.holiday_diff.to_string(),
        ])
        .map_err(to_err)?;
    }
    csv.flush().map_err(|e| Error::Data(format!("writing processed csv: {e}")))?;
    Ok(())
}

/// Groups records by label; labels keep first-occurrence order, sublists keep input order.
pub fn split_by_label(records: &[ProcessedRecord]) -> IndexMap<String, Vec<ProcessedRecord>> {
    let mut groups: IndexMap<String, Vec<ProcessedRecord>> = IndexMap::new();
    for r in records {
        groups.entry(r.label.clone()).or_default().push(r.clone());
    }
    groups
}
