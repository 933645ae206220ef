//! Cyclical (sin, cos) encoding of calendar time.
//!
//! Each of day-of-year, weekday and second-of-day becomes a point on the
//! unit circle so that e.g. 23:59 sits next to 00:00.

use std::f64::consts::TAU;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DAYS_PER_WEEK: i64 = 7;

/// `(sin, cos)` of a time component `t` on a cycle of length `t_max`.
pub fn encode_component(t: i64, t_max: i64) -> Result<(f64, f64)> {
    if t_max <= 0 {
        return Err(Error::InvalidConfig(format!(
            "cycle length must be positive, got {t_max}"
        )));
    }
    let angle = TAU * t.rem_euclid(t_max) as f64 / t_max as f64;
    Ok(angle.sin_cos())
}

/// Time components of a timestamp.
///
/// `day_of_year` is the 1-based ordinal (Aug 24 of a common year is 236).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeComponents {
    pub day_of_year: i64,
    pub days_in_year: i64,
    /// Monday = 0.
    pub weekday: i64,
    pub second_of_day: i64,
}

impl TimeComponents {
    pub fn of(ts: &NaiveDateTime) -> Self {
        let year = ts.year();
        let leap = NaiveDate::from_ymd_opt(year, 2, 29).is_some();
        TimeComponents {
            day_of_year: i64::from(ts.ordinal()),
            days_in_year: if leap { 366 } else { 365 },
            weekday: i64::from(ts.weekday().num_days_from_monday()),
            second_of_day: i64::from(ts.num_seconds_from_midnight()),
        }
    }
}

/// Six-element time feature: day-of-year, weekday, second-of-day pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeVector(pub [f64; 6]);

impl TimeVector {
    pub const WIDTH: usize = 6;

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn encode_timestamp(ts: &NaiveDateTime) -> TimeVector {
    let c = TimeComponents::of(ts);
    // cycle lengths are positive constants here
    let (ds, dc) = encode_component(c.day_of_year, c.days_in_year).unwrap();
    let (ws, wc) = encode_component(c.weekday, DAYS_PER_WEEK).unwrap();
    let (ss, sc) = encode_component(c.second_of_day, SECONDS_PER_DAY).unwrap();
    TimeVector([ds, dc, ws, wc, ss, sc])
}

/// Cosine distance `1 - a.b` between two encoded components.
pub fn cyclic_distance(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    if (a.0 == 0.0 && a.1 == 0.0) || (b.0 == 0.0 && b.1 == 0.0) {
        return Err(Error::Numeric("zero vector has no direction".into()));
    }
    Ok(1.0 - (a.0 * b.0 + a.1 * b.1))
}

/// Parses `YYYY-MM-DD HH:MM:SS[.ffffff]` or `MM-DD HH:MM:SS[.ffffff]`
/// (the latter takes `default_year`). Date and time may also be joined
/// by `T`.
pub fn parse_timestamp(text: &str, default_year: i32) -> Result<NaiveDateTime> {
    let bad = || Error::BadTimestamp(text.to_string());
    let normalized = text.trim().replacen('T', " ", 1);
    let (date, time) = normalized.split_once(' ').ok_or_else(bad)?;
    let date = date.trim();
    let time = time.trim();
    let full_date = match date.matches('-').count() {
        2 => date.to_string(),
        1 => format!("{default_year:04}-{date}"),
        _ => return Err(bad()),
    };
    let joined = format!("{full_date} {time}");
    let fmt = if time.contains('.') {
        "%Y-%m-%d %H:%M:%S%.f"
    } else {
        "%Y-%m-%d %H:%M:%S"
    };
    NaiveDateTime::parse_from_str(&joined, fmt).map_err(|_| bad())
}
