//! Calendar plumbing: day indexes and the `M-D-YYYY` date literals used
//! by `getweather`/`getspeed`.

use std::fmt;

use thiserror::Error;

/// Whole days since 1970-01-01 UTC (proleptic Gregorian).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DayIndex(i64);

impl DayIndex {
    pub fn new(days: i64) -> Self {
        DayIndex(days)
    }

    pub fn days(self) -> i64 {
        self.0
    }

    /// First second of the day, as a Unix timestamp.
    pub fn epoch_seconds(self) -> i64 {
        self.0 * super::SECONDS_PER_DAY
    }

    pub fn from_ymd(year: i64, month: u32, day: u32) -> Option<Self> {
        if !(1..=12).contains(&month) || day < 1 || day > days_in_month(year, month) {
            return None;
        }
        Some(DayIndex(days_from_civil(year, month, day)))
    }

    pub fn to_ymd(self) -> (i64, u32, u32) {
        civil_from_days(self.0)
    }
}

impl fmt::Display for DayIndex {
    /// Formats as `M-D-YYYY`, the literal form accepted by [`parse_date`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, m, d) = self.to_ymd();
        write!(f, "{}-{}-{}", m, d, y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DateError {
    #[error("malformed date {text:?}: expected M-D-YYYY")]
    Malformed { text: String },
    #[error("month {month} out of range in {text:?}")]
    MonthOutOfRange { text: String, month: i64 },
    #[error("day {day} out of range in {text:?}")]
    DayOutOfRange { text: String, day: i64 },
}

/// Parses a `M-D-YYYY` or `MM-DD-YYYY` date into a [`DayIndex`].
pub fn parse_date(text: &str) -> Result<DayIndex, DateError> {
    let malformed = || DateError::Malformed { text: text.to_string() };
    let mut parts = text.split('-');
    let (m, d, y) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(m), Some(d), Some(y), None) => (m, d, y),
        _ => return Err(malformed()),
    };
    if m.is_empty() || m.len() > 2 || d.is_empty() || d.len() > 2 || y.len() != 4 {
        return Err(malformed());
    }
    let month: i64 = m.parse().map_err(|_| malformed())?;
    let day: i64 = d.parse().map_err(|_| malformed())?;
    let year: i64 = y.parse().map_err(|_| malformed())?;
    if !(1..=12).contains(&month) {
        return Err(DateError::MonthOutOfRange { text: text.to_string(), month });
    }
    if day < 1 || day > days_in_month(year, month as u32) as i64 {
        return Err(DateError::DayOutOfRange { text: text.to_string(), day });
    }
    Ok(DayIndex(days_from_civil(year, month as u32, day as u32)))
}

fn is_leap(year: i64) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if is_leap(year) {
                29
            } else {
                28
            }
        }
        _ => 0,
    }
}

// Era-based civil calendar conversions; exact over the full i64 day range
// used here.
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400; // [0, 399]
    let mp = (m as i64 + 9) % 12; // March = 0
    let doy = (153 * mp + 2) / 5 + d as i64 - 1; // [0, 365]
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy; // [0, 146096]
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097; // [0, 146096]
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146_096) / 365; // [0, 399]
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100); // [0, 365]
    let mp = (5 * doy + 2) / 153; // [0, 11]
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32; // [1, 31]
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32; // [1, 12]
    (if m <= 2 { y + 1 } else { y }, m, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent day-count oracle: walk years and months from the epoch,
    /// summing month lengths. Deliberately naive; used to freeze expected
    /// values for the era-based conversion above.
    fn oracle_days(y: i64, m: u32, d: u32) -> i64 {
        assert!(y >= 1970);
        let mut days: i64 = 0;
        for year in 1970..y {
            days += if is_leap(year) { 366 } else { 365 };
        }
        for month in 1..m {
            days += days_in_month(y, month) as i64;
        }
        days + d as i64 - 1
    }

    #[test]
    fn epoch_is_day_zero() {
        assert_eq!(parse_date("1-1-1970").unwrap(), DayIndex(0));
    }

    #[test]
    fn paper_query_date() {
        // 2017-05-11, the date used throughout the bundled programs.
        assert_eq!(oracle_days(2017, 5, 11), 17_297);
        assert_eq!(parse_date("5-11-2017").unwrap(), DayIndex(17_297));
        assert_eq!(parse_date("05-11-2017").unwrap(), DayIndex(17_297));
    }

    #[test]
    fn oracle_agrees_on_a_spread_of_dates() {
        for &(y, m, d) in &[
            (1970, 12, 31),
            (1972, 2, 29),
            (2000, 3, 1),
            (2016, 2, 29),
            (2017, 5, 11),
            (2038, 1, 19),
            (2079, 6, 6),
        ] {
            assert_eq!(days_from_civil(y, m, d), oracle_days(y, m, d), "{y}-{m}-{d}");
        }
    }

    #[test]
    fn rejects_out_of_range_fields() {
        assert_eq!(
            parse_date("13-40-2017"),
            Err(DateError::MonthOutOfRange { text: "13-40-2017".into(), month: 13 })
        );
        assert_eq!(
            parse_date("2-30-2017"),
            Err(DateError::DayOutOfRange { text: "2-30-2017".into(), day: 30 })
        );
        assert!(matches!(parse_date("5/11/2017"), Err(DateError::Malformed { .. })));
        assert!(matches!(parse_date("5-11-17"), Err(DateError::Malformed { .. })));
        assert!(matches!(parse_date(""), Err(DateError::Malformed { .. })));
        assert!(matches!(parse_date("5-11-2017-1"), Err(DateError::Malformed { .. })));
    }

    #[test]
    fn display_round_trips_forty_thousand_days() {
        for days in 0..40_000 {
            let d = DayIndex(days);
            assert_eq!(parse_date(&d.to_string()).unwrap(), d, "day {days}");
        }
    }

    #[test]
    fn leap_day_round_trip() {
        let d = DayIndex::from_ymd(2016, 2, 29).unwrap();
        assert_eq!(d.to_ymd(), (2016, 2, 29));
        assert!(DayIndex::from_ymd(2017, 2, 29).is_none());
    }
}
