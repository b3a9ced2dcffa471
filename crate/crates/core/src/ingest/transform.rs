//! Pure field transforms turning raw column values into attribute tokens.

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatePart {
    Year,
    Month,
    Day,
    /// `MM-DD`, used for the visualization subset.
    MonthDay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockPart {
    Hour,
    Minute,
}

/// How one attribute field is derived from the raw columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldTransform {
    Identity { column: String },
    DateSplit { column: String, part: DatePart },
    HourMinute { column: String, part: ClockPart },
    DateDifference { later: String, earlier: String },
    /// Unix seconds to hour of day (UTC). `0` means "no event".
    HourBin { column: String },
    /// Unix seconds to `YYYY-MM` (UTC).
    MonthBin { column: String },
    DecimalBucket { column: String },
    CountClass { column: String },
    AgeDecade { column: String },
}

impl FieldTransform {
    pub fn columns(&self) -> Vec<&str> {
        use FieldTransform::*;
        match self {
            Identity { column }
            | DateSplit { column, .. }
            | HourMinute { column, .. }
            | HourBin { column }
            | MonthBin { column }
            | DecimalBucket { column }
            | CountClass { column }
            | AgeDecade { column } => vec![column],
            DateDifference { later, earlier } => vec![later, earlier],
        }
    }

    /// Applies the transform. `Ok(None)` means the value is missing.
    pub fn apply(&self, get: impl Fn(&str) -> Option<String>) -> Result<Applied> {
        use FieldTransform::*;
        let one = |c: &str| get(c).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let token = match self {
            Identity { column } => one(column),
            DateSplit { column, part } => match one(column) {
                None => None,
                Some(raw) => {
                    let d = parse_date(&raw)?;
                    Some(match part {
                        DatePart::Year => d.year().to_string(),
                        DatePart::Month => d.month().to_string(),
                        DatePart::Day => d.day().to_string(),
                        DatePart::MonthDay => format!("{:02}-{:02}", d.month(), d.day()),
                    })
                }
            },
            HourMinute { column, part } => match one(column) {
                None => None,
                Some(raw) => {
                    let (h, m) = extract_hm(&raw)?;
                    Some(match part {
                        ClockPart::Hour => h,
                        ClockPart::Minute => m,
                    }
                    .to_string())
                }
            },
            DateDifference { later, earlier } => match (one(later), one(earlier)) {
                (Some(l), Some(e)) => {
                    let days = date_difference(&l, &e)?;
                    return Ok(Applied {
                        token: Some(date_difference_bin(days).to_string()),
                        negative_interval: days < 0,
                    });
                }
                _ => None,
            },
            HourBin { column } => match one(column) {
                None => None,
                Some(raw) => hour_bin(parse_ts(&raw)?),
            },
            MonthBin { column } => match one(column) {
                None => None,
                Some(raw) => month_bin(parse_ts(&raw)?),
            },
            DecimalBucket { column } => match one(column) {
                None => None,
                Some(raw) => Some(decimal_bucket(parse_f64(&raw)?)?),
            },
            CountClass { column } => match one(column) {
                None => None,
                Some(raw) => {
                    let clicks: u64 = raw
                        .parse()
                        .map_err(|_| Error::Parse(format!("count {raw:?}")))?;
                    Some(count_class(clicks).to_string())
                }
            },
            AgeDecade { column } => match one(column) {
                None => None,
                Some(raw) => age_decade(&raw)?,
            },
        };
        Ok(Applied {
            token,
            negative_interval: false,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Applied {
    pub token: Option<String>,
    /// Set when a date difference came out negative (kept, but reported).
    pub negative_interval: bool,
}

fn parse_f64(raw: &str) -> Result<f64> {
    raw.parse()
        .map_err(|_| Error::Parse(format!("number {raw:?}")))
}

fn parse_ts(raw: &str) -> Result<i64> {
    raw.parse::<f64>()
        .map(|v| v as i64)
        .map_err(|_| Error::Parse(format!("timestamp {raw:?}")))
}

/// Parses `MM/DD/YYYY hh:mm:ss AM/PM` or a bare `MM/DD/YYYY`.
pub fn parse_date(raw: &str) -> Result<NaiveDate> {
    let raw = raw.trim();
    NaiveDateTime::parse_from_str(raw, "%m/%d/%Y %I:%M:%S %p")
        .map(|dt| dt.date())
        .or_else(|_| NaiveDate::parse_from_str(raw, "%m/%d/%Y"))
        .map_err(|_| Error::InvalidDate(raw.to_string()))
}

/// Whole days from `occurred` to `reported`. Negative results are returned
/// as-is; callers flag them.
pub fn date_difference(reported: &str, occurred: &str) -> Result<i64> {
    Ok((parse_date(reported)? - parse_date(occurred)?).num_days())
}

/// Buckets a day count into `neg`, `0`, `1`, `2-7`, `8-30`, `31+`.
pub fn date_difference_bin(days: i64) -> &'static str {
    match days {
        i64::MIN..=-1 => "neg",
        0 => "0",
        1 => "1",
        2..=7 => "2-7",
        8..=30 => "8-30",
        _ => "31+",
    }
}

/// Military time (1 to 4 digits, zero padded on the left) to (hour, minute).
pub fn extract_hm(raw: &str) -> Result<(u32, u32)> {
    let raw = raw.trim();
    if raw.is_empty() || raw.len() > 4 || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidTime(raw.to_string()));
    }
    let v: u32 = raw.parse().map_err(|_| Error::InvalidTime(raw.to_string()))?;
    let (h, m) = (v / 100, v % 100);
    if h > 23 || m > 59 {
        return Err(Error::InvalidTime(raw.to_string()));
    }
    Ok((h, m))
}

fn hour_bin(ts: i64) -> Option<String> {
    if ts <= 0 {
        return None;
    }
    DateTime::from_timestamp(ts, 0).map(|dt| dt.hour().to_string())
}

fn month_bin(ts: i64) -> Option<String> {
    if ts <= 0 {
        return None;
    }
    DateTime::from_timestamp(ts, 0).map(|dt| format!("{:04}-{:02}", dt.year(), dt.month()))
}

/// Bucket by the largest decimal unit: `e<floor(log10 x)>` for x >= 1,
/// `sub1` below one, `zero` at zero.
pub fn decimal_bucket(amount: f64) -> Result<String> {
    if amount.is_nan() || amount < 0.0 {
        return Err(Error::InvalidAmount(amount));
    }
    if amount == 0.0 {
        return Ok("zero".into());
    }
    if amount < 1.0 {
        return Ok("sub1".into());
    }
    Ok(format!("e{}", decimal_exponent(amount)))
}

fn decimal_exponent(amount: f64) -> i32 {
    let whole = amount.floor();
    if whole < 1e18 {
        // digit count of the integer part; avoids log10 rounding at powers of ten
        let mut v = whole as u64;
        let mut e = -1;
        while v > 0 {
            v /= 10;
            e += 1;
        }
        e
    } else {
        amount.log10().floor() as i32
    }
}

/// Click-count classes: 0-19, 20-49, 50-99, 100+.
pub fn count_class(clicks: u64) -> u8 {
    match clicks {
        0..=19 => 0,
        20..=49 => 1,
        50..=99 => 2,
        _ => 3,
    }
}

fn age_decade(raw: &str) -> Result<Option<String>> {
    let age: i64 = raw
        .parse()
        .map_err(|_| Error::Parse(format!("age {raw:?}")))?;
    // the source data uses 0 and negatives for "unknown"
    if age <= 0 {
        return Ok(None);
    }
    let d = (age / 10) * 10;
    Ok(Some(format!("{d}s")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn date_difference_examples() {
        assert_eq!(
            date_difference("01/08/2020 12:00:00 AM", "01/01/2020 12:00:00 AM").unwrap(),
            7
        );
        assert_eq!(date_difference("01/08/2020", "01/08/2020").unwrap(), 0);
        assert_eq!(date_difference("03/01/2020", "02/28/2020").unwrap(), 2);
        assert_eq!(date_difference("03/01/2021", "02/28/2021").unwrap(), 1);
        assert_eq!(date_difference("01/01/2020", "01/03/2020").unwrap(), -2);
        assert!(matches!(
            date_difference("13/45/2020", "01/01/2020"),
            Err(Error::InvalidDate(_))
        ));
    }

    #[test]
    fn leap_year_calendar_oracle() {
        // Count forward one day at a time with an explicit month table.
        fn days_in_month(y: i32, m: u32) -> u32 {
            match m {
                2 if (y % 4 == 0 && y % 100 != 0) || y % 400 == 0 => 29,
                2 => 28,
                4 | 6 | 9 | 11 => 30,
                _ => 31,
            }
        }
        let (mut y, mut m, mut d, mut n) = (2020, 2u32, 28u32, 0i64);
        while (y, m, d) != (2020, 3, 1) {
            d += 1;
            if d > days_in_month(y, m) {
                d = 1;
                m += 1;
                if m > 12 {
                    m = 1;
                    y += 1;
                }
            }
            n += 1;
        }
        assert_eq!(n, date_difference("03/01/2020", "02/28/2020").unwrap());
    }

    #[test]
    fn military_time() {
        assert_eq!(extract_hm("2230").unwrap(), (22, 30));
        assert_eq!(extract_hm("0").unwrap(), (0, 0));
        assert_eq!(extract_hm("145").unwrap(), (1, 45));
        assert_eq!(extract_hm("0145").unwrap(), (1, 45));
        assert!(matches!(extract_hm("2460"), Err(Error::InvalidTime(_))));
        assert!(matches!(extract_hm("2400"), Err(Error::InvalidTime(_))));
        assert!(matches!(extract_hm("12a"), Err(Error::InvalidTime(_))));
        assert!(matches!(extract_hm("12345"), Err(Error::InvalidTime(_))));
    }

    #[test]
    fn decimal_buckets() {
        assert_eq!(decimal_bucket(9839.64).unwrap(), "e3");
        assert_eq!(decimal_bucket(170136.0).unwrap(), "e5");
        assert_eq!(decimal_bucket(0.0).unwrap(), "zero");
        assert_eq!(decimal_bucket(0.5).unwrap(), "sub1");
        assert_eq!(decimal_bucket(1.0).unwrap(), "e0");
        assert_eq!(decimal_bucket(1000.0).unwrap(), "e3");
        assert_eq!(decimal_bucket(999.999).unwrap(), "e2");
        assert_eq!(decimal_bucket(1e25).unwrap(), "e25");
        assert!(matches!(decimal_bucket(-1.0), Err(Error::InvalidAmount(_))));
    }

    #[test]
    fn count_classes() {
        assert_eq!(count_class(0), 0);
        assert_eq!(count_class(19), 0);
        assert_eq!(count_class(20), 1);
        assert_eq!(count_class(25), 1);
        assert_eq!(count_class(50), 2);
        assert_eq!(count_class(99), 2);
        assert_eq!(count_class(100), 3);
    }

    #[test]
    fn date_diff_bins() {
        let bins: Vec<_> = [-3, 0, 1, 2, 7, 8, 30, 31, 400]
            .iter()
            .map(|&d| date_difference_bin(d))
            .collect();
        assert_eq!(bins, ["neg", "0", "1", "2-7", "2-7", "8-30", "8-30", "31+", "31+"]);
    }

    #[test]
    fn transform_apply() {
        let rec = |c: &str| match c {
            "DATE OCC" => Some("12/01/2020 12:00:00 AM".to_string()),
            "Date Rptd" => Some("12/03/2020 12:00:00 AM".to_string()),
            "TIME OCC" => Some("930".to_string()),
            "ts" => Some("1546300800".to_string()), // 2019-01-01T00:00:00Z
            "age" => Some("36".to_string()),
            _ => None,
        };
        let t = FieldTransform::DateSplit {
            column: "DATE OCC".into(),
            part: DatePart::Month,
        };
        assert_eq!(t.apply(rec).unwrap().token.as_deref(), Some("12"));
        let t = FieldTransform::DateDifference {
            later: "Date Rptd".into(),
            earlier: "DATE OCC".into(),
        };
        assert_eq!(t.apply(rec).unwrap().token.as_deref(), Some("2-7"));
        let t = FieldTransform::HourMinute {
            column: "TIME OCC".into(),
            part: ClockPart::Minute,
        };
        assert_eq!(t.apply(rec).unwrap().token.as_deref(), Some("30"));
        let t = FieldTransform::MonthBin { column: "ts".into() };
        assert_eq!(t.apply(rec).unwrap().token.as_deref(), Some("2019-01"));
        let t = FieldTransform::HourBin { column: "ts".into() };
        assert_eq!(t.apply(rec).unwrap().token.as_deref(), Some("0"));
        let t = FieldTransform::AgeDecade { column: "age".into() };
        assert_eq!(t.apply(rec).unwrap().token.as_deref(), Some("30s"));
        let t = FieldTransform::Identity { column: "nope".into() };
        assert_eq!(t.apply(rec).unwrap().token, None);
    }

    proptest! {
        #[test]
        fn decimal_bucket_monotone(a in 0.0f64..1e12, b in 0.0f64..1e12) {
            let rank = |x: f64| match decimal_bucket(x).unwrap().as_str() {
                "zero" => -2,
                "sub1" => -1,
                s => s[1..].parse::<i32>().unwrap(),
            };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(rank(lo) <= rank(hi));
        }

        #[test]
        fn transforms_are_pure(v in 0u32..2400) {
            let s = v.to_string();
            prop_assert_eq!(extract_hm(&s).ok(), extract_hm(&s).ok());
        }
    }
}
