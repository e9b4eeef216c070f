//! Elapsed-time values and their standardization to minutes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Minute,
    Hour,
    Day,
    Week,
    Month,
    Year,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 6] = [
        TimeUnit::Minute,
        TimeUnit::Hour,
        TimeUnit::Day,
        TimeUnit::Week,
        TimeUnit::Month,
        TimeUnit::Year,
    ];

    /// Minutes per unit. A month is 43 800 minutes (30.4166 days); a year is twelve of them.
    pub const fn minutes(self) -> f64 {
        match self {
            TimeUnit::Minute => 1.0,
            TimeUnit::Hour => 60.0,
            TimeUnit::Day => 1_440.0,
            TimeUnit::Week => 10_080.0,
            TimeUnit::Month => 43_800.0,
            TimeUnit::Year => 525_600.0,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Minute => "minute",
            TimeUnit::Hour => "hour",
            TimeUnit::Day => "day",
            TimeUnit::Week => "week",
            TimeUnit::Month => "month",
            TimeUnit::Year => "year",
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimeUnit {
    type Err = Error;

    /// Accepts the singular name, a trailing `s`, and any ASCII case.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let stem = lower.strip_suffix('s').unwrap_or(&lower);
        TimeUnit::ALL
            .into_iter()
            .find(|u| u.as_str() == stem)
            .ok_or_else(|| Error::UnknownUnit(s.to_string()))
    }
}

/// A non-negative, finite span of time expressed in some unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Duration {
    value: f64,
    unit: TimeUnit,
}

impl Duration {
    pub fn new(value: f64, unit: TimeUnit) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Domain(format!(
                "duration must be finite and non-negative, got {value} {unit}"
            )));
        }
        Ok(Duration { value, unit })
    }

    pub fn minutes(value: f64) -> Result<Self> {
        Duration::new(value, TimeUnit::Minute)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn unit(&self) -> TimeUnit {
        self.unit
    }

    pub fn to_minutes(&self) -> f64 {
        self.value * self.unit.minutes()
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

impl FromStr for Duration {
    type Err = Error;

    /// Parses `"<value> <unit>"`, e.g. `"1 day"` or `"2.5 weeks"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let (Some(value), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::BadDuration(s.to_string()));
        };
        let value: f64 = value.parse().map_err(|_| Error::BadDuration(s.to_string()))?;
        Duration::new(value, unit.parse()?)
    }
}
