//! Simulation time: integer nanoseconds since midnight of the simulated date.
//!
//! Two clock conventions share this representation. Replay runs use raw
//! nanosecond timestamps taken from historical data. Interactive runs use
//! discrete time units, where unit `u` maps to `u * 100ms` of simulated time.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Nanoseconds per discrete interactive time unit (100 ms).
pub const NANOS_PER_UNIT: u64 = 100_000_000;

const NANOS_PER_SEC: u64 = 1_000_000_000;

/// A point in simulated time, in nanoseconds since midnight.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_nanos(nanos: u64) -> Self {
        SimTime(nanos)
    }

    /// Discrete interactive time unit `u` (1 unit = 100 ms).
    pub fn from_units(units: u64) -> Self {
        SimTime(units * NANOS_PER_UNIT)
    }

    pub fn from_secs(secs: u64) -> Self {
        SimTime(secs * NANOS_PER_SEC)
    }

    pub fn from_millis(millis: u64) -> Self {
        SimTime(millis * 1_000_000)
    }

    /// Parse "HH:MM:SS" or "HH:MM:SS.fraction" as time since midnight.
    pub fn parse_clock(s: &str) -> Result<Self, TimeParseError> {
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, Some(f)),
            None => (s, None),
        };
        let mut parts = whole.split(':');
        let mut field = |name: &'static str| -> Result<u64, TimeParseError> {
            parts
                .next()
                .ok_or(TimeParseError::MissingField(name))?
                .parse::<u64>()
                .map_err(|_| TimeParseError::BadField(name))
        };
        let h = field("hours")?;
        let m = field("minutes")?;
        let sec = field("seconds")?;
        if parts.next().is_some() {
            return Err(TimeParseError::TrailingInput);
        }
        if m >= 60 || sec >= 60 {
            return Err(TimeParseError::BadField("minutes/seconds out of range"));
        }
        let mut nanos = (h * 3600 + m * 60 + sec) * NANOS_PER_SEC;
        if let Some(f) = frac {
            if f.is_empty() || f.len() > 9 || !f.bytes().all(|b| b.is_ascii_digit()) {
                return Err(TimeParseError::BadField("fraction"));
            }
            let mut padded = f.to_string();
            while padded.len() < 9 {
                padded.push('0');
            }
            nanos += padded.parse::<u64>().expect("digits");
        }
        Ok(SimTime(nanos))
    }

    pub fn nanos(&self) -> u64 {
        self.0
    }

    /// Containing discrete time unit (floor).
    pub fn units(&self) -> u64 {
        self.0 / NANOS_PER_UNIT
    }

    pub fn saturating_sub(&self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }

    pub fn checked_sub(&self, other: SimTime) -> Option<SimTime> {
        self.0.checked_sub(other.0).map(SimTime)
    }
}

impl std::ops::Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, nanos: u64) -> SimTime {
        SimTime(self.0 + nanos)
    }
}

impl std::ops::Sub for SimTime {
    type Output = u64;
    fn sub(self, other: SimTime) -> u64 {
        self.0
            .checked_sub(other.0)
            .expect("SimTime subtraction went negative")
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.0 / NANOS_PER_SEC;
        let sub = self.0 % NANOS_PER_SEC;
        write!(
            f,
            "{:02}:{:02}:{:02}.{:09}",
            secs / 3600,
            (secs / 60) % 60,
            secs % 60,
            sub
        )
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TimeParseError {
    #[error("missing {0} field in clock time")]
    MissingField(&'static str),
    #[error("unparseable {0} field in clock time")]
    BadField(&'static str),
    #[error("trailing input after seconds field")]
    TrailingInput,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_parsing() {
        assert_eq!(
            SimTime::parse_clock("09:30:00").unwrap(),
            SimTime::from_secs(9 * 3600 + 30 * 60)
        );
        assert_eq!(
            SimTime::parse_clock("09:30:00.000000001").unwrap().nanos(),
            34_200_000_000_001
        );
        assert!(SimTime::parse_clock("9:61:00").is_err());
        assert!(SimTime::parse_clock("09:30").is_err());
        assert!(SimTime::parse_clock("09:30:00.1234567890").is_err());
    }

    #[test]
    fn unit_mapping() {
        assert_eq!(SimTime::from_units(1000).nanos(), 100_000_000_000);
        assert_eq!(SimTime::from_units(7).units(), 7);
        assert_eq!(SimTime::from_nanos(150_000_000).units(), 1);
    }

    #[test]
    fn display_is_clock_like() {
        let t = SimTime::parse_clock("10:15:30.5").unwrap();
        assert_eq!(t.to_string(), "10:15:30.500000000");
    }
}
