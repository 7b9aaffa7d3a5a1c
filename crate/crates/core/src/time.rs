//! Simulation time.
//!
//! The clock runs in integer microseconds so that event ordering never depends
//! on floating-point rounding.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

const MICROS_PER_SEC: u64 = 1_000_000;

/// A point in (or span of) simulated time, in microseconds.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * MICROS_PER_SEC)
    }

    /// Converts a non-negative number of seconds, rounding half-up to the
    /// nearest microsecond. Returns `None` for negative or non-finite input.
    pub fn from_secs_f64(s: f64) -> Option<Self> {
        if !s.is_finite() || s < 0.0 {
            return None;
        }
        let us = (s * MICROS_PER_SEC as f64 + 0.5).floor();
        if us >= u64::MAX as f64 {
            return None;
        }
        Some(SimTime(us as u64))
    }

    /// Parses a seconds value as written in trace files. Plain decimals
    /// (`12`, `0.25`) are converted exactly, rounding half-up past the sixth
    /// fractional digit; anything else that parses as a float goes through
    /// [`SimTime::from_secs_f64`].
    pub fn parse_secs(text: &str) -> Option<Self> {
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        let plain = !int_part.is_empty()
            && int_part.bytes().all(|b| b.is_ascii_digit())
            && frac_part.bytes().all(|b| b.is_ascii_digit());
        if !plain {
            return text.parse::<f64>().ok().and_then(Self::from_secs_f64);
        }
        let secs: u64 = int_part.parse().ok()?;
        let mut micros = 0u64;
        for (i, b) in frac_part.bytes().take(6).enumerate() {
            micros += u64::from(b - b'0') * 10u64.pow(5 - i as u32);
        }
        if frac_part.len() > 6 && frac_part.as_bytes()[6] >= b'5' {
            micros += 1;
        }
        secs.checked_mul(MICROS_PER_SEC)?
            .checked_add(micros)
            .map(SimTime)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

/// Prints seconds with up to six decimals and no trailing zeros, e.g. `10`,
/// `0.5`, `11.714286`. Parsing the output with [`SimTime::from_secs_f64`]
/// yields the same value.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.0 / MICROS_PER_SEC;
        let frac = self.0 % MICROS_PER_SEC;
        if frac == 0 {
            return write!(f, "{secs}");
        }
        let digits = format!("{frac:06}");
        write!(f, "{secs}.{}", digits.trim_end_matches('0'))
    }
}
