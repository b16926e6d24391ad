//! Simulation time in integer femtoseconds.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

pub const FS_PER_SECOND: f64 = 1e15;

/// An absolute time or a duration, in femtoseconds.
///
/// Event ordering is done on these integers so simultaneous events compare
/// exactly equal on every platform.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_fs(fs: u64) -> Self {
        SimTime(fs)
    }

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps * 1_000)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * 1_000_000)
    }

    /// Rounds a duration in seconds to the nearest femtosecond. Negative and
    /// non-finite inputs map to zero.
    pub fn from_secs_f64(secs: f64) -> Self {
        if !secs.is_finite() || secs <= 0.0 {
            return SimTime::ZERO;
        }
        SimTime((secs * FS_PER_SECOND).round() as u64)
    }

    pub const fn as_fs(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / FS_PER_SECOND
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

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fs", self.0)
    }
}
