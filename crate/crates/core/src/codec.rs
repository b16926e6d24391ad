//! Dual-spike interval coding.
//!
//! A digital value `d` becomes a pair of spikes `d * dt_lsb` apart. Output
//! intervals decode back to `sum(T_in * G)` by dividing by the readout gain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Interval per input LSB, in femtoseconds.
    pub dt_lsb_fs: u64,
    pub input_bits: u32,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            dt_lsb_fs: 200_000,
            input_bits: 8,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt_lsb_fs == 0 {
            return Err(Error::InvalidConfig("dt_lsb_fs must be positive".into()));
        }
        if !(1..=32).contains(&self.input_bits) {
            return Err(Error::InvalidConfig(format!(
                "input_bits must be in 1..=32, got {}",
                self.input_bits
            )));
        }
        Ok(())
    }

    pub fn dt_lsb(&self) -> SimTime {
        SimTime(self.dt_lsb_fs)
    }

    /// Largest encodable value, `2^bits - 1`.
    pub fn max_value(&self) -> u64 {
        (1u64 << self.input_bits) - 1
    }

    /// Length of the longest possible input window.
    pub fn max_window(&self) -> SimTime {
        SimTime(self.max_value() * self.dt_lsb_fs)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SpikePair {
    t_first: SimTime,
    t_second: SimTime,
}

impl SpikePair {
    pub fn new(t_first: SimTime, t_second: SimTime) -> Result<Self> {
        if t_second < t_first {
            return Err(Error::InvalidSpikePair {
                first: t_first.as_fs(),
                second: t_second.as_fs(),
            });
        }
        Ok(Self { t_first, t_second })
    }

    pub fn t_first(&self) -> SimTime {
        self.t_first
    }

    pub fn t_second(&self) -> SimTime {
        self.t_second
    }

    pub fn interval(&self) -> SimTime {
        interval(self)
    }

    pub fn is_empty(&self) -> bool {
        self.t_first == self.t_second
    }
}

pub fn encode(d: u64, t0: SimTime, cfg: &TimingConfig) -> Result<SpikePair> {
    if d > cfg.max_value() {
        return Err(Error::InputOutOfRange {
            value: d,
            bits: cfg.input_bits,
        });
    }
    Ok(SpikePair {
        t_first: t0,
        t_second: t0 + SimTime(d * cfg.dt_lsb_fs),
    })
}

/// `T_in`: the time between the two spikes of a pair.
pub fn interval(p: &SpikePair) -> SimTime {
    p.t_second - p.t_first
}

/// Recovers `sum(T_in * G)` in siemens-seconds from an output interval in
/// seconds and the readout gain `alpha` in ohms.
pub fn decode_interval(t_out: f64, alpha: f64) -> f64 {
    t_out / alpha
}

/// One spike pair per array row.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputVector {
    entries: Vec<SpikePair>,
}

impl InputVector {
    pub fn from_pairs(entries: Vec<SpikePair>) -> Self {
        Self { entries }
    }

    /// Encodes every row starting at the same time `t0`.
    pub fn encode(values: &[u32], t0: SimTime, cfg: &TimingConfig) -> Result<Self> {
        values
            .iter()
            .map(|&d| encode(d as u64, t0, cfg))
            .collect::<Result<Vec<_>>>()
            .map(Self::from_pairs)
    }

    /// Encodes each row with its own start time.
    pub fn encode_with_offsets(values: &[u32], offsets: &[SimTime], cfg: &TimingConfig) -> Result<Self> {
        if values.len() != offsets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values but {} offsets",
                values.len(),
                offsets.len()
            )));
        }
        values
            .iter()
            .zip(offsets)
            .map(|(&d, &t0)| encode(d as u64, t0, cfg))
            .collect::<Result<Vec<_>>>()
            .map(Self::from_pairs)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[SpikePair] {
        &self.entries
    }

    pub fn intervals(&self) -> impl Iterator<Item = SimTime> + '_ {
        self.entries.iter().map(interval)
    }

    pub fn nonzero_rows(&self) -> usize {
        self.entries.iter().filter(|p| !p.is_empty()).count()
    }
}
