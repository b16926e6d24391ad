//! Exact rational reference for `sum_i(T_in,i * G_i)`.
//!
//! Times are counted in LSB units and resistances in units of the `J1` low
//! resistance, so each term is `d_i / r(w_i)` with `r(w)` a small rational.
//! Nothing here touches floating point until the final conversion.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::analog::MacroConfig;
use crate::device::{MtjState, WeightCode, WeightMatrix};
use crate::error::{Error, Result};

/// `sum(d_i / r(w_i))` in units of `dt_lsb / R_low` siemens-seconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMacValue(pub BigRational);

impl ExactMacValue {
    pub fn zero() -> Self {
        ExactMacValue(BigRational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// The exact value in S·s.
    pub fn siemens_seconds_exact(&self, cfg: &MacroConfig) -> Result<BigRational> {
        let dt = BigRational::new(BigInt::from(cfg.timing.dt_lsb_fs), BigInt::from(10u64.pow(15)));
        let r_low = exact(cfg.device.r_low)?;
        Ok(&self.0 * dt / r_low)
    }

    /// Nearest `f64` to the exact value in S·s.
    pub fn to_siemens_seconds(&self, cfg: &MacroConfig) -> Result<f64> {
        let v = self.siemens_seconds_exact(cfg)?;
        v.to_f64()
            .ok_or_else(|| Error::InvalidArgument("oracle value not representable as f64".into()))
    }
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidConfig(format!("{x} is not finite")))
}

/// Read-path resistance of `w` divided by `R_low`, exactly.
fn relative_resistance(w: WeightCode, tmr: &BigRational) -> BigRational {
    let one = BigRational::from_integer(BigInt::from(1));
    let high = &one + tmr;
    let level = |state| match state {
        MtjState::LowRes => one.clone(),
        MtjState::HighRes => high.clone(),
    };
    level(w.j1_state()) + level(w.j2_state()) * BigInt::from(2)
}

fn check_inputs(inputs: &[u32], cfg: &MacroConfig) -> Result<()> {
    let max = cfg.timing.max_value();
    match inputs.iter().find(|&&d| d as u64 > max) {
        Some(&d) => Err(Error::InputOutOfRange {
            value: d as u64,
            bits: cfg.timing.input_bits,
        }),
        None => Ok(()),
    }
}

/// One column's exact MAC value.
pub fn exact_mac_oracle_column(inputs: &[u32], weights: &[WeightCode], cfg: &MacroConfig) -> Result<ExactMacValue> {
    if inputs.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs but {} weights",
            inputs.len(),
            weights.len()
        )));
    }
    check_inputs(inputs, cfg)?;
    let tmr = exact(cfg.device.tmr)?;
    // Group by weight level: four integer sums, then four exact divisions.
    let mut per_level = [0u64; 4];
    for (&d, &w) in inputs.iter().zip(weights) {
        per_level[w.value() as usize] += d as u64;
    }
    let total = WeightCode::ALL
        .iter()
        .zip(per_level)
        .filter(|(_, s)| *s > 0)
        .fold(BigRational::zero(), |acc, (&w, s)| {
            acc + BigRational::from_integer(BigInt::from(s)) / relative_resistance(w, &tmr)
        });
    Ok(ExactMacValue(total))
}

/// Exact MAC value for every column of `weights`.
pub fn exact_mac_oracle(inputs: &[u32], weights: &WeightMatrix, cfg: &MacroConfig) -> Result<Vec<ExactMacValue>> {
    if inputs.len() != weights.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs for {} weight rows",
            inputs.len(),
            weights.rows()
        )));
    }
    (0..weights.cols())
        .map(|c| {
            let column: Vec<WeightCode> = weights.column(c).collect();
            exact_mac_oracle_column(inputs, &column, cfg)
        })
        .collect()
}
