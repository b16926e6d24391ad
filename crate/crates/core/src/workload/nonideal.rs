//! Droop of a directly charged result capacitor against the mirrored,
//! linear charge.

use crate::analog::{degradation, nonideal_charge_trace, ConductanceProfile, MacroConfig};
use crate::error::{Error, Result};
use crate::time::SimTime;

/// Published degradation figures for the directly charged capacitor, used as
/// side-by-side references. A single-pole model calibrated to the first point
/// predicts about 33.8% at the second, not 39.6%.
pub const REFERENCE_DEGRADATION: [(SimTime, f64); 2] = [
    (SimTime::from_ns(5), 0.193),
    (SimTime::from_ns(10), 0.396),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub duration: SimTime,
    pub v_ideal: f64,
    pub v_nonideal: f64,
    pub degradation: f64,
    /// Published value at this duration, when there is one.
    pub reference: Option<f64>,
}

/// Charges `C_rt` through a constant `g_total` for each duration and
/// compares against the linear charge.
pub fn nonideal_comparison(durations: &[SimTime], g_total: f64, cfg: &MacroConfig) -> Result<Vec<ComparisonRow>> {
    if durations.is_empty() {
        return Err(Error::InvalidArgument("no charging durations given".into()));
    }
    if !(g_total.is_finite() && g_total >= 0.0) {
        return Err(Error::InvalidArgument(format!("g_total must be non-negative, got {g_total}")));
    }
    let profile = ConductanceProfile::constant(g_total);
    durations
        .iter()
        .map(|&duration| {
            if duration == SimTime::ZERO {
                return Err(Error::InvalidArgument("charging durations must be positive".into()));
            }
            let trace = nonideal_charge_trace(&profile, cfg, duration, 0)?;
            let v_ideal = trace.v_ideal_final;
            let v_nonideal = trace.final_state.v_charge;
            let degradation = if v_ideal == 0.0 {
                0.0
            } else {
                degradation(v_nonideal, v_ideal)?
            };
            let reference = REFERENCE_DEGRADATION
                .iter()
                .find(|(t, _)| *t == duration)
                .map(|&(_, d)| d);
            Ok(ComparisonRow {
                duration,
                v_ideal,
                v_nonideal,
                degradation,
                reference,
            })
        })
        .collect()
}
