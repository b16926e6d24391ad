use crate::analog::MacroConfig;
use crate::device::WeightCode;

/// Removes the contribution of the `w = 0` conductance floor.
///
/// A zero weight still conducts `G(0)`, so every active row adds
/// `T_in * G(0)` to each column. Subtracting `G(0) * sum(T_in)` leaves
/// `sum(T_in * (G(w) - G(0)))`.
pub fn baseline_correct(decoded: &[f64], inputs: &[u32], cfg: &MacroConfig) -> Vec<f64> {
    let g0 = cfg.device.conductance(WeightCode::default());
    let total_lsb: u64 = inputs.iter().map(|&d| d as u64).sum();
    let total_t = (total_lsb * cfg.timing.dt_lsb_fs) as f64 * 1e-15;
    let floor = g0 * total_t;
    decoded.iter().map(|&v| v - floor).collect()
}
