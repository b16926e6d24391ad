//! Readout path models.
//!
//! With the clamp and current mirror in place, the bit-line current of every
//! active row is copied (gain `k`) onto `C_rt`, so the capacitor charges
//! linearly:
//!
//! ```text
//! V_charge = (k * V_read / C_rt) * sum_i(T_in,i * G_i)
//! ```
//!
//! When the input events end, `C_com` ramps at `I_com` and the comparator
//! fires when the ramp reaches `V_charge`, giving
//! `T_out = C_com * V_charge / I_com = alpha * sum_i(T_in,i * G_i)` with
//! `alpha = k * V_read * C_com / (I_com * C_rt)`.
//!
//! Without the mirror the cells drive `C_rt` directly from the clamped input
//! side. That is a single-pole RC, `dV/dt = G_tot * (V_read - V) / C_rt`,
//! and the charge droops below the linear ramp.

use serde::{Deserialize, Serialize};

use crate::codec::TimingConfig;
use crate::device::DeviceConfig;
use crate::error::{Error, Result};
use crate::time::SimTime;

/// Which readout circuit charges `C_rt`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutMode {
    /// Clamp and current mirror: linear charging.
    #[default]
    Ideal,
    /// Bit line charges `C_rt` directly: exponential droop.
    Nonideal,
}

impl std::str::FromStr for ReadoutMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(ReadoutMode::Ideal),
            "nonideal" | "non-ideal" => Ok(ReadoutMode::Nonideal),
            other => Err(Error::InvalidArgument(format!("unknown readout mode {other:?}"))),
        }
    }
}

/// Circuit constants of one macro.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroConfig {
    pub rows: usize,
    pub cols: usize,
    /// Bit-line clamp voltage (V).
    pub v_clamp: f64,
    /// Input-side clamp voltage (V).
    pub v_in_clamp: f64,
    /// Result capacitor (F).
    pub c_rt: f64,
    /// Reference ramp capacitor (F).
    pub c_com: f64,
    pub k_mirror: f64,
    /// Reference ramp current (A).
    pub i_com: f64,
    pub vdd: f64,
    /// Headroom below `vdd` above which a column is flagged saturated (V).
    pub saturation_margin: f64,
    /// Comparator input offset (V). Ideal comparator is 0.
    pub comparator_offset: f64,
    /// Comparator propagation delay (fs). Ideal comparator is 0.
    pub comparator_delay_fs: u64,
    pub timing: TimingConfig,
    pub device: DeviceConfig,
}

impl Default for MacroConfig {
    fn default() -> Self {
        Self {
            rows: 128,
            cols: 128,
            v_clamp: 0.4,
            v_in_clamp: 0.3,
            c_rt: 200e-15,
            c_com: 200e-15,
            k_mirror: 1.0,
            i_com: 20e-6,
            vdd: 1.1,
            saturation_margin: 0.0,
            comparator_offset: 0.0,
            comparator_delay_fs: 0,
            timing: TimingConfig::default(),
            device: DeviceConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
    }
}

impl MacroConfig {
    /// Read voltage across a cell while its row flag is high.
    pub fn v_read(&self) -> f64 {
        self.v_clamp - self.v_in_clamp
    }

    pub fn saturation_limit(&self) -> f64 {
        self.vdd - self.saturation_margin
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidConfig("array dimensions must be non-zero".into()));
        }
        positive("v_read (v_clamp - v_in_clamp)", self.v_read())?;
        positive("c_rt", self.c_rt)?;
        positive("c_com", self.c_com)?;
        positive("k_mirror", self.k_mirror)?;
        positive("i_com", self.i_com)?;
        positive("vdd", self.vdd)?;
        if self.v_in_clamp < 0.0 || self.v_clamp > self.vdd {
            return Err(Error::InvalidConfig(format!(
                "clamp voltages {}..{} V must lie within 0..vdd ({} V)",
                self.v_in_clamp, self.v_clamp, self.vdd
            )));
        }
        if !(self.saturation_margin.is_finite() && self.saturation_margin >= 0.0) {
            return Err(Error::InvalidConfig("saturation_margin must be non-negative".into()));
        }
        if !self.comparator_offset.is_finite() {
            return Err(Error::InvalidConfig("comparator_offset must be finite".into()));
        }
        self.timing.validate()?;
        self.device.validate()?;
        Ok(())
    }
}

/// Gain from `sum(T_in * G)` (S·s) to `T_out` (s), in ohms.
///
/// Follows charge balance on the two capacitors, so `C_com` sits in the
/// numerator. With equal capacitors this is `k * V_read / I_com`.
pub fn alpha(cfg: &MacroConfig) -> f64 {
    cfg.k_mirror * cfg.v_read() * cfg.c_com / (cfg.i_com * cfg.c_rt)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChargeState {
    pub v_charge: f64,
    pub saturated: bool,
}

impl ChargeState {
    pub fn new(v_charge: f64, cfg: &MacroConfig) -> Self {
        Self {
            v_charge,
            saturated: v_charge > cfg.saturation_limit(),
        }
    }
}

/// Charge on `C_rt` after linear, mirrored accumulation.
pub fn ideal_charge(intervals: &[SimTime], conductances: &[f64], cfg: &MacroConfig) -> Result<ChargeState> {
    if intervals.len() != conductances.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} intervals but {} conductances",
            intervals.len(),
            conductances.len()
        )));
    }
    let sum_tg: f64 = intervals
        .iter()
        .zip(conductances)
        .map(|(t, g)| t.as_secs_f64() * g)
        .sum();
    Ok(ChargeState::new(charge_from_sum_tg(sum_tg, cfg), cfg))
}

/// `V_charge` for a given `sum(T_in * G)` in S·s.
pub fn charge_from_sum_tg(sum_tg: f64, cfg: &MacroConfig) -> f64 {
    cfg.k_mirror * cfg.v_read() * sum_tg / cfg.c_rt
}

/// Time from the start of the reference ramp to the comparator toggle, in
/// seconds.
pub fn output_interval(v_charge: f64, cfg: &MacroConfig) -> f64 {
    let crossing = (cfg.c_com * (v_charge + cfg.comparator_offset) / cfg.i_com).max(0.0);
    crossing + SimTime(cfg.comparator_delay_fs).as_secs_f64()
}

/// Total driving conductance as a step function of time, starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceProfile {
    /// `(start, g_total)` breakpoints in strictly increasing time order.
    steps: Vec<(SimTime, f64)>,
}

impl ConductanceProfile {
    pub fn constant(g_total: f64) -> Self {
        Self {
            steps: vec![(SimTime::ZERO, g_total)],
        }
    }

    pub fn from_steps(mut steps: Vec<(SimTime, f64)>) -> Result<Self> {
        if steps.iter().any(|&(_, g)| !(g.is_finite() && g >= 0.0)) {
            return Err(Error::InvalidArgument("conductance profile must be non-negative".into()));
        }
        steps.sort_by_key(|&(t, _)| t);
        if steps.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate breakpoint in conductance profile".into()));
        }
        if steps.first().map_or(true, |&(t, _)| t != SimTime::ZERO) {
            steps.insert(0, (SimTime::ZERO, 0.0));
        }
        Ok(Self { steps })
    }

    pub fn at(&self, t: SimTime) -> f64 {
        let idx = self.steps.partition_point(|&(start, _)| start <= t);
        self.steps[idx.saturating_sub(1)].1
    }

    /// Constant-conductance segments covering `[0, duration)`.
    fn segments(&self, duration: SimTime) -> impl Iterator<Item = (SimTime, SimTime, f64)> + '_ {
        self.steps
            .iter()
            .enumerate()
            .take_while(move |(_, step)| step.0 < duration)
            .map(move |(i, &(start, g))| {
                let end = self.steps.get(i + 1).map_or(duration, |&(t, _)| t.min(duration));
                (start, end, g)
            })
    }
}

/// Exact single-pole update: `V` after charging for `dt` seconds through
/// `g` siemens towards `v_target`.
pub fn rc_step(v: f64, v_target: f64, g: f64, dt: f64, c: f64) -> f64 {
    let decay = -(-g * dt / c).exp_m1();
    v + (v_target - v) * decay
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeSample {
    pub time: SimTime,
    /// Linear charge the same current would deliver without droop.
    pub v_ideal: f64,
    pub v_nonideal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonidealTrace {
    pub final_state: ChargeState,
    pub v_ideal_final: f64,
    pub samples: Vec<ChargeSample>,
}

/// Integrates the directly charged `C_rt` over `duration`, one exact
/// exponential per profile segment.
///
/// Samples are taken at every segment boundary, at the end, and at
/// `n_samples` evenly spaced interior points.
pub fn nonideal_charge_trace(
    profile: &ConductanceProfile,
    cfg: &MacroConfig,
    duration: SimTime,
    n_samples: usize,
) -> Result<NonidealTrace> {
    if duration == SimTime::ZERO {
        return Err(Error::InvalidArgument("charging duration must be positive".into()));
    }
    let v_read = cfg.v_read();
    let mut sample_times: Vec<SimTime> = (0..=n_samples + 1)
        .map(|i| SimTime((duration.as_fs() as u128 * i as u128 / (n_samples as u128 + 1)) as u64))
        .collect();
    sample_times.extend(profile.segments(duration).map(|(start, _, _)| start));
    sample_times.sort_unstable();
    sample_times.dedup();

    let mut samples = Vec::with_capacity(sample_times.len());
    let mut v = 0.0;
    let mut v_lin = 0.0;
    let mut pending = sample_times.into_iter().peekable();
    for (start, end, g) in profile.segments(duration) {
        let last = end == duration;
        while let Some(&t) = pending.peek() {
            if !(t < end || (last && t == end)) {
                break;
            }
            let dt = (t - start).as_secs_f64();
            samples.push(ChargeSample {
                time: t,
                v_ideal: v_lin + g * v_read * dt / cfg.c_rt,
                v_nonideal: rc_step(v, v_read, g, dt, cfg.c_rt),
            });
            pending.next();
        }
        let dt = (end - start).as_secs_f64();
        v = rc_step(v, v_read, g, dt, cfg.c_rt);
        v_lin += g * v_read * dt / cfg.c_rt;
    }

    Ok(NonidealTrace {
        final_state: ChargeState::new(v, cfg),
        v_ideal_final: v_lin,
        samples,
    })
}

/// Fractional loss of the drooping charge against the linear one, in `[0, 1]`.
pub fn degradation(nonideal_v: f64, ideal_v: f64) -> Result<f64> {
    if ideal_v == 0.0 {
        return Err(Error::UndefinedDegradation);
    }
    Ok((1.0 - nonideal_v / ideal_v).clamp(0.0, 1.0))
}

/// Degradation of a constant-conductance charge after `x = t / tau` time
/// constants: `1 - (1 - e^-x) / x`.
pub fn degradation_at(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    1.0 - (-(-x).exp_m1()) / x
}

/// Constant total conductance that produces `target` degradation after
/// charging for `duration`.
pub fn calibrate_conductance(target: f64, duration: SimTime, cfg: &MacroConfig) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target degradation must be in (0, 1), got {target}"
        )));
    }
    if duration == SimTime::ZERO {
        return Err(Error::InvalidArgument("calibration duration must be positive".into()));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while degradation_at(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if degradation_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok(cfg.c_rt * x / duration.as_secs_f64())
}
