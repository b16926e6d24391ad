//! Linearity sweep: random inputs and weights through the event engine,
//! regressed against the exact oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::oracle::exact_mac_oracle;
use crate::analog::{alpha, MacroConfig, ReadoutMode};
use crate::codec::InputVector;
use crate::device::{program_array, WeightCode, WeightMatrix};
use crate::engine::run_mvm;
use crate::error::{Error, Result};
use crate::time::SimTime;

/// One MVM instance: an input vector and a weight matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepCase {
    pub inputs: Vec<u32>,
    pub weights: WeightMatrix,
}

/// Draws a case uniformly over the input and weight space. Each case has its
/// own ChaCha stream, so case `i` is the same however many threads run.
pub fn random_case(seed: u64, case_id: u64, cfg: &MacroConfig) -> SweepCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case_id);
    let max = cfg.timing.max_value() as u32;
    let inputs = (0..cfg.rows).map(|_| rng.gen_range(0..=max)).collect();
    let data = (0..cfg.rows * cfg.cols)
        .map(|_| WeightCode::ALL[rng.gen_range(0..4)])
        .collect();
    let weights = WeightMatrix::new(cfg.rows, cfg.cols, data).expect("sized by construction");
    SweepCase { inputs, weights }
}

/// A point of the `T_out` vs `sum(T_in * G)` scatter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub case_id: u64,
    pub col: usize,
    /// Exact oracle value, S·s.
    pub sum_tg: f64,
    /// Simulated output interval, s.
    pub t_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`. Returns `None` when `x` (or `y`)
/// has no spread.
pub fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let spread = |f: fn(&(f64, f64)) -> f64| points.iter().map(f).any(|v| v != f(&points[0]));
    if points.len() < 2 || !spread(|p| p.0) || !spread(|p| p.1) {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub n_cases: usize,
    pub n_points: usize,
    /// Largest `|T_out - alpha * oracle| / (alpha * oracle)` over all points.
    pub max_rel_error: f64,
    /// `None` when the regression is degenerate (no spread in the data).
    pub fit: Option<LineFit>,
    /// The readout gain the slope should equal.
    pub alpha: f64,
}

impl SweepReport {
    pub fn is_degenerate(&self) -> bool {
        self.fit.is_none()
    }

    pub fn slope_rel_error(&self) -> Option<f64> {
        self.fit.map(|f| (f.slope - self.alpha).abs() / self.alpha)
    }

    pub fn to_key_value(&self) -> String {
        let mut lines = vec![
            format!("n_cases={}", self.n_cases),
            format!("n_points={}", self.n_points),
            format!("alpha_ohm={:.12e}", self.alpha),
            format!("max_rel_error={:.3e}", self.max_rel_error),
        ];
        match self.fit {
            Some(f) => {
                lines.push(format!("slope_ohm={:.12e}", f.slope));
                lines.push(format!("slope_rel_error={:.3e}", self.slope_rel_error().unwrap_or(f64::NAN)));
                lines.push(format!("intercept_s={:.3e}", f.intercept));
                lines.push(format!("r_squared={:.15}", f.r_squared));
                lines.push("degenerate=false".into());
            }
            None => lines.push("degenerate=true".into()),
        }
        lines.join("\n") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub report: SweepReport,
    pub points: Vec<ScatterPoint>,
}

fn relative_error(actual: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        if actual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((actual - expected) / expected).abs()
    }
}

fn run_case(case_id: u64, case: &SweepCase, cfg: &MacroConfig, mode: ReadoutMode) -> Result<Vec<ScatterPoint>> {
    let array = program_array(&case.weights, cfg)?;
    let inputs = InputVector::encode(&case.inputs, SimTime::ZERO, &cfg.timing)?;
    let result = run_mvm(&array, &inputs, cfg, mode)?;
    let oracle = exact_mac_oracle(&case.inputs, &case.weights, cfg)?;
    oracle
        .iter()
        .zip(&result.t_out)
        .enumerate()
        .map(|(col, (exact, &t_out))| {
            Ok(ScatterPoint {
                case_id,
                col,
                sum_tg: exact.to_siemens_seconds(cfg)?,
                t_out,
            })
        })
        .collect()
}

/// Runs explicit cases. Cases execute in parallel; points come back in case
/// order and all reductions are sequential, so results are bit-reproducible.
pub fn linearity_sweep_cases(cases: &[SweepCase], cfg: &MacroConfig, mode: ReadoutMode) -> Result<SweepRun> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one case".into()));
    }
    let per_case: Vec<Vec<ScatterPoint>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, case)| run_case(i as u64, case, cfg, mode))
        .collect::<Result<_>>()?;
    Ok(summarize(cases.len(), per_case.into_iter().flatten().collect(), cfg))
}

/// Seeded uniform sweep over `n_cases` random MVMs on the configured array.
pub fn linearity_sweep(n_cases: usize, seed: u64, cfg: &MacroConfig, mode: ReadoutMode) -> Result<SweepRun> {
    if n_cases < 2 {
        return Err(Error::InvalidArgument(format!(
            "linearity sweep needs at least 2 cases, got {n_cases}"
        )));
    }
    let per_case: Vec<Vec<ScatterPoint>> = (0..n_cases as u64)
        .into_par_iter()
        .map(|id| run_case(id, &random_case(seed, id, cfg), cfg, mode))
        .collect::<Result<_>>()?;
    Ok(summarize(n_cases, per_case.into_iter().flatten().collect(), cfg))
}

fn summarize(n_cases: usize, points: Vec<ScatterPoint>, cfg: &MacroConfig) -> SweepRun {
    let a = alpha(cfg);
    let max_rel_error = points
        .iter()
        .map(|p| relative_error(p.t_out, a * p.sum_tg))
        .fold(0.0, f64::max);
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.sum_tg, p.t_out)).collect();
    SweepRun {
        report: SweepReport {
            n_cases,
            n_points: points.len(),
            max_rel_error,
            fit: fit_line(&xy),
            alpha: a,
        },
        points,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn small_cfg() -> MacroConfig {
        MacroConfig {
            rows: 16,
            cols: 8,
            ..MacroConfig::default()
        }
    }

    #[test]
    fn fit_exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 + 1.0)).collect();
        let f = fit_line(&pts).unwrap();
        assert_relative_eq!(f.slope, 3.0, max_relative = 1e-14);
        assert_relative_eq!(f.intercept, 1.0, max_relative = 1e-13);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn fit_degenerate() {
        assert!(fit_line(&[(1.0, 2.0), (1.0, 2.0)]).is_none());
        assert!(fit_line(&[(1.0, 2.0)]).is_none());
    }

    #[test]
    fn identical_uniform_cases_are_flagged_not_fatal() {
        let cfg = small_cfg();
        let case = SweepCase {
            inputs: vec![7; 16],
            weights: WeightMatrix::filled(16, 8, WeightCode::new(2).unwrap()),
        };
        let run = linearity_sweep_cases(&[case.clone(), case], &cfg, ReadoutMode::Ideal).unwrap();
        assert!(run.report.is_degenerate());
        assert_eq!(run.report.n_points, 16);
        assert!(run.report.max_rel_error <= 1e-12);
        assert!(run.report.to_key_value().contains("degenerate=true"));
    }

    #[test]
    fn too_few_cases() {
        assert!(linearity_sweep(1, 0, &small_cfg(), ReadoutMode::Ideal).is_err());
    }

    #[test]
    fn ideal_sweep_is_linear() {
        let cfg = small_cfg();
        let run = linearity_sweep(200, 42, &cfg, ReadoutMode::Ideal).unwrap();
        let r = &run.report;
        assert!(r.max_rel_error <= 1e-9, "{}", r.max_rel_error);
        let fit = r.fit.unwrap();
        assert!(r.slope_rel_error().unwrap() <= 1e-9);
        assert!(fit.intercept.abs() <= 1e-15);
        assert!(fit.r_squared >= 1.0 - 1e-12);
    }

    #[test]
    fn nonideal_sweep_droops() {
        let cfg = small_cfg();
        let run = linearity_sweep(100, 42, &cfg, ReadoutMode::Nonideal).unwrap();
        assert!(run.report.fit.unwrap().slope < run.report.alpha);
    }

    #[test]
    fn cases_are_reproducible_per_stream() {
        let cfg = small_cfg();
        assert_eq!(random_case(5, 3, &cfg), random_case(5, 3, &cfg));
        assert_ne!(random_case(5, 3, &cfg), random_case(5, 4, &cfg));
        let a = linearity_sweep(20, 9, &cfg, ReadoutMode::Ideal).unwrap();
        let b = linearity_sweep(20, 9, &cfg, ReadoutMode::Ideal).unwrap();
        assert!(a.points.iter().zip(&b.points).all(|(p, q)| p.t_out.to_bits() == q.t_out.to_bits()));
        assert_eq!(a.report, b.report);
    }
}
