//! Built-in consistency checks run by `spikecim selftest`.

use crate::analog::{self, alpha, calibrate_conductance, MacroConfig, ReadoutMode};
use crate::codec::InputVector;
use crate::device::{program_array, WeightCode, WeightMatrix};
use crate::energy::{self, Component, EnergyConfig};
use crate::engine::run_mvm;
use crate::error::Result;
use crate::time::SimTime;
use crate::workload::{exact_mac_oracle_column, nonideal_comparison, random_case};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

fn outcome(name: &'static str, check: Result<(bool, String)>) -> SuiteOutcome {
    match check {
        Ok((passed, detail)) => SuiteOutcome { name, passed, detail },
        Err(e) => SuiteOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn t_out(weights: &WeightMatrix, inputs: &[u32], cfg: &MacroConfig) -> Result<Vec<f64>> {
    let array = program_array(weights, cfg)?;
    let vector = InputVector::encode(inputs, SimTime::ZERO, &cfg.timing)?;
    Ok(run_mvm(&array, &vector, cfg, ReadoutMode::Ideal)?.t_out)
}

/// Every (input, weight) pair on a single cell against the exact oracle.
fn exhaustive_single_cell(cfg: &MacroConfig) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let max = cfg.timing.max_value().min(u16::MAX as u64) as u32;
    for w in WeightCode::ALL {
        let weights = WeightMatrix::filled(1, 1, w);
        for d in 0..=max {
            let out = t_out(&weights, &[d], cfg)?[0];
            let decoded = out / alpha(cfg);
            let exact = exact_mac_oracle_column(&[d], &[w], cfg)?.to_siemens_seconds(cfg)?;
            worst = worst.max(rel(decoded, exact));
        }
    }
    Ok((worst <= 1e-12, format!("{} cases, max rel error {worst:.3e}", 4 * (max + 1))))
}

fn superposition_and_permutation(cfg: &MacroConfig, seed: u64) -> Result<(bool, String)> {
    let case = random_case(seed, 0, cfg);
    let split: Vec<bool> = (0..cfg.rows).map(|i| i % 3 == 0).collect();
    let part = |keep: bool| -> Vec<u32> {
        case.inputs
            .iter()
            .zip(&split)
            .map(|(&d, &s)| if s == keep { d } else { 0 })
            .collect()
    };
    let full = t_out(&case.weights, &case.inputs, cfg)?;
    let a = t_out(&case.weights, &part(true), cfg)?;
    let b = t_out(&case.weights, &part(false), cfg)?;
    let sup = full
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(&f, (&x, &y))| rel(x + y, f))
        .fold(0.0, f64::max);

    let perm: Vec<usize> = (0..cfg.rows).rev().collect();
    let permuted_inputs: Vec<u32> = perm.iter().map(|&i| case.inputs[i]).collect();
    let permuted = t_out(&case.weights.permute_rows(&perm), &permuted_inputs, cfg)?;
    let per = full
        .iter()
        .zip(&permuted)
        .map(|(&f, &p)| rel(p, f))
        .fold(0.0, f64::max);
    Ok((
        sup <= 1e-12 && per <= 1e-12,
        format!("superposition {sup:.3e}, permutation {per:.3e}"),
    ))
}

fn worst_case_point(cfg: &MacroConfig) -> Result<(bool, String)> {
    let max = cfg.timing.max_value() as u32;
    let weights = WeightMatrix::filled(cfg.rows, cfg.cols, WeightCode::new(3)?);
    let array = program_array(&weights, cfg)?;
    let vector = InputVector::encode(&vec![max; cfg.rows], SimTime::ZERO, &cfg.timing)?;
    let r = run_mvm(&array, &vector, cfg, ReadoutMode::Ideal)?;
    let window = cfg.timing.max_window();
    let intervals = vec![window; cfg.rows];
    let g = vec![array.conductance(0, 0); cfg.rows];
    let expected = analog::ideal_charge(&intervals, &g, cfg)?;
    let v_err = rel(r.v_charge_final[0], expected.v_charge);
    let t_err = rel(r.t_out[0], analog::output_interval(expected.v_charge, cfg));
    Ok((
        v_err <= 1e-9 && t_err <= 1e-9 && r.saturated[0] == expected.saturated,
        format!(
            "v_charge {:.9} V, t_out {:.6} ns, saturated {}",
            r.v_charge_final[0],
            r.t_out[0] * 1e9,
            r.saturated[0]
        ),
    ))
}

fn mirror_gain(cfg: &MacroConfig, seed: u64) -> Result<(bool, String)> {
    let case = random_case(seed, 1, cfg);
    let doubled = MacroConfig {
        k_mirror: 2.0 * cfg.k_mirror,
        ..*cfg
    };
    let base = t_out(&case.weights, &case.inputs, cfg)?;
    let twice = t_out(&case.weights, &case.inputs, &doubled)?;
    let err = base
        .iter()
        .zip(&twice)
        .map(|(&b, &t)| rel(t, 2.0 * b))
        .fold(0.0, f64::max);
    Ok((err <= 1e-12, format!("max rel error {err:.3e}")))
}

fn energy_calibration() -> Result<(bool, String)> {
    let report = energy::energy_report(1, &EnergyConfig::default(), 128, 128)?;
    let tops = report.tops_per_watt.unwrap_or(0.0);
    let share = report.share(Component::Osg);
    Ok((
        rel(tops, energy::CALIBRATED_TOPS_PER_WATT) <= 0.005 && rel(share, energy::CALIBRATED_OSG_SHARE) <= 1e-12,
        format!("{tops:.3} TOPS/W, osg share {share:.4}"),
    ))
}

fn droop_calibration(cfg: &MacroConfig) -> Result<(bool, String)> {
    let g = calibrate_conductance(0.193, SimTime::from_ns(5), cfg)?;
    let rows = nonideal_comparison(&[SimTime::from_ns(5), SimTime::from_ns(10)], g, cfg)?;
    let (d5, d10) = (rows[0].degradation, rows[1].degradation);
    Ok((
        (d5 - 0.193).abs() <= 0.005 && (d10 - 0.338).abs() <= 0.01,
        format!("g_total {:.4} uS, 5 ns {:.1}%, 10 ns {:.1}% (reference 39.6%)", g * 1e6, d5 * 100.0, d10 * 100.0),
    ))
}

pub fn run_selftest(cfg: &MacroConfig, seed: u64) -> Vec<SuiteOutcome> {
    vec![
        outcome("oracle-exhaustive-1x1", exhaustive_single_cell(cfg)),
        outcome("superposition-permutation", superposition_and_permutation(cfg, seed)),
        outcome("worst-case-design-point", worst_case_point(cfg)),
        outcome("mirror-gain-linearity", mirror_gain(cfg, seed)),
        outcome("energy-calibration", energy_calibration()),
        outcome("droop-calibration", droop_calibration(cfg)),
    ]
}
