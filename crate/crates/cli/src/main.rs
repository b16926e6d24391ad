//! Command-line front end for the spiking CIM macro simulator.
//!
//! Exit codes: 0 on success, 1 for validation failures (bad arguments,
//! configuration or data), 2 for I/O failures.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use spikecim::config::RunConfig;
use spikecim::engine::MacroSim;
use spikecim::energy::energy_report;
use spikecim::io;
use spikecim::selftest::run_selftest;
use spikecim::workload::{linearity_sweep, nonideal_comparison};
use spikecim::{alpha, device, Error, InputVector, ReadoutMode, SimTime};

mod units;

const LOG_ENV: &str = "SPIKECIM_LOG";

#[derive(Parser, Debug)]
#[command(name = "spikecim", version)]
#[command(about = "Event-driven simulator for a dual-spike SOT-MRAM compute-in-memory macro")]
struct Cli {
    /// JSON configuration file. Missing fields take built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one MVM and write per-column results.
    Simulate {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        inputs: PathBuf,
        /// Overrides the mode from the configuration.
        #[arg(long)]
        mode: Option<ReadoutMode>,
        #[arg(long)]
        out: PathBuf,
        /// Optional waveform trace (time_fs, signal_name, value).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Seeded random linearity sweep against the exact oracle.
    SweepLinearity {
        #[arg(long)]
        n: usize,
        /// Defaults to the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<ReadoutMode>,
        /// Scatter CSV (case_id, col, sum_tg, t_out).
        #[arg(long)]
        out: PathBuf,
        /// Also write the key=value summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Charge droop of a directly charged result capacitor.
    NonidealCompare {
        /// Total driving conductance, e.g. 17.8e-6 or 17.8uS.
        #[arg(long)]
        gtotal: String,
        /// Comma-separated charging durations, e.g. 5ns,10ns.
        #[arg(long)]
        times: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Energy and efficiency accounting for a number of MVMs.
    EnergyReport {
        #[arg(long)]
        mvms: u64,
        /// key=value report.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-component CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the built-in consistency suites.
    Selftest,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => {
            info!("loading configuration from {}", p.display());
            RunConfig::load(p)
        }
        None => Ok(RunConfig::default()),
    }
}

fn simulate(
    cfg: &RunConfig,
    weights: &Path,
    inputs: &Path,
    mode: ReadoutMode,
    out: &Path,
    trace: Option<&Path>,
) -> Result<(), Error> {
    let mc = &cfg.macro_cfg;
    let weights = io::read_weights(weights)?;
    let values = io::read_inputs(inputs, mc.timing.max_value())?;
    if values.len() != weights.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs for {} weight rows",
            values.len(),
            weights.rows()
        )));
    }
    let array = device::program_array(&weights, mc)?;
    let vector = InputVector::encode(&values, SimTime::ZERO, &mc.timing)?;
    let mut sim = MacroSim::new(&array, &vector, mc, mode)?;
    if trace.is_some() {
        sim = sim.with_trace();
    }
    let result = sim.run();
    info!(
        "{} events ({} spikes), first output spike at {}",
        result.event_count, result.spike_events, result.t_first_out
    );
    io::write_simulation(io::create(out)?, &result, mc)?;
    if let (Some(path), Some(samples)) = (trace, result.trace.as_deref()) {
        io::write_trace(io::create(path)?, samples)?;
    }
    Ok(())
}

fn sweep(
    cfg: &RunConfig,
    n: usize,
    seed: u64,
    mode: ReadoutMode,
    out: &Path,
    summary: Option<&Path>,
) -> Result<(), Error> {
    let run = linearity_sweep(n, seed, &cfg.macro_cfg, mode)?;
    io::write_scatter(io::create(out)?, &run.points)?;
    let text = run.report.to_key_value();
    print!("{text}");
    if let Some(path) = summary {
        io::create(path)?.write_all(text.as_bytes())?;
    }
    Ok(())
}

fn compare(cfg: &RunConfig, gtotal: &str, times: &str, out: &Path) -> Result<(), Error> {
    let g = units::parse_quantity(gtotal, "S")?;
    let durations = units::parse_durations(times)?;
    let rows = nonideal_comparison(&durations, g, &cfg.macro_cfg)?;
    io::write_comparison(io::create(out)?, &rows)?;
    for r in &rows {
        let reference = r
            .reference
            .map(|d| format!("  reference {:.1}%", d * 100.0))
            .unwrap_or_default();
        println!(
            "t={:>10} fs  degradation {:.1}%{reference}",
            r.duration.as_fs(),
            r.degradation * 100.0
        );
    }
    Ok(())
}

fn energy(cfg: &RunConfig, mvms: u64, out: &Path, csv: Option<&Path>) -> Result<(), Error> {
    let mc = &cfg.macro_cfg;
    let report = energy_report(mvms, &cfg.energy, mc.rows, mc.cols)?;
    let text = report.to_key_value();
    io::create(out)?.write_all(text.as_bytes())?;
    print!("{text}");
    if let Some(path) = csv {
        io::create(path)?.write_all(report.to_csv().as_bytes())?;
    }
    Ok(())
}

fn selftest(cfg: &RunConfig) -> bool {
    let results = run_selftest(&cfg.macro_cfg, cfg.seed);
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    results.iter().all(|r| r.passed)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let cfg = load_config(cli.config.as_deref())?;
    if cli.print_config {
        println!("{}", cfg.to_json_pretty());
        return Ok(ExitCode::SUCCESS);
    }
    info!("alpha = {:.6} ohm", alpha(&cfg.macro_cfg));
    match cli.command {
        None => Err(Error::InvalidArgument("no command given; see --help".into())),
        Some(Command::Simulate {
            weights,
            inputs,
            mode,
            out,
            trace,
        }) => simulate(&cfg, &weights, &inputs, mode.unwrap_or(cfg.mode), &out, trace.as_deref())
            .map(|_| ExitCode::SUCCESS),
        Some(Command::SweepLinearity {
            n,
            seed,
            mode,
            out,
            summary,
        }) => sweep(
            &cfg,
            n,
            seed.unwrap_or(cfg.seed),
            mode.unwrap_or(cfg.mode),
            &out,
            summary.as_deref(),
        )
        .map(|_| ExitCode::SUCCESS),
        Some(Command::NonidealCompare { gtotal, times, out }) => {
            compare(&cfg, &gtotal, &times, &out).map(|_| ExitCode::SUCCESS)
        }
        Some(Command::EnergyReport { mvms, out, csv }) => {
            energy(&cfg, mvms, &out, csv.as_deref()).map(|_| ExitCode::SUCCESS)
        }
        Some(Command::Selftest) => Ok(if selftest(&cfg) {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
