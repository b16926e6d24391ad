//! CSV ingestion and report writers.
//!
//! Times are written as integer femtoseconds and voltages with nine
//! significant digits.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::analog::MacroConfig;
use crate::device::{WeightCode, WeightMatrix};
use crate::engine::{MvmResult, TraceSample};
use crate::error::{Error, Result};
use crate::time::SimTime;
use crate::workload::{ComparisonRow, ScatterPoint};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(r)
}

fn parse_field(record: &csv::StringRecord, idx: usize, field: &str) -> Result<u64> {
    let line = record.position().map_or(0, |p| p.line());
    field.parse::<u64>().map_err(|_| Error::Parse {
        line,
        column: idx + 1,
        message: format!("expected a non-negative integer, found {field:?}"),
    })
}

/// Reads a weight matrix: one array row per line, comma separated codes 0..=3.
pub fn parse_weights<R: Read>(r: R) -> Result<WeightMatrix> {
    let mut n_rows = 0usize;
    let mut data = Vec::new();
    let mut cols = None;
    for record in reader(r).records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if *cols.get_or_insert(record.len()) != record.len() {
            return Err(Error::Parse {
                line,
                column: record.len().min(cols.unwrap_or(0)) + 1,
                message: format!("expected {} weights, found {}", cols.unwrap_or(0), record.len()),
            });
        }
        for (idx, field) in record.iter().enumerate() {
            let v = parse_field(&record, idx, field)?;
            let code = u32::try_from(v)
                .ok()
                .and_then(|v| WeightCode::new(v).ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    column: idx + 1,
                    message: format!("weight {v} at row {}, column {idx} is not in 0..=3", n_rows),
                })?;
            data.push(code);
        }
        n_rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if n_rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    WeightMatrix::new(n_rows, cols, data)
}

/// Reads an input vector laid out as a single column or a single row.
pub fn parse_inputs<R: Read>(r: R, max_value: u64) -> Result<Vec<u32>> {
    let records = reader(r).records().collect::<std::result::Result<Vec<_>, _>>()?;
    let mut values = Vec::new();
    let single_row = records.len() == 1;
    for record in &records {
        let line = record.position().map_or(0, |p| p.line());
        if !single_row && record.len() != 1 {
            return Err(Error::Parse {
                line,
                column: 2,
                message: "inputs must be a single column or a single row".into(),
            });
        }
        for (idx, field) in record.iter().enumerate() {
            let v = parse_field(record, idx, field)?;
            if v > max_value {
                return Err(Error::Parse {
                    line,
                    column: idx + 1,
                    message: format!("input {v} exceeds the maximum encodable value {max_value}"),
                });
            }
            values.push(v as u32);
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("input vector is empty".into()));
    }
    Ok(values)
}

pub fn read_weights(path: &Path) -> Result<WeightMatrix> {
    parse_weights(File::open(path)?)
}

pub fn read_inputs(path: &Path, max_value: u64) -> Result<Vec<u32>> {
    parse_inputs(File::open(path)?, max_value)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Nine significant digits.
pub fn fmt_volts(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_simulation<W: Write>(mut w: W, result: &MvmResult, cfg: &MacroConfig) -> Result<()> {
    writeln!(w, "col,t_out_fs,v_charge_V,decoded_Ss,saturated")?;
    let decoded = result.decoded(cfg);
    for col in 0..result.t_out.len() {
        writeln!(
            w,
            "{col},{},{},{:.12e},{}",
            SimTime::from_secs_f64(result.t_out[col]).as_fs(),
            fmt_volts(result.v_charge_final[col]),
            decoded[col],
            result.saturated[col]
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(mut w: W, trace: &[TraceSample]) -> Result<()> {
    writeln!(w, "time_fs,signal_name,value")?;
    for s in trace {
        writeln!(w, "{},{},{}", s.time.as_fs(), s.signal, fmt_volts(s.value))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter<W: Write>(mut w: W, points: &[ScatterPoint]) -> Result<()> {
    writeln!(w, "case_id,col,sum_tg,t_out")?;
    for p in points {
        writeln!(w, "{},{},{:.17e},{:.17e}", p.case_id, p.col, p.sum_tg, p.t_out)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison<W: Write>(mut w: W, rows: &[ComparisonRow]) -> Result<()> {
    writeln!(w, "t_fs,v_ideal_V,v_nonideal_V,degradation,reference_degradation")?;
    for r in rows {
        let reference = r.reference.map(|d| format!("{d:.3}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{:.6},{}",
            r.duration.as_fs(),
            fmt_volts(r.v_ideal),
            fmt_volts(r.v_nonideal),
            r.degradation,
            reference
        )?;
    }
    w.flush()?;
    Ok(())
}
