//! Splitting large weight matrices across several macros.

use std::ops::Range;

use crate::analog::{MacroConfig, ReadoutMode};
use crate::codec::InputVector;
use crate::device::{program_array, WeightMatrix};
use crate::engine::run_mvm;
use crate::error::{Error, Result};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

/// A partition of an `m x n` matrix into tiles no larger than
/// `tile_rows x tile_cols`. Tiles are listed row-tile major, which is also the
/// order partial sums are accumulated in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub tiles: Vec<Tile>,
}

fn split(len: usize, chunk: usize) -> Vec<Range<usize>> {
    (0..len).step_by(chunk).map(|s| s..(s + chunk).min(len)).collect()
}

impl TilePlan {
    pub fn new(m: usize, n: usize, tile_rows: usize, tile_cols: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if tile_rows == 0 || tile_cols == 0 {
            return Err(Error::InvalidArgument("tile dimensions must be non-zero".into()));
        }
        let row_ranges = split(m, tile_rows);
        let col_ranges = split(n, tile_cols);
        let tiles = row_ranges
            .iter()
            .flat_map(|r| {
                col_ranges.iter().map(move |c| Tile {
                    rows: r.clone(),
                    cols: c.clone(),
                })
            })
            .collect();
        Ok(Self {
            grid_rows: row_ranges.len(),
            grid_cols: col_ranges.len(),
            tiles,
        })
    }
}

/// Decoded `sum(T_in * G)` per output column, tiling with the configured
/// array size.
pub fn tile_matrix(weights: &WeightMatrix, inputs: &[u32], cfg: &MacroConfig) -> Result<Vec<f64>> {
    let plan = TilePlan::new(weights.rows(), weights.cols(), cfg.rows, cfg.cols)?;
    tile_matrix_with_plan(weights, inputs, cfg, &plan)
}

pub fn tile_matrix_with_plan(
    weights: &WeightMatrix,
    inputs: &[u32],
    cfg: &MacroConfig,
    plan: &TilePlan,
) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if inputs.len() != weights.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs for {} weight rows",
            inputs.len(),
            weights.rows()
        )));
    }
    let mut out = vec![0.0; weights.cols()];
    for tile in &plan.tiles {
        if tile.rows.end > weights.rows() || tile.cols.end > weights.cols() {
            return Err(Error::DimensionMismatch(format!(
                "tile {:?}x{:?} exceeds the {}x{} matrix",
                tile.rows,
                tile.cols,
                weights.rows(),
                weights.cols()
            )));
        }
        let block = weights.submatrix(tile.rows.clone(), tile.cols.clone());
        let array = program_array(&block, cfg)?;
        let vector = InputVector::encode(&inputs[tile.rows.clone()], SimTime::ZERO, &cfg.timing)?;
        let result = run_mvm(&array, &vector, cfg, ReadoutMode::Ideal)?;
        for (o, d) in out[tile.cols.clone()].iter_mut().zip(result.decoded(cfg)) {
            *o += d;
        }
    }
    Ok(out)
}
