//! MTJ devices, the 3T-2MTJ series cell and the crossbar conductance matrix.
//!
//! A cell's read path is two MTJs in series. `J2` has twice the low-state
//! resistance of `J1`, so the two state bits give four distinct read-path
//! resistances. Bit 0 of the weight code drives `J1` and bit 1 drives `J2`; a
//! set bit puts the junction in its low-resistance state. With a TMR of 100%
//! this yields `R(w) = R_low * (6 - w)`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::analog::MacroConfig;
use crate::error::{Error, Result};

/// Relative tolerance used when sensing a cell's resistance back into a code.
const READ_TOLERANCE: f64 = 1e-9;

/// Smallest multiplicative resistance factor the variation hook will produce.
const MIN_VARIATION_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MtjState {
    LowRes,
    HighRes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtjDevice {
    r_low: f64,
    tmr: f64,
    pub state: MtjState,
}

impl MtjDevice {
    pub fn new(r_low: f64, tmr: f64, state: MtjState) -> Result<Self> {
        if !(r_low.is_finite() && r_low > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "MTJ low resistance must be positive, got {r_low}"
            )));
        }
        if !(tmr.is_finite() && tmr >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "TMR must be non-negative, got {tmr}"
            )));
        }
        Ok(Self { r_low, tmr, state })
    }

    pub fn r_low(&self) -> f64 {
        self.r_low
    }

    pub fn tmr(&self) -> f64 {
        self.tmr
    }

    pub fn resistance(&self) -> f64 {
        mtj_resistance(self)
    }
}

/// Effective resistance of a junction in its current state.
pub fn mtj_resistance(device: &MtjDevice) -> f64 {
    match device.state {
        MtjState::LowRes => device.r_low,
        MtjState::HighRes => device.r_low * (1.0 + device.tmr),
    }
}

/// A 2-bit cell value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightCode(u8);

impl WeightCode {
    pub const MAX: u8 = 3;
    pub const ALL: [WeightCode; 4] = [WeightCode(0), WeightCode(1), WeightCode(2), WeightCode(3)];

    pub fn new(value: u32) -> Result<Self> {
        if value > Self::MAX as u32 {
            return Err(Error::WeightOutOfRange(value));
        }
        Ok(WeightCode(value as u8))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// State of `J1` (bit 0).
    pub fn j1_state(self) -> MtjState {
        bit_state(self.0 & 1)
    }

    /// State of `J2` (bit 1).
    pub fn j2_state(self) -> MtjState {
        bit_state((self.0 >> 1) & 1)
    }
}

fn bit_state(bit: u8) -> MtjState {
    if bit == 1 {
        MtjState::LowRes
    } else {
        MtjState::HighRes
    }
}

impl TryFrom<u32> for WeightCode {
    type Error = Error;
    fn try_from(value: u32) -> Result<Self> {
        WeightCode::new(value)
    }
}

impl fmt::Display for WeightCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Two junctions in series on the read path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell3T2J {
    pub j1: MtjDevice,
    pub j2: MtjDevice,
}

impl Cell3T2J {
    /// Builds a cell from arbitrary junctions. Used to model faulty or
    /// mis-sized cells; [`program_cell`] is the normal constructor.
    pub fn from_devices(j1: MtjDevice, j2: MtjDevice) -> Self {
        Self { j1, j2 }
    }

    pub fn resistance(&self) -> f64 {
        mtj_resistance(&self.j1) + mtj_resistance(&self.j2)
    }

    pub fn conductance(&self) -> f64 {
        1.0 / self.resistance()
    }
}

/// Read-path resistance of a nominal cell holding `w`.
pub fn nominal_resistance(w: WeightCode, base_r: f64, tmr: f64) -> f64 {
    let r = |state, r_low: f64| match state {
        MtjState::LowRes => r_low,
        MtjState::HighRes => r_low * (1.0 + tmr),
    };
    r(w.j1_state(), base_r) + r(w.j2_state(), 2.0 * base_r)
}

/// Programs a cell for weight `w` with `J1` low resistance `base_r` and the
/// given TMR. `J2` gets twice `base_r`.
pub fn program_cell(w: WeightCode, base_r: f64, tmr: f64) -> Result<Cell3T2J> {
    let j1 = MtjDevice::new(base_r, tmr, w.j1_state())?;
    let j2 = MtjDevice::new(2.0 * base_r, tmr, w.j2_state())?;
    Ok(Cell3T2J { j1, j2 })
}

/// Senses the cell's read-path resistance and maps it back to a weight code.
///
/// The four reference levels are derived from `J1`'s low resistance and TMR,
/// assuming the nominal 1:2 sizing of the junctions.
pub fn read_weight(cell: &Cell3T2J) -> Result<WeightCode> {
    let r = cell.resistance();
    let base_r = cell.j1.r_low();
    let tmr = cell.j1.tmr();
    WeightCode::ALL
        .into_iter()
        .find(|&w| {
            let nominal = nominal_resistance(w, base_r, tmr);
            ((r - nominal) / nominal).abs() <= READ_TOLERANCE
        })
        .ok_or(Error::CorruptCell(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    /// Low-state resistance of `J1` in ohms.
    pub r_low: f64,
    pub tmr: f64,
    /// Relative standard deviation of per-cell multiplicative resistance noise.
    pub resistance_sigma: f64,
    pub variation_seed: u64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            r_low: 1.0e6,
            tmr: 1.0,
            resistance_sigma: 0.0,
            variation_seed: 0,
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        MtjDevice::new(self.r_low, self.tmr, MtjState::LowRes)?;
        if !(self.resistance_sigma.is_finite() && self.resistance_sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "resistance_sigma must be non-negative, got {}",
                self.resistance_sigma
            )));
        }
        Ok(())
    }

    pub fn conductance(&self, w: WeightCode) -> f64 {
        1.0 / nominal_resistance(w, self.r_low, self.tmr)
    }
}

/// A dense row-major matrix of weight codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<WeightCode>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<WeightCode>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, w: WeightCode) -> Self {
        Self {
            rows,
            cols,
            data: vec![w; rows * cols],
        }
    }

    /// Builds a matrix from nested integer rows, reporting the first
    /// out-of-range entry by position.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                data.push(WeightCode::new(v).map_err(|_| {
                    Error::InvalidArgument(format!("weight {v} at row {i}, column {j} is not in 0..=3"))
                })?);
            }
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn get(&self, row: usize, col: usize) -> WeightCode {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = WeightCode> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    /// Copies out the block `rows x cols`.
    pub fn submatrix(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> WeightMatrix {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for r in rows.clone() {
            data.extend_from_slice(&self.data[r * self.cols + cols.start..r * self.cols + cols.end]);
        }
        WeightMatrix {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Returns a copy with rows reordered so that row `i` of the result is
    /// row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> WeightMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for &r in perm {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        WeightMatrix {
            rows: perm.len(),
            cols: self.cols,
            data,
        }
    }
}

/// A programmed crossbar. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarArray {
    rows: usize,
    cols: usize,
    cells: Vec<Cell3T2J>,
    conductances: Vec<f64>,
}

impl CrossbarArray {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell3T2J {
        &self.cells[row * self.cols + col]
    }

    /// Cell conductance `G_mem` in siemens.
    pub fn conductance(&self, row: usize, col: usize) -> f64 {
        self.conductances[row * self.cols + col]
    }

    /// All conductances of one word line, one entry per column.
    pub fn row_conductances(&self, row: usize) -> &[f64] {
        &self.conductances[row * self.cols..(row + 1) * self.cols]
    }
}

/// Programs every cell of the array. The weight matrix may be smaller than
/// the configured array; the array then takes the matrix's dimensions.
pub fn program_array(weights: &WeightMatrix, cfg: &MacroConfig) -> Result<CrossbarArray> {
    if weights.rows() > cfg.rows || weights.cols() > cfg.cols {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} weights exceed the {}x{} array",
            weights.rows(),
            weights.cols(),
            cfg.rows,
            cfg.cols
        )));
    }
    let dev = &cfg.device;
    let cells = weights
        .data
        .iter()
        .map(|&w| program_cell(w, dev.r_low, dev.tmr))
        .collect::<Result<Vec<_>>>()?;
    let mut conductances: Vec<f64> = cells.iter().map(Cell3T2J::conductance).collect();

    if dev.resistance_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(dev.variation_seed);
        let noise = Normal::new(0.0, dev.resistance_sigma)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for g in &mut conductances {
            let factor = (1.0 + noise.sample(&mut rng)).max(MIN_VARIATION_FACTOR);
            *g /= factor;
        }
    }

    Ok(CrossbarArray {
        rows: weights.rows(),
        cols: weights.cols(),
        cells,
        conductances,
    })
}
