//! Oracle, experiment drivers and multi-macro tiling.

mod baseline;
mod nonideal;
mod oracle;
mod sweep;
mod tiling;

pub use baseline::baseline_correct;
pub use nonideal::{nonideal_comparison, ComparisonRow, REFERENCE_DEGRADATION};
pub use oracle::{exact_mac_oracle, exact_mac_oracle_column, ExactMacValue};
pub use sweep::{fit_line, linearity_sweep, linearity_sweep_cases, random_case, LineFit, ScatterPoint, SweepCase, SweepReport, SweepRun};
pub use tiling::{tile_matrix, tile_matrix_with_plan, Tile, TilePlan};
