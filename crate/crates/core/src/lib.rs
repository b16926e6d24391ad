//! Behavioral simulator for a dual-spike, temporally coded SOT-MRAM
//! compute-in-memory macro.
//!
//! The crate is organised bottom-up:
//!
//! * [`device`] programs 3T-2MTJ cells and builds the crossbar conductance matrix.
//! * [`codec`] turns digital activations into input spike pairs and decodes
//!   output intervals back into multiply-accumulate values.
//! * [`analog`] holds the readout circuit constants and the closed-form charge,
//!   ramp and droop models.
//! * [`engine`] is the asynchronous event scheduler that sequences row flags,
//!   the global flag, charging and the comparator phase.
//! * [`energy`] does energy and TOPS/W accounting.
//! * [`workload`] contains the exact rational oracle, experiment drivers and tiling.
//!
//! [`config`], [`io`] and [`selftest`] support the command-line front end.

pub mod analog;
pub mod codec;
pub mod config;
pub mod device;
pub mod energy;
pub mod engine;
pub mod error;
pub mod io;
pub mod selftest;
pub mod time;
pub mod workload;

pub use analog::{alpha, MacroConfig, ReadoutMode};
pub use codec::{InputVector, SpikePair, TimingConfig};
pub use device::{CrossbarArray, WeightCode, WeightMatrix};
pub use engine::{run_mvm, run_mvm_batch, MvmResult};
pub use error::{Error, Result};
pub use time::SimTime;
