//! Run configuration: every circuit, timing, device and energy constant in
//! one JSON document.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analog::{MacroConfig, ReadoutMode};
use crate::energy::EnergyConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "macro")]
    pub macro_cfg: MacroConfig,
    pub energy: EnergyConfig,
    pub mode: ReadoutMode,
    pub seed: u64,
}

impl RunConfig {
    /// Parses and validates. Missing fields take their defaults; unknown
    /// fields are rejected.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.macro_cfg.validate()?;
        self.energy.validate()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
