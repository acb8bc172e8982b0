//! Calibrated constants consumed by the asymptotic and acceptance checks.
//!
//! The bundled file is produced by `hardy-lab calibrate`; setting
//! `HARDY_LAB_CONSTANTS` to a path overrides it at run time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Environment variable naming an alternative constants file.
pub const CONSTANTS_ENV: &str = "HARDY_LAB_CONSTANTS";

const BUNDLED: &str = include_str!("../data/constants.json");

/// Frozen calibration results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Möbius parameter the E-set threshold was calibrated at.
    pub a: f64,
    /// Largest δ with E-set density ≥ δ at the calibration power.
    pub delta_star: f64,
    /// Stationary-phase error-budget constant.
    #[serde(rename = "K0")]
    pub k0: f64,
    /// Constant in |c_m(n) − M_m(n)| ≤ K √n m^{−5/4}.
    #[serde(rename = "K_laguerre")]
    pub k_laguerre: f64,
    /// How each value was produced.
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub delta_star: String,
    #[serde(rename = "K0")]
    pub k0: String,
    #[serde(rename = "K_laguerre")]
    pub k_laguerre: String,
}

impl Constants {
    /// The file compiled into the crate.
    pub fn bundled() -> Self {
        serde_json::from_str(BUNDLED).expect("bundled constants file is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// `HARDY_LAB_CONSTANTS` when set, the bundled file otherwise.
    pub fn load() -> Result<Self> {
        match std::env::var_os(CONSTANTS_ENV) {
            Some(p) => Self::from_path(Path::new(&p)),
            None => Ok(Self::bundled()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
