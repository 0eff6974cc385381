//! Frozen calibration constants.
//!
//! The shipped file is compiled in; `VARLEX_DEFAULTS` points at a
//! replacement. Values only change through `varlex calibrate`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const ENV_VAR: &str = "VARLEX_DEFAULTS";
const SHIPPED: &str = include_str!("../calibration/defaults.toml");

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    /// Upper bounds on end-to-end ratios, keyed by config name.
    #[serde(default)]
    pub verify: BTreeMap<String, f64>,
    /// Named constants used by the invariant suite.
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
}

impl Calibration {
    pub fn shipped() -> Self {
        Self::parse(SHIPPED).expect("shipped calibration file parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(format!("calibration: {e}")))
    }

    /// `VARLEX_DEFAULTS` if set, otherwise the shipped file.
    pub fn load() -> Result<Self> {
        match std::env::var_os(ENV_VAR) {
            Some(p) => Self::from_path(Path::new(&p)),
            None => Ok(Self::shipped()),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn constant(&self, key: &str) -> Result<f64> {
        self.constants
            .get(key)
            .copied()
            .ok_or_else(|| HarnessError::Parse(format!("calibration constant `{key}` is missing")))
    }

    pub fn verify_bound(&self, name: &str) -> Option<f64> {
        self.verify.get(name).copied()
    }

    /// The file with a provenance header.
    pub fn render(&self, provenance: &str) -> Result<String> {
        let body = toml::to_string(self).map_err(|e| HarnessError::Parse(e.to_string()))?;
        let header: String = provenance.lines().map(|l| format!("# {l}\n")).collect();
        Ok(format!("{header}\n{body}"))
    }
}

/// Where `calibrate` writes by default: the env override, else the source tree copy.
pub fn default_output() -> PathBuf {
    std::env::var_os(ENV_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/calibration/defaults.toml")))
}

/// Rounds `x` up to two significant digits: frozen bounds stay readable.
pub fn round_up(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return x;
    }
    let e = x.log10().floor() - 1.0;
    let digits = (x / 10f64.powf(e)).ceil();
    // Through text, so the frozen file holds `0.83` rather than `0.8300000000000001`.
    format!("{digits}e{e}").parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::round_up;

    #[test]
    fn round_up_two_digits() {
        assert_eq!(round_up(0.8214), 0.83);
        assert_eq!(round_up(1.3), 1.3);
        assert_eq!(round_up(2.71), 2.8);
        assert_eq!(round_up(123.4), 130.0);
        assert!(round_up(f64::NAN).is_nan());
    }
}
