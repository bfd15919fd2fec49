use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernel::AdjacencyKernel;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// "disk", "gaussian", or "tabulated".
    pub variant: String,
    #[serde(default)]
    pub params: KernelParams,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    /// Sample spacing for tabulated kernels.
    #[serde(default)]
    pub dr: Option<f64>,
    /// Radial samples at r = 0, dr, 2 dr, ... for tabulated kernels.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Normalization tolerance for tabulated kernels.
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub point: u64,
    pub edge: u64,
    pub master: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            point: 1,
            edge: 2,
            master: 3,
        }
    }
}

/// Reproducible experiment description. Optional blocks extend the required
/// keys for specific subcommands.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub kernel: KernelConfig,
    pub lambda: f64,
    #[serde(rename = "box")]
    pub box_: BoxConfig,
    pub samples: usize,
    #[serde(default)]
    pub seeds: SeedConfig,
    /// Grid resolution per axis for spectral commands.
    #[serde(default)]
    pub grid: Option<usize>,
    /// Displacements for two-point estimation.
    #[serde(default)]
    pub displacements: Option<Vec<Vec<f64>>>,
    /// Search interval for the critical-intensity estimator.
    #[serde(default)]
    pub lambda_range: Option<(f64, f64)>,
    /// Bisection tolerance for the critical-intensity estimator.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Intensities scanned by the certification driver.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// Fit window (r_min, r_max) for decay-exponent fits.
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.dimension > 8 {
            return Err(Error::Config(format!(
                "dimension {} outside supported range 1..=8",
                self.dimension
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be finite and >= 0".into()));
        }
        if !(self.box_.l > 0.0 && self.box_.l.is_finite()) {
            return Err(Error::Config("box L must be finite and > 0".into()));
        }
        if let Some(n) = self.grid {
            if n == 0 || n % 2 != 0 {
                return Err(Error::Config("grid n must be positive and even".into()));
            }
        }
        self.kernel()?;
        Ok(())
    }

    pub fn kernel(&self) -> Result<AdjacencyKernel> {
        match self.kernel.variant.as_str() {
            "disk" => Ok(AdjacencyKernel::disk(self.dimension)),
            "gaussian" => Ok(AdjacencyKernel::gaussian(self.dimension)),
            "tabulated" => {
                let p = &self.kernel.params;
                let (Some(dr), Some(values)) = (p.dr, p.values.clone()) else {
                    return Err(Error::Config(
                        "tabulated kernel requires params.dr and params.values".into(),
                    ));
                };
                AdjacencyKernel::tabulated(self.dimension, dr, values, p.tol.unwrap_or(1e-6))
            }
            other => Err(Error::Config(format!("unknown kernel variant '{other}'"))),
        }
    }

    /// SHA-256 over the canonical JSON serialization, hex, first 16 chars.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canon.as_bytes());
        let hex: String = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        hex[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dimension": 2,
        "kernel": {"variant": "gaussian"},
        "lambda": 0.5,
        "box": {"L": 8.0},
        "samples": 100
    }"#;

    #[test]
    fn minimal_roundtrip_and_digest_stability() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.dimension, 2);
        assert_eq!(cfg.seeds, SeedConfig::default());
        let d1 = cfg.digest();
        let d2 = RunConfig::from_json(MINIMAL).unwrap().digest();
        assert_eq!(d1, d2);
        assert_eq!(d1.len(), 16);

        let mut other = cfg.clone();
        other.lambda = 0.6;
        assert_ne!(other.digest(), d1);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_json("{}").is_err());
        let bad_kernel = MINIMAL.replace("gaussian", "mystery");
        assert!(matches!(
            RunConfig::from_json(&bad_kernel),
            Err(Error::Config(_))
        ));
        let bad_lambda = MINIMAL.replace("0.5", "-1.0");
        assert!(RunConfig::from_json(&bad_lambda).is_err());
        let unknown_key = MINIMAL.replace("\"samples\": 100", "\"samples\": 100, \"zz\": 1");
        assert!(RunConfig::from_json(&unknown_key).is_err());
    }

    #[test]
    fn tabulated_kernel_from_config() {
        let cfg_text = r#"{
            "dimension": 1,
            "kernel": {"variant": "tabulated",
                       "params": {"dr": 0.25, "values": [1.0, 1.0, 0.0], "tol": 0.6}},
            "lambda": 0.1,
            "box": {"L": 4.0},
            "samples": 10
        }"#;
        let cfg = RunConfig::from_json(cfg_text).unwrap();
        let k = cfg.kernel().unwrap();
        assert_eq!(k.eval(&[0.1]).unwrap(), 1.0);
    }
}
