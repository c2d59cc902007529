use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detectors::{DetectorKind, KnownParams, ParameterSource};
use crate::error::{Error, Result};
use crate::gaussian::{build_toeplitz_covariance, ComplexVector, HermitianPDMatrix};
use crate::text::{format_complex, parse_complex};

/// Trials per RNG block. Part of the reproducibility contract: changing it
/// changes every simulated curve.
pub const DEFAULT_BLOCK_SIZE: usize = 4096;

/// A vector given either as one complex literal repeated `m` times or as an
/// explicit list of literals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Constant(String),
    Entries(Vec<String>),
}

impl VectorSpec {
    pub fn constant(z: Complex64) -> Self {
        VectorSpec::Constant(format_complex(z))
    }

    pub fn resolve(&self, m: usize) -> Result<ComplexVector> {
        match self {
            VectorSpec::Constant(s) => ComplexVector::constant(m, parse_complex(s)?),
            VectorSpec::Entries(list) => {
                if list.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, actual: list.len() });
                }
                ComplexVector::new(list.iter().map(|s| parse_complex(s)).collect::<Result<_>>()?)
            }
        }
    }
}

impl Default for VectorSpec {
    fn default() -> Self {
        VectorSpec::Constant("0".into())
    }
}

/// Steering vector choice. The default is the all-ones vector scaled to unit
/// norm.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SteeringSpec {
    #[default]
    #[serde(with = "unit_ones_tag")]
    UnitOnes,
    Entries(Vec<String>),
}

mod unit_ones_tag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("unit-ones")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "unit-ones" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("unknown steering '{s}', expected \"unit-ones\" or a list")))
        }
    }
}

impl SteeringSpec {
    pub fn resolve(&self, m: usize) -> Result<ComplexVector> {
        match self {
            SteeringSpec::UnitOnes => ComplexVector::unit_ones(m),
            SteeringSpec::Entries(list) => VectorSpec::Entries(list.clone()).resolve(m),
        }
    }
}

/// One simulation experiment. Serialized field names are the JSON descriptor
/// format read by the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub detector: DetectorKind,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub rho: f64,
    #[serde(default)]
    pub mu: VectorSpec,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub snr_grid_db: Vec<f64>,
    #[serde(default)]
    pub steering: SteeringSpec,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
}

fn default_block_size() -> usize {
    DEFAULT_BLOCK_SIZE
}

/// Fully resolved numeric form of an [`ExperimentConfig`].
#[derive(Clone, Debug)]
pub struct Background {
    pub mean: ComplexVector,
    pub covariance: HermitianPDMatrix,
    pub steering: ComplexVector,
}

impl Background {
    pub fn known_params(&self, kind: DetectorKind) -> KnownParams {
        match kind.parameters() {
            ParameterSource::Known => KnownParams::full(self.mean.clone(), self.covariance.clone()),
            ParameterSource::KnownMean => KnownParams::mean(self.mean.clone()),
            ParameterSource::Estimated => KnownParams::none(),
        }
    }
}

impl ExperimentConfig {
    /// Baseline experiment: Toeplitz `ρ`, constant mean, unit-norm
    /// all-ones steering vector, no grids.
    pub fn new(detector: DetectorKind, m: usize, n: usize, rho: f64, mu: Complex64, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            detector,
            m,
            n,
            rho,
            mu: VectorSpec::constant(mu),
            trials,
            seed,
            thresholds: Vec::new(),
            snr_grid_db: Vec::new(),
            steering: SteeringSpec::UnitOnes,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }

    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_snr_grid(mut self, snr_db: Vec<f64>) -> Self {
        self.snr_grid_db = snr_db;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Check everything except the grids.
    pub fn validate_base(&self) -> Result<Background> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.block_size == 0 {
            return Err(Error::invalid("block_size must be at least 1"));
        }
        if self.m == 0 {
            return Err(Error::invalid("dimension m must be at least 1"));
        }
        let need = self.detector.min_secondary(self.m);
        if self.n < need.max(1) && self.detector.parameters() != ParameterSource::Known {
            return Err(Error::invalid(format!(
                "detector {} needs N >= {need} for m = {}, got N = {}",
                self.detector, self.m, self.n
            )));
        }
        let covariance = build_toeplitz_covariance(self.rho, self.m)?;
        let mean = self.mu.resolve(self.m)?;
        let steering = self.steering.resolve(self.m)?;
        if steering.is_zero() {
            return Err(Error::invalid("steering vector must be nonzero"));
        }
        Ok(Background { mean, covariance, steering })
    }

    pub fn validate_thresholds(&self) -> Result<Background> {
        let bg = self.validate_base()?;
        check_grid(&self.thresholds, "threshold grid")?;
        Ok(bg)
    }

    pub fn validate_snr(&self) -> Result<Background> {
        let bg = self.validate_base()?;
        check_grid(&self.snr_grid_db, "SNR grid")?;
        Ok(bg)
    }
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} contains non-finite values")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid(format!("{what} must be sorted ascending")));
    }
    Ok(())
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    line_start + column.saturating_sub(1)
}
