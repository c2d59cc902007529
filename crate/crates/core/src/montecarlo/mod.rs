//! Reproducible Monte-Carlo harness: false-alarm curves, detection curves,
//! empirical threshold calibration and CFAR checks.
//!
//! Trials run in fixed-size blocks. Each block draws from its own
//! counter-based RNG stream keyed by the master seed, so results are
//! bit-identical for any number of worker threads.

mod config;
mod simulate;
pub mod stats;

pub use config::{Background, ExperimentConfig, SteeringSpec, VectorSpec, DEFAULT_BLOCK_SIZE};
pub use simulate::{
    amplitude_for_snr, calibrate_threshold_empirical, ks_compare, simulate_fa_curve, simulate_null_statistics,
    simulate_pd_curve, simulate_permuted_statistics, Calibration, CiCheck, FaCurve, PdCurve, StatisticSample,
};
