//! Adaptive Gaussian target detection when the background mean and
//! covariance are both unknown.
//!
//! * [`gaussian`]: complex vectors, Hermitian PD matrices, `CN(μ, Σ)` sampling.
//! * [`estimators`]: sample mean and sample covariance.
//! * [`detectors`]: MF/AMF, NMF/ANMF and Kelly statistics.
//! * [`pfa`]: exact false-alarm laws and threshold inversion.
//! * [`montecarlo`]: reproducible false-alarm and detection simulations.
//! * [`hsi`]: hyperspectral cube I/O and sliding-window detection.

pub mod detectors;
pub mod error;
pub mod estimators;
pub mod gaussian;
pub mod hsi;
pub mod montecarlo;
pub mod pfa;
pub mod text;

pub use error::{Error, Result};
