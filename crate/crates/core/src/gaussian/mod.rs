//! Complex Gaussian algebra and sampling.
//!
//! Convention: `x ~ CN(μ, Σ)` means `E[(x-μ)(x-μ)ᴴ] = Σ` with circular
//! symmetry, so each real and imaginary coordinate of a whitened vector has
//! variance 1/2.

mod linalg;
mod rng;

pub use linalg::{
    build_toeplitz_covariance, cholesky, quad_form, quad_norm, real_part_checked, solve_pd, CholeskyFactor,
    ComplexVector, HermitianPDMatrix, HERMITIAN_TOL, REAL_FORM_TOL,
};
pub(crate) use linalg::dotc;
pub use rng::{sample_cn, CnSampler, RngStream};
