//! False-alarm laws, the special functions behind them, and threshold
//! inversion.

mod laws;
pub mod quadrature;
mod special;

pub use laws::{
    eta_lambda_transform, invert_threshold, pfa_amf_known_mean, pfa_amf_unknown_mean, pfa_anmf_known_mean,
    pfa_anmf_unknown_mean, pfa_kelly_known_mean, pfa_kelly_plugin, pfa_mf, pfa_nmf, PfaLaw, ThresholdDomain,
    ThresholdScale, INVERSION_REL_TOL,
};
pub use special::{beta_expectation, hyp2f1, hyp2f1_parts, ln_beta};
