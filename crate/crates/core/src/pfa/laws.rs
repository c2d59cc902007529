//! False-alarm probability as a function of the detection threshold.

use serde::{Deserialize, Serialize};

use super::special::{beta_expectation, hyp2f1, hyp2f1_parts};
use crate::detectors::DetectorKind;
use crate::error::{Error, Result};

/// Relative accuracy of [`invert_threshold`].
pub const INVERSION_REL_TOL: f64 = 1e-8;

/// Half-open threshold range `[lo, hi)` on which a law is defined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDomain {
    pub lo: f64,
    pub hi: f64,
}

impl ThresholdDomain {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lo && lambda < self.hi
    }
}

fn check_unbounded(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::domain(format!("threshold must be nonnegative, got {lambda}")));
    }
    Ok(())
}

fn check_unit(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("threshold must lie in [0, 1), got {lambda}")));
    }
    Ok(())
}

fn check_counts(n: usize, min_n: usize, m: usize, what: &str) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("dimension m must be at least 1"));
    }
    if n < min_n {
        return Err(Error::domain(format!("{what} requires N >= {min_n} for m = {m}, got N = {n}")));
    }
    Ok(())
}

/// Matched filter: `exp(−λ)`.
pub fn pfa_mf(lambda: f64) -> Result<f64> {
    check_unbounded(lambda)?;
    Ok((-lambda).exp())
}

/// AMF with known mean and `N` secondary vectors:
/// `₂F₁(N−m+1, N−m+2; N+1; −λ/N)`.
pub fn pfa_amf_known_mean(lambda: f64, n: usize, m: usize) -> Result<f64> {
    check_unbounded(lambda)?;
    check_counts(n, m, m, "AMF with known mean")?;
    let (nf, mf) = (n as f64, m as f64);
    if lambda.is_infinite() {
        return Ok(0.0);
    }
    hyp2f1(nf - mf + 1.0, nf - mf + 2.0, nf + 1.0, -lambda / nf)
}

/// AMF with estimated mean and covariance:
/// `₂F₁(N−m, N−m+1; N; −λ'/(N−1))` with `λ' = λ(N−1)/(N+1)`.
pub fn pfa_amf_unknown_mean(lambda: f64, n: usize, m: usize) -> Result<f64> {
    check_unbounded(lambda)?;
    check_counts(n, m + 1, m, "AMF with estimated mean")?;
    let (nf, mf) = (n as f64, m as f64);
    if lambda.is_infinite() {
        return Ok(0.0);
    }
    let lambda_p = (nf - 1.0) / (nf + 1.0) * lambda;
    hyp2f1(nf - mf, nf - mf + 1.0, nf, -lambda_p / (nf - 1.0))
}

/// Kelly test with known mean: `(1−λ)^{N−m+1}`.
pub fn pfa_kelly_known_mean(lambda: f64, n: usize, m: usize) -> Result<f64> {
    check_unit(lambda)?;
    check_counts(n, m, m, "Kelly with known mean")?;
    Ok((1.0 - lambda).powi((n - m + 1) as i32))
}

/// Plug-in Kelly test:
/// `Γ(N)/(Γ(N−m+1)Γ(m−1)) ∫₀¹ [1 + λ/(1−λ)·(1 − u/(N+1))]^{m−N} u^{N−m}(1−u)^{m−2} du`.
///
/// The Gamma prefactor is the Beta(N−m+1, m−1) normalizer, so the integral is
/// evaluated as an expectation under that density with log-Gamma constants.
pub fn pfa_kelly_plugin(lambda: f64, n: usize, m: usize) -> Result<f64> {
    check_unit(lambda)?;
    if m < 2 {
        return Err(Error::domain("plug-in Kelly law requires m >= 2"));
    }
    check_counts(n, m + 1, m, "plug-in Kelly")?;
    let (nf, mf) = (n as f64, m as f64);
    let ratio = lambda / (1.0 - lambda);
    let exponent = mf - nf;
    let p = beta_expectation(nf - mf + 1.0, mf - 1.0, |u| {
        (exponent * (ratio * (1.0 - u / (nf + 1.0))).ln_1p()).exp()
    })?;
    Ok(p.clamp(0.0, 1.0))
}

/// Normalized matched filter: `(1−λ)^{m−1}`.
pub fn pfa_nmf(lambda: f64, m: usize) -> Result<f64> {
    check_unit(lambda)?;
    if m == 0 {
        return Err(Error::domain("dimension m must be at least 1"));
    }
    Ok((1.0 - lambda).powi((m - 1) as i32))
}

/// ANMF with known mean: `(1−λ)^{a−1} ₂F₁(a, a−1; b−1; λ)`, `a = N−m+2`,
/// `b = N+2`.
pub fn pfa_anmf_known_mean(lambda: f64, n: usize, m: usize) -> Result<f64> {
    check_unit(lambda)?;
    check_counts(n, m, m, "ANMF with known mean")?;
    let a = (n - m + 2) as f64;
    let b = (n + 2) as f64;
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let (ln_scale, value) = hyp2f1_parts(a, a - 1.0, b - 1.0, lambda)?;
    Ok(((a - 1.0) * (-lambda).ln_1p() + ln_scale).exp() * value)
}

/// ANMF with estimated mean: the known-mean law with `N` replaced by `N−1`.
pub fn pfa_anmf_unknown_mean(lambda: f64, n: usize, m: usize) -> Result<f64> {
    check_counts(n, m + 1, m, "ANMF with estimated mean")?;
    pfa_anmf_known_mean(lambda, n - 1, m)
}

/// Closed-form false-alarm law of one detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PfaLaw {
    pub kind: DetectorKind,
    pub m: usize,
    /// Secondary-data count; ignored by MF and NMF.
    pub n: usize,
}

impl PfaLaw {
    pub fn new(kind: DetectorKind, m: usize, n: usize) -> Result<Self> {
        use DetectorKind::*;
        if m == 0 {
            return Err(Error::domain("dimension m must be at least 1"));
        }
        match kind {
            KellyGeneralized => {
                return Err(Error::domain(
                    "the generalized Kelly test has no closed-form false-alarm law; calibrate it empirically",
                ))
            }
            AmfKnownMean | AnmfKnownMean | KellyKnownMean => check_counts(n, m, m, kind.name())?,
            Amf | Anmf => check_counts(n, m + 1, m, kind.name())?,
            KellyPlugin => {
                check_counts(n, m + 1, m, kind.name())?;
                if m < 2 {
                    return Err(Error::domain("plug-in Kelly law requires m >= 2"));
                }
            }
            Mf | Nmf => {}
        }
        Ok(PfaLaw { kind, m, n })
    }

    pub fn domain(&self) -> ThresholdDomain {
        let hi = if self.kind.is_bounded() { 1.0 } else { f64::INFINITY };
        ThresholdDomain { lo: 0.0, hi }
    }

    pub fn pfa(&self, lambda: f64) -> Result<f64> {
        use DetectorKind::*;
        let (n, m) = (self.n, self.m);
        let p = match self.kind {
            Mf => pfa_mf(lambda),
            AmfKnownMean => pfa_amf_known_mean(lambda, n, m),
            Amf => pfa_amf_unknown_mean(lambda, n, m),
            Nmf => pfa_nmf(lambda, m),
            AnmfKnownMean => pfa_anmf_known_mean(lambda, n, m),
            Anmf => pfa_anmf_unknown_mean(lambda, n, m),
            KellyKnownMean => pfa_kelly_known_mean(lambda, n, m),
            KellyPlugin => pfa_kelly_plugin(lambda, n, m),
            KellyGeneralized => Err(Error::domain("no closed-form law for the generalized Kelly test")),
        }?;
        Ok(p.clamp(0.0, 1.0))
    }

    /// `log10` of the false-alarm probability, for log-scale plots.
    pub fn log10_pfa(&self, lambda: f64) -> Result<f64> {
        Ok(self.pfa(lambda)?.log10())
    }

    pub fn invert(&self, target_pfa: f64) -> Result<f64> {
        invert_threshold(self, target_pfa)
    }
}

/// Threshold `λ` with `pfa(λ) = target` within [`INVERSION_REL_TOL`].
///
/// MF, NMF and known-mean Kelly use their analytic inverses; the other laws
/// are inverted by bisection, which only relies on monotonicity.
pub fn invert_threshold(law: &PfaLaw, target_pfa: f64) -> Result<f64> {
    if !(target_pfa > 0.0 && target_pfa <= 1.0) {
        return Err(Error::domain(format!("target PFA must lie in (0, 1], got {target_pfa}")));
    }
    if target_pfa == 1.0 {
        return Ok(0.0);
    }
    use DetectorKind::*;
    match law.kind {
        Mf => return Ok(-target_pfa.ln()),
        KellyKnownMean => {
            let e = (law.n - law.m + 1) as f64;
            return Ok(1.0 - target_pfa.powf(1.0 / e));
        }
        Nmf => {
            if law.m < 2 {
                return Err(Error::domain("NMF law is identically 1 for m = 1; only PFA = 1 is attainable"));
            }
            let e = (law.m - 1) as f64;
            return Ok(1.0 - target_pfa.powf(1.0 / e));
        }
        _ => {}
    }

    let dom = law.domain();
    let mut lo = 0.0;
    let mut hi = if dom.hi.is_finite() {
        dom.hi
    } else {
        let mut h = 1.0;
        while law.pfa(h)? > target_pfa {
            h *= 2.0;
            if h > 1e12 {
                return Err(Error::domain(format!("target PFA {target_pfa} not reached below threshold {h}")));
            }
        }
        h
    };

    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = law.pfa(mid)?;
        let rel = (p - target_pfa).abs() / target_pfa;
        if rel < best.0 {
            best = (rel, mid);
        }
        if rel < INVERSION_REL_TOL * 1e-2 {
            break;
        }
        if p > target_pfa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > INVERSION_REL_TOL {
        return Err(Error::domain(format!(
            "threshold inversion for {} reached only relative error {:.2e}",
            law.kind, best.0
        )));
    }
    Ok(best.1)
}

/// Direction of [`eta_lambda_transform`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdScale {
    /// Input is `λ`, output is `η`.
    LambdaToEta,
    /// Input is `η`, output is `λ`.
    EtaToLambda,
}

fn eta_exponent(kind: DetectorKind, n: usize, m: usize) -> Result<f64> {
    use DetectorKind::*;
    match kind {
        KellyKnownMean | KellyPlugin => Ok(n as f64 + 1.0),
        Nmf | AnmfKnownMean | Anmf => Ok(m as f64),
        KellyGeneralized => Ok(1.0),
        Mf | AmfKnownMean | Amf => Err(Error::domain(format!("{kind} has no likelihood-ratio threshold form"))),
    }
}

/// Convert between the statistic threshold `λ ∈ [0,1)` and the
/// likelihood-ratio threshold `η ≥ 1`: `η = (1−λ)^{−(N+1)}` for the Kelly
/// tests, `η = (1−λ)^{−m}` for the normalized matched filters and
/// `λ = (η−1)/η` for the generalized Kelly test.
pub fn eta_lambda_transform(kind: DetectorKind, value: f64, scale: ThresholdScale, n: usize, m: usize) -> Result<f64> {
    let e = eta_exponent(kind, n, m)?;
    match scale {
        ThresholdScale::LambdaToEta => {
            check_unit(value)?;
            Ok((-e * (-value).ln_1p()).exp())
        }
        ThresholdScale::EtaToLambda => {
            if value.is_nan() || value < 1.0 {
                return Err(Error::domain(format!("eta must be >= 1, got {value}")));
            }
            Ok(-(-value.ln() / e).exp_m1())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mf_values() {
        assert_eq!(pfa_mf(0.0).unwrap(), 1.0);
        assert!((pfa_mf(1000f64.ln()).unwrap() - 1e-3).abs() < 1e-15);
        assert!(pfa_mf(-1.0).is_err());
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(pfa_kelly_known_mean(0.5, 10, 5).unwrap(), 0.015625);
        assert_eq!(pfa_nmf(0.5, 5).unwrap(), 0.0625);
        assert_eq!(pfa_nmf(0.73, 1).unwrap(), 1.0);
        assert!(pfa_kelly_known_mean(1.0, 10, 5).is_err());
        assert!(pfa_nmf(-0.1, 5).is_err());
    }

    #[test]
    fn all_laws_one_at_zero() {
        assert_eq!(pfa_amf_known_mean(0.0, 10, 5).unwrap(), 1.0);
        assert_eq!(pfa_amf_unknown_mean(0.0, 10, 5).unwrap(), 1.0);
        assert_eq!(pfa_anmf_known_mean(0.0, 10, 5).unwrap(), 1.0);
        assert_eq!(pfa_anmf_unknown_mean(0.0, 10, 5).unwrap(), 1.0);
        assert!((pfa_kelly_plugin(0.0, 10, 5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parameter_errors() {
        assert!(pfa_amf_known_mean(1.0, 4, 5).is_err());
        assert!(pfa_amf_unknown_mean(1.0, 5, 5).is_err());
        assert!(pfa_anmf_unknown_mean(0.5, 5, 5).is_err());
        assert!(pfa_kelly_plugin(0.5, 10, 1).is_err());
        assert!(pfa_kelly_plugin(0.5, 5, 5).is_err());
        assert!(PfaLaw::new(DetectorKind::KellyGeneralized, 5, 10).is_err());
    }

    #[test]
    fn amf_known_mean_large_n_tends_to_mf() {
        let l = 1000f64.ln();
        // mpmath reference, 30 digits
        let p = pfa_amf_known_mean(l, 2000, 5).unwrap();
        assert!((p - 1.040_239_282_430_166_5e-3).abs() / p < 1e-11, "{p}");
        let p = pfa_amf_known_mean(l, 10_000, 5).unwrap();
        assert!((p - 1e-3).abs() / 1e-3 < 0.02, "{p}");
    }

    #[test]
    fn anmf_tends_to_zero_near_one() {
        // mpmath at λ = 1 − 1e-9 gives 4.199999916e-35; the f64 λ carries a
        // 1e-7 relative error in 1 − λ
        let p = pfa_anmf_known_mean(1.0 - 1e-9, 10, 5).unwrap();
        assert!((p - 4.199_999_916e-35).abs() / 4.2e-35 < 1e-6, "{p}");
    }

    #[test]
    fn kelly_plugin_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let l = i as f64 / 100.0;
            let p = pfa_kelly_plugin(l, 10, 5).unwrap();
            assert!(p < prev, "not decreasing at {l}: {p} >= {prev}");
            prev = p;
        }
    }

    #[test]
    fn inversion_examples() {
        let mf = PfaLaw::new(DetectorKind::Mf, 5, 0).unwrap();
        assert!((invert_threshold(&mf, 1e-3).unwrap() - 1000f64.ln()).abs() < 1e-14);
        let k = PfaLaw::new(DetectorKind::KellyKnownMean, 5, 10).unwrap();
        assert!((invert_threshold(&k, 0.015625).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(invert_threshold(&k, 1.0).unwrap(), 0.0);
        assert!(invert_threshold(&k, 1.5).is_err());
        assert!(invert_threshold(&k, 0.0).is_err());
    }

    #[test]
    fn eta_examples() {
        use ThresholdScale::*;
        assert_eq!(eta_lambda_transform(DetectorKind::KellyPlugin, 0.0, LambdaToEta, 10, 5).unwrap(), 1.0);
        let eta = eta_lambda_transform(DetectorKind::KellyKnownMean, 0.5, LambdaToEta, 10, 5).unwrap();
        assert!((eta - 2048.0).abs() < 1e-9);
        let eta = eta_lambda_transform(DetectorKind::Anmf, 0.5, LambdaToEta, 10, 5).unwrap();
        assert!((eta - 32.0).abs() < 1e-12);
        let l = eta_lambda_transform(DetectorKind::KellyGeneralized, 4.0, EtaToLambda, 10, 5).unwrap();
        assert!((l - 0.75).abs() < 1e-15);
        assert!(eta_lambda_transform(DetectorKind::Amf, 0.5, LambdaToEta, 10, 5).is_err());
        assert!(eta_lambda_transform(DetectorKind::Anmf, 0.5, EtaToLambda, 10, 5).is_err());
    }
}
