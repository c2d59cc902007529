//! Detection statistics.
//!
//! Every statistic is a function of three whitened projections computed with
//! the Cholesky factor of some matrix `M` (the true `Σ`, a scatter matrix
//! `Ŵ = N·Σ̂`, or the generalized-Kelly scatter `S₀`):
//!
//! * `cross = pᴴ M⁻¹ r`
//! * `steer = pᴴ M⁻¹ p`
//! * `test  = rᴴ M⁻¹ r`
//!
//! where `r` is the test vector minus the relevant mean. Writing the
//! adaptive statistics in terms of the scatter matrix rather than the SCM
//! keeps the `N`-dependent constants next to the estimator that produced them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{scatter_flat, singular};
use crate::gaussian::{dotc, CholeskyFactor, ComplexVector, HermitianPDMatrix};

/// Rounding slack tolerated above the upper end of a bounded statistic.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// Matched filter, mean and covariance known.
    Mf,
    /// Adaptive matched filter, known mean.
    AmfKnownMean,
    /// Adaptive matched filter, mean and covariance estimated.
    Amf,
    /// Normalized matched filter, mean and covariance known.
    Nmf,
    AnmfKnownMean,
    Anmf,
    KellyKnownMean,
    /// Kelly statistic with the sample mean of the secondary data plugged in.
    KellyPlugin,
    /// Kelly GLRT with the mean estimated jointly from secondary and test data.
    KellyGeneralized,
}

/// Which background parameters a detector consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParameterSource {
    /// True mean and covariance.
    Known,
    /// True mean, covariance estimated from secondary data.
    KnownMean,
    /// Both estimated from secondary data only.
    Estimated,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 9] = [
        DetectorKind::Mf,
        DetectorKind::AmfKnownMean,
        DetectorKind::Amf,
        DetectorKind::Nmf,
        DetectorKind::AnmfKnownMean,
        DetectorKind::Anmf,
        DetectorKind::KellyKnownMean,
        DetectorKind::KellyPlugin,
        DetectorKind::KellyGeneralized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Mf => "mf",
            DetectorKind::AmfKnownMean => "amf-known",
            DetectorKind::Amf => "amf",
            DetectorKind::Nmf => "nmf",
            DetectorKind::AnmfKnownMean => "anmf-known",
            DetectorKind::Anmf => "anmf",
            DetectorKind::KellyKnownMean => "kelly-known",
            DetectorKind::KellyPlugin => "kelly-plugin",
            DetectorKind::KellyGeneralized => "kelly-generalized",
        }
    }

    pub fn parameters(self) -> ParameterSource {
        use DetectorKind::*;
        match self {
            Mf | Nmf => ParameterSource::Known,
            AmfKnownMean | AnmfKnownMean | KellyKnownMean => ParameterSource::KnownMean,
            Amf | Anmf | KellyPlugin | KellyGeneralized => ParameterSource::Estimated,
        }
    }

    /// Smallest number of secondary vectors for which the estimate is a.s.
    /// nonsingular. Zero for detectors that use no secondary data.
    pub fn min_secondary(self, m: usize) -> usize {
        match self.parameters() {
            ParameterSource::Known => 0,
            ParameterSource::KnownMean => m,
            ParameterSource::Estimated => m + 1,
        }
    }

    /// Supremum of the statistic: `+∞`, `1`, or `(N+1)/N` for the
    /// generalized Kelly test.
    pub fn domain_max(self, n: usize) -> f64 {
        use DetectorKind::*;
        match self {
            Mf | AmfKnownMean | Amf => f64::INFINITY,
            Nmf | AnmfKnownMean | Anmf | KellyKnownMean | KellyPlugin => 1.0,
            KellyGeneralized => (n as f64 + 1.0) / n as f64,
        }
    }

    pub fn is_bounded(self) -> bool {
        !matches!(self, DetectorKind::Mf | DetectorKind::AmfKnownMean | DetectorKind::Amf)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let alias = match norm.as_str() {
            "amf-known-mean" => "amf-known",
            "anmf-known-mean" => "anmf-known",
            "kelly-known-mean" | "kelly" => "kelly-known",
            "kelly-plug-in" => "kelly-plugin",
            "kelly-gen" | "generalized-kelly" => "kelly-generalized",
            other => other,
        };
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| Error::invalid(format!("unknown detector '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectorResult {
    pub statistic: f64,
    pub kind: DetectorKind,
    pub domain_max: f64,
}

/// Whitened projections of the steering and residual vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projections {
    pub cross: Complex64,
    pub steer: f64,
    pub test: f64,
}

impl Projections {
    /// Compute with caller-owned scratch buffers of length `m`.
    pub(crate) fn compute(
        chol: &CholeskyFactor,
        steering: &[Complex64],
        residual: &[Complex64],
        pw: &mut [Complex64],
        rw: &mut [Complex64],
    ) -> Self {
        pw.copy_from_slice(steering);
        chol.forward_in_place(pw);
        rw.copy_from_slice(residual);
        chol.forward_in_place(rw);
        Projections {
            cross: dotc(pw, rw),
            steer: pw.iter().map(|z| z.norm_sqr()).sum(),
            test: rw.iter().map(|z| z.norm_sqr()).sum(),
        }
    }
}

/// Evaluate the statistic of `kind` from projections taken with respect to
/// the matrix that detector whitens by: `Σ` for MF/NMF, the scatter `Ŵ` of
/// `n` secondary vectors for the adaptive tests, `S₀` for the generalized
/// Kelly test.
pub fn statistic_from_projections(kind: DetectorKind, proj: Projections, n: usize) -> Result<DetectorResult> {
    use DetectorKind::*;
    let num = proj.cross.norm_sqr();
    let nf = n as f64;
    let value = match kind {
        Mf => num / proj.steer,
        AmfKnownMean | Amf => nf * num / proj.steer,
        Nmf | AnmfKnownMean | Anmf => {
            if proj.test == 0.0 {
                return Err(Error::UndefinedStatistic(
                    "test vector equals the mean; normalized statistic is 0/0".into(),
                ));
            }
            num / (proj.steer * proj.test)
        }
        KellyKnownMean | KellyPlugin => num / (proj.steer * (1.0 + proj.test)),
        KellyGeneralized => (nf + 1.0) / nf * num / (proj.steer * (1.0 + proj.test)),
    };
    finish(kind, value, n)
}

fn finish(kind: DetectorKind, value: f64, n: usize) -> Result<DetectorResult> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidStatistic(value));
    }
    let domain_max = kind.domain_max(n);
    let statistic = if value >= domain_max {
        if value > domain_max * (1.0 + DOMAIN_SLACK) {
            return Err(Error::InvalidStatistic(value));
        }
        // rounding at the Cauchy-Schwarz equality case
        domain_max
    } else {
        value
    };
    Ok(DetectorResult { statistic, kind, domain_max })
}

/// Background parameters known to the detector in advance.
#[derive(Clone, Debug, Default)]
pub struct KnownParams {
    pub mean: Option<ComplexVector>,
    pub covariance: Option<HermitianPDMatrix>,
}

impl KnownParams {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn mean(mu: ComplexVector) -> Self {
        KnownParams { mean: Some(mu), covariance: None }
    }

    pub fn full(mu: ComplexVector, sigma: HermitianPDMatrix) -> Self {
        KnownParams { mean: Some(mu), covariance: Some(sigma) }
    }
}

/// Reusable evaluator for one detector and steering vector. Holds all scratch
/// storage so repeated evaluation (Monte-Carlo trials, image pixels) does not
/// allocate apart from the per-call Cholesky factor.
#[derive(Clone, Debug)]
pub struct DetectorEngine {
    kind: DetectorKind,
    m: usize,
    steering: Vec<Complex64>,
    mean: Option<Vec<Complex64>>,
    sigma: Option<CholeskyFactor>,
    center: Vec<Complex64>,
    residual: Vec<Complex64>,
    diff: Vec<Complex64>,
    scatter: Vec<Complex64>,
    pw: Vec<Complex64>,
    rw: Vec<Complex64>,
}

impl DetectorEngine {
    pub fn new(kind: DetectorKind, steering: &ComplexVector, known: &KnownParams) -> Result<Self> {
        let m = steering.dim();
        if steering.is_zero() {
            return Err(Error::invalid("steering vector must be nonzero"));
        }
        let needs_mean = kind.parameters() != ParameterSource::Estimated;
        let needs_cov = kind.parameters() == ParameterSource::Known;
        let mean = if needs_mean {
            let mu = known
                .mean
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("detector {kind} requires the background mean")))?;
            Error::check_dim(m, mu.dim())?;
            Some(mu.as_slice().to_vec())
        } else {
            None
        };
        let sigma = if needs_cov {
            let s = known
                .covariance
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("detector {kind} requires the background covariance")))?;
            Error::check_dim(m, s.dim())?;
            Some(s.cholesky().clone())
        } else {
            None
        };
        let z = Complex64::new(0.0, 0.0);
        Ok(DetectorEngine {
            kind,
            m,
            steering: steering.as_slice().to_vec(),
            mean,
            sigma,
            center: vec![z; m],
            residual: vec![z; m],
            diff: vec![z; m],
            scatter: vec![z; m * m],
            pw: vec![z; m],
            rw: vec![z; m],
        })
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Evaluate on row-stacked secondary data (`N·m` values) and a test vector.
    pub fn evaluate(&mut self, secondary: &[Complex64], test: &[Complex64]) -> Result<DetectorResult> {
        let m = self.m;
        Error::check_dim(m, test.len())?;
        if secondary.len() % m != 0 {
            return Err(Error::invalid("secondary data length is not a multiple of the dimension"));
        }
        let n = secondary.len() / m;
        let needed = self.kind.min_secondary(m);
        if n < needed {
            return Err(Error::invalid(format!(
                "detector {} needs at least {needed} secondary vectors in dimension {m}, got {n}",
                self.kind
            )));
        }

        match self.kind.parameters() {
            ParameterSource::Known => {
                let mean = self.mean.as_ref().expect("mean checked at construction");
                for ((r, x), mu) in self.residual.iter_mut().zip(test).zip(mean) {
                    *r = x - mu;
                }
                let chol = self.sigma.as_ref().expect("covariance checked at construction");
                let proj = Projections::compute(chol, &self.steering, &self.residual, &mut self.pw, &mut self.rw);
                statistic_from_projections(self.kind, proj, n)
            }
            ParameterSource::KnownMean => {
                let mean = self.mean.as_ref().expect("mean checked at construction");
                self.center.copy_from_slice(mean);
                self.finish_adaptive(secondary, test, n)
            }
            ParameterSource::Estimated => {
                self.center.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                for x in secondary.chunks_exact(m) {
                    for (c, v) in self.center.iter_mut().zip(x) {
                        *c += v;
                    }
                }
                let denom = if self.kind == DetectorKind::KellyGeneralized {
                    for (c, v) in self.center.iter_mut().zip(test) {
                        *c += v;
                    }
                    n as f64 + 1.0
                } else {
                    n as f64
                };
                let inv = 1.0 / denom;
                self.center.iter_mut().for_each(|c| *c *= inv);
                self.finish_adaptive(secondary, test, n)
            }
        }
    }

    fn finish_adaptive(&mut self, secondary: &[Complex64], test: &[Complex64], n: usize) -> Result<DetectorResult> {
        let m = self.m;
        scatter_flat(secondary, m, &self.center, &mut self.diff, &mut self.scatter);
        let chol = CholeskyFactor::factor(m, &self.scatter).map_err(|e| singular(e, n, m))?;
        for ((r, x), c) in self.residual.iter_mut().zip(test).zip(&self.center) {
            *r = x - c;
        }
        if self.kind == DetectorKind::Amf || self.kind == DetectorKind::AmfKnownMean {
            if self.residual.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                return finish(self.kind, 0.0, n);
            }
        }
        let proj = Projections::compute(&chol, &self.steering, &self.residual, &mut self.pw, &mut self.rw);
        statistic_from_projections(self.kind, proj, n)
    }

    /// Convenience wrapper over [`DetectorEngine::evaluate`] for vector inputs.
    pub fn evaluate_vectors(&mut self, secondary: &[ComplexVector], test: &ComplexVector) -> Result<DetectorResult> {
        let mut flat = Vec::with_capacity(secondary.len() * self.m);
        for v in secondary {
            Error::check_dim(self.m, v.dim())?;
            flat.extend_from_slice(v.as_slice());
        }
        self.evaluate(&flat, test.as_slice())
    }
}

/// How the background mean is obtained by the adaptive detectors.
#[derive(Clone, Debug, PartialEq)]
pub enum MeanMode {
    Known(ComplexVector),
    Estimated,
}

fn adaptive(
    base_known: DetectorKind,
    base_est: DetectorKind,
    x: &ComplexVector,
    p: &ComplexVector,
    secondary: &[ComplexVector],
    mean_mode: &MeanMode,
) -> Result<DetectorResult> {
    let (kind, known) = match mean_mode {
        MeanMode::Known(mu) => (base_known, KnownParams::mean(mu.clone())),
        MeanMode::Estimated => (base_est, KnownParams::none()),
    };
    DetectorEngine::new(kind, p, &known)?.evaluate_vectors(secondary, x)
}

/// `|pᴴΣ⁻¹(x−μ)|² / (pᴴΣ⁻¹p)`.
pub fn mf(x: &ComplexVector, p: &ComplexVector, mu: &ComplexVector, sigma: &HermitianPDMatrix) -> Result<DetectorResult> {
    DetectorEngine::new(DetectorKind::Mf, p, &KnownParams::full(mu.clone(), sigma.clone()))?.evaluate(&[], x.as_slice())
}

/// Matched filter with the ML sample covariance (and the sample mean when
/// `mean_mode` is [`MeanMode::Estimated`]) plugged in.
pub fn amf(x: &ComplexVector, p: &ComplexVector, secondary: &[ComplexVector], mean_mode: &MeanMode) -> Result<DetectorResult> {
    adaptive(DetectorKind::AmfKnownMean, DetectorKind::Amf, x, p, secondary, mean_mode)
}

/// Squared cosine between `p` and `x − μ` in the `Σ⁻¹` metric.
pub fn nmf(x: &ComplexVector, p: &ComplexVector, mu: &ComplexVector, sigma: &HermitianPDMatrix) -> Result<DetectorResult> {
    DetectorEngine::new(DetectorKind::Nmf, p, &KnownParams::full(mu.clone(), sigma.clone()))?.evaluate(&[], x.as_slice())
}

pub fn anmf(x: &ComplexVector, p: &ComplexVector, secondary: &[ComplexVector], mean_mode: &MeanMode) -> Result<DetectorResult> {
    adaptive(DetectorKind::AnmfKnownMean, DetectorKind::Anmf, x, p, secondary, mean_mode)
}

/// Kelly's GLRT with known mean and the SCM about that mean.
pub fn kelly_known_mean(
    x: &ComplexVector,
    p: &ComplexVector,
    mu: &ComplexVector,
    secondary: &[ComplexVector],
) -> Result<DetectorResult> {
    DetectorEngine::new(DetectorKind::KellyKnownMean, p, &KnownParams::mean(mu.clone()))?.evaluate_vectors(secondary, x)
}

pub fn kelly_plugin(x: &ComplexVector, p: &ComplexVector, secondary: &[ComplexVector]) -> Result<DetectorResult> {
    DetectorEngine::new(DetectorKind::KellyPlugin, p, &KnownParams::none())?.evaluate_vectors(secondary, x)
}

/// Generalized Kelly test: mean `μ₀` estimated from secondary and test data
/// together, scatter `S₀` of the secondary data about `μ₀`, scaled by
/// `(N+1)/N`.
pub fn kelly_generalized(x: &ComplexVector, p: &ComplexVector, secondary: &[ComplexVector]) -> Result<DetectorResult> {
    DetectorEngine::new(DetectorKind::KellyGeneralized, p, &KnownParams::none())?.evaluate_vectors(secondary, x)
}

/// Evaluate any detector on a sample set.
pub fn evaluate(kind: DetectorKind, samples: &crate::estimators::SampleSet, p: &ComplexVector, known: &KnownParams) -> Result<DetectorResult> {
    DetectorEngine::new(kind, p, known)?.evaluate_vectors(samples.secondary(), samples.test())
}

/// Statistic from precomputed estimates: `center` is the mean used to form
/// the residual and `scatter` the unnormalized scatter matrix of `n`
/// secondary vectors (`Ŵ`, or `S₀` for the generalized Kelly test).
pub fn from_estimates(
    kind: DetectorKind,
    x: &ComplexVector,
    p: &ComplexVector,
    center: &ComplexVector,
    scatter: &HermitianPDMatrix,
    n: usize,
) -> Result<DetectorResult> {
    if kind.parameters() == ParameterSource::Known {
        return Err(Error::invalid(format!("{kind} does not use estimates; call it with the true parameters")));
    }
    let m = p.dim();
    Error::check_dim(m, x.dim())?;
    Error::check_dim(m, center.dim())?;
    Error::check_dim(m, scatter.dim())?;
    let residual = x - center;
    if matches!(kind, DetectorKind::Amf | DetectorKind::AmfKnownMean) && residual.is_zero() {
        return finish(kind, 0.0, n);
    }
    let mut pw = vec![Complex64::new(0.0, 0.0); m];
    let mut rw = pw.clone();
    let proj = Projections::compute(scatter.cholesky(), p.as_slice(), residual.as_slice(), &mut pw, &mut rw);
    statistic_from_projections(kind, proj, n)
}

/// Real amplitude estimate `Re{pᴴΣ⁻¹(x−μ)} / (pᴴΣ⁻¹p)`.
pub fn estimate_amplitude(x: &ComplexVector, p: &ComplexVector, mu: &ComplexVector, sigma: &HermitianPDMatrix) -> Result<f64> {
    let m = sigma.dim();
    Error::check_dim(m, x.dim())?;
    Error::check_dim(m, p.dim())?;
    Error::check_dim(m, mu.dim())?;
    if p.is_zero() {
        return Err(Error::invalid("steering vector must be nonzero"));
    }
    let residual = x - mu;
    let mut pw = vec![Complex64::new(0.0, 0.0); m];
    let mut rw = pw.clone();
    let proj = Projections::compute(sigma.cholesky(), p.as_slice(), residual.as_slice(), &mut pw, &mut rw);
    Ok(proj.cross.re / proj.steer)
}
