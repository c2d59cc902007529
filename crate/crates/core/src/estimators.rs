//! Sample mean and sample covariance estimators of the background.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{ComplexVector, HermitianPDMatrix};

/// Divisor applied to the scatter matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Maximum likelihood: divide by `N`.
    #[default]
    ScmMl,
    /// Divide by `N - 1`.
    ScmUnbiased,
    /// Divide by `N + 1`.
    ScmNPlus1,
}

impl EstimatorKind {
    pub fn divisor(self, n: usize) -> f64 {
        match self {
            EstimatorKind::ScmMl => n as f64,
            EstimatorKind::ScmUnbiased => n as f64 - 1.0,
            EstimatorKind::ScmNPlus1 => n as f64 + 1.0,
        }
    }
}

/// Secondary (signal-free) data plus one cell under test.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    secondary: Vec<ComplexVector>,
    test: ComplexVector,
}

impl SampleSet {
    pub fn new(secondary: Vec<ComplexVector>, test: ComplexVector) -> Result<Self> {
        if secondary.is_empty() {
            return Err(Error::invalid("sample set needs at least one secondary vector"));
        }
        let m = test.dim();
        for v in &secondary {
            Error::check_dim(m, v.dim())?;
        }
        Ok(SampleSet { secondary, test })
    }

    pub fn dim(&self) -> usize {
        self.test.dim()
    }

    pub fn len(&self) -> usize {
        self.secondary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secondary.is_empty()
    }

    pub fn secondary(&self) -> &[ComplexVector] {
        &self.secondary
    }

    pub fn test(&self) -> &ComplexVector {
        &self.test
    }

    /// True when the unknown-mean estimators have full rank almost surely.
    pub fn supports_unknown_mean(&self) -> bool {
        self.len() > self.dim()
    }
}

/// Sample mean vector `(1/N) Σ xᵢ`.
pub fn smv(secondary: &[ComplexVector]) -> Result<ComplexVector> {
    let first = secondary.first().ok_or_else(|| Error::invalid("sample mean of an empty set"))?;
    let m = first.dim();
    let mut acc = vec![Complex64::new(0.0, 0.0); m];
    for v in secondary {
        Error::check_dim(m, v.dim())?;
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    let inv = 1.0 / secondary.len() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    ComplexVector::new(acc)
}

/// Scatter matrix `Σ (xᵢ - c)(xᵢ - c)ᴴ` as a dense row-major array, made
/// exactly Hermitian by averaging with its conjugate transpose.
pub fn scatter(secondary: &[ComplexVector], center: &ComplexVector) -> Result<Vec<Complex64>> {
    let m = center.dim();
    let mut flat = Vec::with_capacity(secondary.len() * m);
    for v in secondary {
        Error::check_dim(m, v.dim())?;
        flat.extend_from_slice(v.as_slice());
    }
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    let mut diff = vec![Complex64::new(0.0, 0.0); m];
    scatter_flat(&flat, m, center.as_slice(), &mut diff, &mut out);
    Ok(out)
}

/// Accumulate the scatter of row-stacked samples about `center` into `out`.
pub(crate) fn scatter_flat(
    samples: &[Complex64],
    m: usize,
    center: &[Complex64],
    diff: &mut [Complex64],
    out: &mut [Complex64],
) {
    out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    for x in samples.chunks_exact(m) {
        for ((d, a), c) in diff.iter_mut().zip(x).zip(center) {
            *d = a - c;
        }
        for i in 0..m {
            let di = diff[i];
            let row = &mut out[i * m..(i + 1) * m];
            for (o, dj) in row.iter_mut().zip(diff.iter()) {
                *o += di * dj.conj();
            }
        }
    }
    hermitianize(out, m);
}

fn hermitianize(a: &mut [Complex64], m: usize) {
    for i in 0..m {
        a[i * m + i].im = 0.0;
        for j in (i + 1)..m {
            let avg = (a[i * m + j] + a[j * m + i].conj()) * 0.5;
            a[i * m + j] = avg;
            a[j * m + i] = avg.conj();
        }
    }
}

/// Sample covariance `(1/d) Σ (xᵢ - c)(xᵢ - c)ᴴ` with `d` chosen by `kind`.
///
/// A rank-deficient estimate is reported as [`Error::SingularEstimate`].
pub fn scm(secondary: &[ComplexVector], center: &ComplexVector, kind: EstimatorKind) -> Result<HermitianPDMatrix> {
    let n = secondary.len();
    if n == 0 {
        return Err(Error::invalid("sample covariance of an empty set"));
    }
    let m = center.dim();
    let d = kind.divisor(n);
    if d <= 0.0 {
        return Err(Error::invalid(format!("estimator {kind:?} undefined for N = {n}")));
    }
    let mut w = scatter(secondary, center)?;
    let inv = 1.0 / d;
    w.iter_mut().for_each(|z| *z *= inv);
    HermitianPDMatrix::new(m, w).map_err(|e| singular(e, n, m))
}

pub(crate) fn singular(e: Error, samples: usize, dim: usize) -> Error {
    match e {
        Error::Decomposition { pivot, .. } => Error::SingularEstimate { samples, dim, pivot },
        other => other,
    }
}
