//! Complex vectors and Hermitian positive-definite matrices.
//!
//! Every use of an inverse covariance goes through a Cholesky factor:
//! `Σ⁻¹v` is two triangular solves, and quadratic forms `aᴴΣ⁻¹b` are inner
//! products of whitened vectors `L⁻¹a`, `L⁻¹b`.

use std::fmt;
use std::ops::{Add, Index, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Tolerance used when a quadratic form `xᴴΣ⁻¹x` is required to be real.
pub const REAL_FORM_TOL: f64 = 1e-12;

/// A finite, non-empty complex vector.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("complex vector must have at least one entry"));
        }
        if let Some(i) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid(format!("entry {i} of complex vector is not finite")));
        }
        Ok(ComplexVector(entries))
    }

    /// Vector with every entry equal to `value`.
    pub fn constant(dim: usize, value: Complex64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::constant(dim, Complex64::new(0.0, 0.0))
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Canonical basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    /// All-ones vector scaled to unit Euclidean norm.
    pub fn unit_ones(dim: usize) -> Result<Self> {
        let s = 1.0 / (dim as f64).sqrt();
        Self::constant(dim, Complex64::new(s, 0.0))
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<Complex64>) -> Self {
        debug_assert!(!entries.is_empty());
        ComplexVector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    /// Hermitian inner product `selfᴴ other`.
    pub fn dot(&self, other: &ComplexVector) -> Result<Complex64> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(dotc(&self.0, &other.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, c: Complex64) -> ComplexVector {
        ComplexVector(self.0.iter().map(|z| z * c).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<Complex64>> for ComplexVector {
    type Error = Error;
    fn try_from(v: Vec<Complex64>) -> Result<Self> {
        ComplexVector::new(v)
    }
}

impl From<ComplexVector> for Vec<Complex64> {
    fn from(v: ComplexVector) -> Self {
        v.0
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in vector subtraction");
        ComplexVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for &ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in vector addition");
        ComplexVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

/// `aᴴ b` over raw slices of equal length.
#[inline]
pub(crate) fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Lower-triangular Cholesky factor `L` with `L Lᴴ = A`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<Complex64>,
}

impl CholeskyFactor {
    /// Factor a dense row-major Hermitian matrix.
    ///
    /// A pivot is rejected when it is not finite or not larger than
    /// `dim·ε` times the original diagonal entry, which catches rank-deficient
    /// sample covariances whose pivots are pure rounding noise.
    pub fn factor(dim: usize, a: &[Complex64]) -> Result<Self> {
        if a.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: a.len() });
        }
        let mut lower = vec![Complex64::new(0.0, 0.0); dim * dim];
        let floor = dim.max(1) as f64 * f64::EPSILON;
        for j in 0..dim {
            let row_j = j * dim;
            let mut d = a[row_j + j].re;
            for k in 0..j {
                d -= lower[row_j + k].norm_sqr();
            }
            if !d.is_finite() || d <= floor * a[row_j + j].re.abs() || d <= 0.0 {
                return Err(Error::Decomposition { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            lower[row_j + j] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..dim {
                let row_i = i * dim;
                let mut s = a[row_i + j];
                for k in 0..j {
                    s -= lower[row_i + k] * lower[row_j + k].conj();
                }
                lower[row_i + j] = s / ljj;
            }
        }
        Ok(CholeskyFactor { dim, lower })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `L[i][j]`.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.lower[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.lower
    }

    /// `L Lᴴ` as a dense row-major matrix.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let kmax = i.min(j);
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..=kmax {
                    s += self.lower[i * n + k] * self.lower[j * n + k].conj();
                }
                out[i * n + j] = s;
            }
        }
        out
    }

    /// Solve `L y = b` in place.
    pub(crate) fn forward_in_place(&self, b: &mut [Complex64]) {
        let n = self.dim;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let mut s = b[i];
            for (l, y) in row.iter().zip(b.iter()) {
                s -= l * y;
            }
            b[i] = s / self.lower[i * n + i].re;
        }
    }

    /// Solve `Lᴴ x = y` in place.
    pub(crate) fn backward_in_place(&self, y: &mut [Complex64]) {
        let n = self.dim;
        debug_assert_eq!(y.len(), n);
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i].conj() * y[k];
            }
            y[i] = s / self.lower[i * n + i].re;
        }
    }

    /// `y += L w`.
    pub(crate) fn mul_add(&self, w: &[Complex64], y: &mut [Complex64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.lower[i * n..=i * n + i];
            y[i] += row.iter().zip(w).map(|(l, x)| l * x).sum::<Complex64>();
        }
    }

    /// Whitened copy `L⁻¹ v`.
    pub fn whiten(&self, v: &ComplexVector) -> Result<ComplexVector> {
        Error::check_dim(self.dim, v.dim())?;
        let mut out = v.as_slice().to_vec();
        self.forward_in_place(&mut out);
        Ok(ComplexVector::from_vec_unchecked(out))
    }

    /// `(L Lᴴ)⁻¹ v` via forward and back substitution.
    pub fn solve(&self, v: &ComplexVector) -> Result<ComplexVector> {
        Error::check_dim(self.dim, v.dim())?;
        let mut out = v.as_slice().to_vec();
        self.forward_in_place(&mut out);
        self.backward_in_place(&mut out);
        Ok(ComplexVector::from_vec_unchecked(out))
    }
}

/// Hermitian positive-definite matrix together with its Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianPDMatrix {
    dim: usize,
    entries: Vec<Complex64>,
    chol: CholeskyFactor,
}

impl HermitianPDMatrix {
    /// Validate and factor a row-major matrix. Inputs that are not Hermitian
    /// within [`HERMITIAN_TOL`] are rejected rather than symmetrized.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: entries.len() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let mut asym = 0.0_f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                asym = asym.max(d);
            }
        }
        if scale > 0.0 && asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { asymmetry: asym / scale });
        }
        let chol = CholeskyFactor::factor(dim, &entries)?;
        Ok(HermitianPDMatrix { dim, entries, chol })
    }

    /// Build from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut e = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            e[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self::new(dim, e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn cholesky(&self) -> &CholeskyFactor {
        &self.chol
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        Error::check_dim(self.dim, v.dim())?;
        let n = self.dim;
        let out = (0..n)
            .map(|i| self.entries[i * n..(i + 1) * n].iter().zip(v.iter()).map(|(a, x)| a * x).sum())
            .collect();
        Ok(ComplexVector::from_vec_unchecked(out))
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Covariance with entries `rho^|i-j|`.
pub fn build_toeplitz_covariance(rho: f64, dim: usize) -> Result<HermitianPDMatrix> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid(format!("Toeplitz correlation must satisfy |rho| < 1, got {rho}")));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut e = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            e.push(Complex64::new(rho.powi(i.abs_diff(j) as i32), 0.0));
        }
    }
    HermitianPDMatrix::new(dim, e)
}

pub fn cholesky(sigma: &HermitianPDMatrix) -> CholeskyFactor {
    sigma.cholesky().clone()
}

/// `Σ⁻¹ v` without forming the inverse.
pub fn solve_pd(sigma: &HermitianPDMatrix, v: &ComplexVector) -> Result<ComplexVector> {
    sigma.cholesky().solve(v)
}

/// `aᴴ Σ⁻¹ b`. When `a == b` the result is real and nonnegative.
pub fn quad_form(a: &ComplexVector, sigma: &HermitianPDMatrix, b: &ComplexVector) -> Result<Complex64> {
    Error::check_dim(sigma.dim(), a.dim())?;
    Error::check_dim(sigma.dim(), b.dim())?;
    let wa = sigma.cholesky().whiten(a)?;
    if a == b {
        return Ok(Complex64::new(wa.norm_sqr(), 0.0));
    }
    let wb = sigma.cholesky().whiten(b)?;
    Ok(dotc(wa.as_slice(), wb.as_slice()))
}

/// `xᴴ Σ⁻¹ x` as a real number.
pub fn quad_norm(x: &ComplexVector, sigma: &HermitianPDMatrix) -> Result<f64> {
    let q = quad_form(x, sigma, x)?;
    real_part_checked(q)
}

/// Drop a negligible imaginary part, or fail if it is not negligible.
pub fn real_part_checked(z: Complex64) -> Result<f64> {
    if z.im.abs() <= REAL_FORM_TOL * z.re.abs() {
        Ok(z.re)
    } else {
        Err(Error::domain(format!("expected a real quadratic form, got {z}")))
    }
}
