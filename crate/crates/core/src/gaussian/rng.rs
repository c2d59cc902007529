//! Reproducible random streams and complex normal sampling.
//!
//! Each [`RngStream`] is a ChaCha8 generator keyed by the master seed
//! (expanded to 256 bits with `SeedableRng::seed_from_u64`) and positioned on
//! the 64-bit ChaCha stream selected by `stream_id`. ChaCha is counter based,
//! so streams with distinct ids never overlap and any worker can reproduce
//! any stream without coordination.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::linalg::{CholeskyFactor, ComplexVector};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        RngStream { master_seed, stream_id, inner }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Circular complex normal with unit variance: real and imaginary parts
    /// are independent `N(0, 1/2)`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Reusable sampler for `CN(μ, L Lᴴ)` writing into caller-provided buffers.
#[derive(Clone, Debug)]
pub struct CnSampler {
    mean: Vec<Complex64>,
    chol: CholeskyFactor,
    white: Vec<Complex64>,
}

impl CnSampler {
    pub fn new(mean: &ComplexVector, chol: &CholeskyFactor) -> Result<Self> {
        Error::check_dim(chol.dim(), mean.dim())?;
        Ok(CnSampler {
            mean: mean.as_slice().to_vec(),
            chol: chol.clone(),
            white: vec![Complex64::new(0.0, 0.0); chol.dim()],
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Draw one vector `μ + L w` into `out`.
    pub fn draw_into(&mut self, rng: &mut RngStream, out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), self.mean.len());
        for w in self.white.iter_mut() {
            *w = rng.complex_normal();
        }
        out.copy_from_slice(&self.mean);
        self.chol.mul_add(&self.white, out);
    }
}

/// Draw `count` independent `CN(μ, Σ)` vectors where `Σ = L Lᴴ`.
pub fn sample_cn(
    mu: &ComplexVector,
    chol: &CholeskyFactor,
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<ComplexVector>> {
    let mut sampler = CnSampler::new(mu, chol)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); mu.dim()];
    Ok((0..count)
        .map(|_| {
            sampler.draw_into(rng, &mut buf);
            ComplexVector::from_vec_unchecked(buf.clone())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::linalg::{build_toeplitz_covariance, HermitianPDMatrix};

    #[test]
    fn empty_draw() {
        let s = HermitianPDMatrix::identity(3).unwrap();
        let mu = ComplexVector::zeros(3).unwrap();
        let out = sample_cn(&mu, s.cholesky(), 0, &mut RngStream::new(1, 0)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn dimension_mismatch() {
        let s = HermitianPDMatrix::identity(3).unwrap();
        let mu = ComplexVector::zeros(2).unwrap();
        assert!(sample_cn(&mu, s.cholesky(), 1, &mut RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn reproducible_and_stream_separated() {
        let s = build_toeplitz_covariance(0.4, 4).unwrap();
        let mu = ComplexVector::constant(4, Complex64::new(3.0, 4.0)).unwrap();
        let a = sample_cn(&mu, s.cholesky(), 50, &mut RngStream::new(9, 3)).unwrap();
        let b = sample_cn(&mu, s.cholesky(), 50, &mut RngStream::new(9, 3)).unwrap();
        let c = sample_cn(&mu, s.cholesky(), 50, &mut RngStream::new(9, 4)).unwrap();
        let d = sample_cn(&mu, s.cholesky(), 50, &mut RngStream::new(10, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn unit_complex_normal_moments() {
        let mut rng = RngStream::new(123, 0);
        let n = 200_000;
        let (mut re2, mut im2, mut cross) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = rng.complex_normal();
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            cross += z.re * z.im;
        }
        let n = n as f64;
        // var of z.re^2 mean is 2·(1/2)^2/n
        let se = (0.5 / n).sqrt();
        assert!((re2 / n - 0.5).abs() < 5.0 * se);
        assert!((im2 / n - 0.5).abs() < 5.0 * se);
        assert!((cross / n).abs() < 5.0 * (0.25 / n).sqrt());
    }
}
