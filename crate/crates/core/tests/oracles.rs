//! Independent checks: explicit-inverse statistics, sampling moments and
//! Monte-Carlo false-alarm rates against the closed-form laws.

use cfar_core::detectors::{self, DetectorKind, KnownParams, MeanMode};
use cfar_core::estimators::{scm, smv, EstimatorKind};
use cfar_core::gaussian::{build_toeplitz_covariance, sample_cn, ComplexVector, HermitianPDMatrix, RngStream};
use cfar_core::montecarlo::{calibrate_threshold_empirical, simulate_fa_curve, ExperimentConfig};
use cfar_core::pfa::PfaLaw;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn mat(s: &HermitianPDMatrix) -> DMatrix<C> {
    let m = s.dim();
    DMatrix::from_fn(m, m, |i, j| s.get(i, j))
}

fn vec_(v: &ComplexVector) -> DVector<C> {
    DVector::from_iterator(v.dim(), v.iter().copied())
}

fn dot(a: &DVector<C>, b: &DVector<C>) -> C {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn mean_of(xs: &[ComplexVector]) -> DVector<C> {
    let m = xs[0].dim();
    let mut acc = DVector::from_element(m, c(0.0, 0.0));
    for x in xs {
        acc += vec_(x);
    }
    acc / c(xs.len() as f64, 0.0)
}

fn scatter_about(xs: &[ComplexVector], centre: &DVector<C>) -> DMatrix<C> {
    let m = centre.len();
    let mut s = DMatrix::from_element(m, m, c(0.0, 0.0));
    for x in xs {
        let d = vec_(x) - centre;
        s += &d * d.adjoint();
    }
    s
}

struct Forms {
    cross2: f64,
    steer: f64,
    test: f64,
}

fn forms(inv: &DMatrix<C>, p: &DVector<C>, r: &DVector<C>) -> Forms {
    Forms {
        cross2: dot(p, &(inv * r)).norm_sqr(),
        steer: dot(p, &(inv * p)).re,
        test: dot(r, &(inv * r)).re,
    }
}

fn draw(m: usize, n: usize, rho: f64, mu: C, seed: u64) -> (Vec<ComplexVector>, ComplexVector, HermitianPDMatrix, ComplexVector) {
    let sigma = build_toeplitz_covariance(rho, m).unwrap();
    let mean = ComplexVector::constant(m, mu).unwrap();
    let mut rng = RngStream::new(seed, 0);
    let mut all = sample_cn(&mean, sigma.cholesky(), n + 1, &mut rng).unwrap();
    let x = all.pop().unwrap();
    (all, x, sigma, mean)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn statistics_match_explicit_inverse() {
    for seed in 0..40 {
        let m = 2 + (seed as usize % 6);
        let n = m + 1 + (seed as usize % 9);
        let (sec, x, sigma, mu) = draw(m, n, 0.7, c(1.0, -2.0), seed);
        let p = ComplexVector::new((0..m).map(|k| c(1.0, 0.3 * k as f64)).collect()).unwrap();
        let (pv, xv, muv) = (vec_(&p), vec_(&x), vec_(&mu));
        let sig_inv = mat(&sigma).try_inverse().unwrap();
        let nf = n as f64;

        let f = forms(&sig_inv, &pv, &(&xv - &muv));
        let got = detectors::mf(&x, &p, &mu, &sigma).unwrap().statistic;
        assert!(rel(got, f.cross2 / f.steer) < 1e-10);
        let got = detectors::nmf(&x, &p, &mu, &sigma).unwrap().statistic;
        assert!(rel(got, f.cross2 / (f.steer * f.test)) < 1e-10);

        // estimated mean: SCM = scatter / N about the sample mean
        let smv_ = mean_of(&sec);
        let s_inv = (scatter_about(&sec, &smv_) / c(nf, 0.0)).try_inverse().unwrap();
        let f = forms(&s_inv, &pv, &(&xv - &smv_));
        let got = detectors::amf(&x, &p, &sec, &MeanMode::Estimated).unwrap().statistic;
        assert!(rel(got, f.cross2 / f.steer) < 1e-10, "amf seed {seed}");
        let got = detectors::anmf(&x, &p, &sec, &MeanMode::Estimated).unwrap().statistic;
        assert!(rel(got, f.cross2 / (f.steer * f.test)) < 1e-10, "anmf seed {seed}");
        // Kelly uses W = N·SCM
        let w = forms(&(s_inv.clone() / c(nf, 0.0)), &pv, &(&xv - &smv_));
        let got = detectors::kelly_plugin(&x, &p, &sec).unwrap().statistic;
        assert!(rel(got, w.cross2 / (w.steer * (1.0 + w.test))) < 1e-10, "kelly seed {seed}");

        // known mean
        let sk_inv = (scatter_about(&sec, &muv) / c(nf, 0.0)).try_inverse().unwrap();
        let f = forms(&sk_inv, &pv, &(&xv - &muv));
        let got = detectors::amf(&x, &p, &sec, &MeanMode::Known(mu.clone())).unwrap().statistic;
        assert!(rel(got, f.cross2 / f.steer) < 1e-10);
        let got = detectors::anmf(&x, &p, &sec, &MeanMode::Known(mu.clone())).unwrap().statistic;
        assert!(rel(got, f.cross2 / (f.steer * f.test)) < 1e-10);
        let w = forms(&(sk_inv / c(nf, 0.0)), &pv, &(&xv - &muv));
        let got = detectors::kelly_known_mean(&x, &p, &mu, &sec).unwrap().statistic;
        assert!(rel(got, w.cross2 / (w.steer * (1.0 + w.test))) < 1e-10);

        // joint mean of secondary and test data
        let mut all = sec.clone();
        all.push(x.clone());
        let mu0 = mean_of(&all);
        let s0_inv = scatter_about(&sec, &mu0).try_inverse().unwrap();
        let g = forms(&s0_inv, &pv, &(&xv - &mu0));
        let want = (nf + 1.0) / nf * g.cross2 / (g.steer * (1.0 + g.test));
        let got = detectors::kelly_generalized(&x, &p, &sec).unwrap().statistic;
        assert!(rel(got, want) < 1e-10, "generalized seed {seed}");
    }
}

#[test]
fn amplitude_matches_grid_search() {
    for seed in 0..10 {
        let (_, x, sigma, mu) = draw(4, 1, 0.5, c(0.5, 0.5), seed);
        let p = ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 1.0), c(-0.5, 0.2), c(0.3, 0.0)]).unwrap();
        let inv = mat(&sigma).try_inverse().unwrap();
        let (xv, muv, pv) = (vec_(&x), vec_(&mu), vec_(&p));
        let cost = |a: f64| {
            let r = &xv - &muv - &pv * c(a, 0.0);
            dot(&r, &(&inv * &r)).re
        };
        // golden-section search on the convex cost
        let (mut lo, mut hi) = (-50.0f64, 50.0f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if cost(a) < cost(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let got = detectors::estimate_amplitude(&x, &p, &mu, &sigma).unwrap();
        assert!((got - 0.5 * (lo + hi)).abs() < 1e-7, "{got} vs {}", 0.5 * (lo + hi));
    }
}

#[test]
fn sampling_moments() {
    let m = 4;
    let sigma = build_toeplitz_covariance(0.6, m).unwrap();
    let mu = ComplexVector::new(vec![c(1.0, 2.0), c(-1.0, 0.0), c(0.0, 3.0), c(2.0, -2.0)]).unwrap();
    let n = 100_000;
    let mut rng = RngStream::new(2024, 5);
    let xs = sample_cn(&mu, sigma.cholesky(), n, &mut rng).unwrap();
    let mean = mean_of(&xs);
    for i in 0..m {
        let se = (sigma.get(i, i).re / n as f64).sqrt();
        assert!((mean[i] - mu[i]).norm() < 5.0 * se, "mean {i}");
    }
    let cov = scatter_about(&xs, &vec_(&mu)) / c(n as f64, 0.0);
    for i in 0..m {
        for j in 0..m {
            let se = (sigma.get(i, i).re * sigma.get(j, j).re / n as f64).sqrt();
            assert!((cov[(i, j)] - sigma.get(i, j)).norm() < 5.0 * se, "cov {i},{j}");
        }
    }
    // circularity: E[(x-μ)(x-μ)ᵀ] = 0
    let mut pseudo = c(0.0, 0.0);
    for x in &xs {
        let d = x[1] - mu[1];
        pseudo += d * d;
    }
    assert!((pseudo / n as f64).norm() < 5.0 / (n as f64).sqrt());
}

#[test]
fn whitening_gives_identity_covariance() {
    let m = 3;
    let sigma = build_toeplitz_covariance(0.9, m).unwrap();
    let mu = ComplexVector::constant(m, c(3.0, 4.0)).unwrap();
    let n = 100_000;
    let mut rng = RngStream::new(77, 0);
    let xs = sample_cn(&mu, sigma.cholesky(), n, &mut rng).unwrap();
    let white: Vec<ComplexVector> = xs.iter().map(|x| sigma.cholesky().whiten(&(x - &mu)).unwrap()).collect();
    let cov = scatter_about(&white, &DVector::from_element(m, c(0.0, 0.0))) / c(n as f64, 0.0);
    for i in 0..m {
        for j in 0..m {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((cov[(i, j)] - c(want, 0.0)).norm() < 5.0 / (n as f64).sqrt(), "{i},{j}");
        }
    }
}

#[test]
fn estimator_moments() {
    // E[SCM_ML] = (N-1)/N Σ, E[SCM_unbiased] = Σ, Cov(μ̂) = Σ/N,
    // μ̂ and the scatter uncorrelated
    let (m, n, reps) = (3, 6, 20_000);
    let sigma = build_toeplitz_covariance(0.5, m).unwrap();
    let mu = ComplexVector::constant(m, c(-1.0, 1.0)).unwrap();
    let mut rng = RngStream::new(31, 1);
    let mut ml = DMatrix::from_element(m, m, c(0.0, 0.0));
    let mut unb = ml.clone();
    let mut mean_cov = ml.clone();
    let mut cross = c(0.0, 0.0);
    for _ in 0..reps {
        let xs = sample_cn(&mu, sigma.cholesky(), n, &mut rng).unwrap();
        let mhat = smv(&xs).unwrap();
        let a = mat(&scm(&xs, &mhat, EstimatorKind::ScmMl).unwrap());
        ml += &a;
        unb += mat(&scm(&xs, &mhat, EstimatorKind::ScmUnbiased).unwrap());
        let d = vec_(&mhat) - vec_(&mu);
        mean_cov += &d * d.adjoint();
        cross += d[0] * (a[(1, 1)] - c(sigma.get(1, 1).re * (n - 1) as f64 / n as f64, 0.0));
    }
    let r = c(reps as f64, 0.0);
    let (ml, unb, mean_cov) = (ml / r, unb / r, mean_cov / r);
    let nf = n as f64;
    for i in 0..m {
        for j in 0..m {
            let s = sigma.get(i, j);
            let tol = 5.0 * (sigma.get(i, i).re * sigma.get(j, j).re / (reps as f64 * nf)).sqrt();
            assert!((ml[(i, j)] - s * ((nf - 1.0) / nf)).norm() < tol, "ml {i},{j}");
            assert!((unb[(i, j)] - s).norm() < tol * nf / (nf - 1.0), "unbiased {i},{j}");
            assert!((mean_cov[(i, j)] - s / nf).norm() < tol, "mean cov {i},{j}");
        }
    }
    assert!((cross / r).norm() < 5.0 * (1.0 / nf / reps as f64).sqrt());
}

#[test]
fn kelly_known_quantile_matches_closed_form() {
    // (1-λ)^(N-m+1) = 1/64 at λ = 1/2 for N = 10, m = 5
    let cfg = ExperimentConfig::new(DetectorKind::KellyKnownMean, 5, 10, 0.4, c(3.0, 4.0), 20_000, 3);
    let cal = calibrate_threshold_empirical(&cfg, 0.015625).unwrap();
    assert!(cal.ci_lo <= 0.5 && 0.5 <= cal.ci_hi, "{cal:?}");
}

fn law_grid(law: &PfaLaw) -> Vec<f64> {
    (0..=12).map(|k| law.invert(10f64.powf(-k as f64 / 4.0)).unwrap()).collect()
}

#[test]
fn simulated_false_alarm_matches_each_law() {
    use cfar_core::montecarlo::stats::Z99;
    use statrs::distribution::{ContinuousCDF, Normal};
    use DetectorKind::*;
    let kinds = [Mf, AmfKnownMean, Nmf, AnmfKnownMean, KellyKnownMean, Amf, Anmf, KellyPlugin];
    // family-wise 99% band over every compared point (Bonferroni)
    let points = kinds.len() * 13;
    let z = Normal::standard().inverse_cdf(1.0 - 0.005 / points as f64);
    for kind in kinds {
        let law = PfaLaw::new(kind, 4, 9).unwrap();
        let cfg = ExperimentConfig::new(kind, 4, 9, 0.3, c(2.0, -1.0), 100_000, 100 + kind as u64)
            .with_thresholds(law_grid(&law));
        let curve = simulate_fa_curve(&cfg).unwrap();
        let theo = curve.theoretical_pfa.as_ref().unwrap();
        for i in 0..theo.len() {
            let band = curve.ci_halfwidth[i] * z / Z99;
            assert!(
                (curve.empirical_pfa[i] - theo[i]).abs() <= band,
                "{kind} point {i}: empirical {} theoretical {} band {band}",
                curve.empirical_pfa[i],
                theo[i]
            );
        }
    }
}

#[test]
fn detectors_reject_dimension_mismatch() {
    let (sec, x, sigma, mu) = draw(3, 5, 0.1, c(0.0, 0.0), 1);
    let p = ComplexVector::unit_ones(4).unwrap();
    assert!(detectors::mf(&x, &p, &mu, &sigma).is_err());
    assert!(detectors::kelly_plugin(&x, &p, &sec).is_err());
    let known = KnownParams::full(mu, sigma);
    assert!(detectors::DetectorEngine::new(DetectorKind::Mf, &p, &known).is_err());
}
