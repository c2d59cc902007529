//! Gauss hypergeometric function and Beta-weighted integrals.

use statrs::function::gamma::ln_gamma;

use super::quadrature::{integrate, QuadOptions};
use crate::error::{Error, Result};

const QUAD: QuadOptions = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-13, max_intervals: 4000 };

/// Largest error estimate, relative to `max(1, |value|)`, accepted from the
/// quadrature before reporting failure.
const ACCEPT_ERR: f64 = 1e-10;

pub fn ln_beta(p: f64, q: f64) -> f64 {
    ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)
}

/// `E[g(T)]` for `T ~ Beta(p, q)`, i.e.
/// `∫₀¹ t^{p-1}(1-t)^{q-1} g(t) dt / B(p, q)`.
///
/// The interval is split at 1/2 and an endpoint with exponent below zero is
/// removed by the power substitution `t = u^{1/p}` (or `1-t = u^{1/q}`).
pub fn beta_expectation<G: Fn(f64) -> f64>(p: f64, q: f64, g: G) -> Result<f64> {
    if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::domain(format!("Beta parameters must be positive, got ({p}, {q})")));
    }
    let lnb = ln_beta(p, q);
    let density = |t: f64| ((p - 1.0) * t.ln() + (q - 1.0) * (-t).ln_1p() - lnb).exp();

    let left = if p < 1.0 {
        // t = u^{1/p}: t^{p-1} dt = du / p
        let f = |u: f64| {
            let t = u.powf(1.0 / p);
            ((q - 1.0) * (-t).ln_1p() - lnb).exp() / p * g(t)
        };
        integrate(f, 0.0, 0.5f64.powf(p), QUAD)
    } else {
        integrate(|t| density(t) * g(t), 0.0, 0.5, QUAD)
    };
    let right = if q < 1.0 {
        let f = |u: f64| {
            let s = u.powf(1.0 / q);
            let t = 1.0 - s;
            ((p - 1.0) * t.ln() - lnb).exp() / q * g(t)
        };
        integrate(f, 0.0, 0.5f64.powf(q), QUAD)
    } else {
        integrate(|t| density(t) * g(t), 0.5, 1.0, QUAD)
    };

    let value = left.value + right.value;
    let err = left.error + right.error;
    if !value.is_finite() || err > ACCEPT_ERR * value.abs().max(1.0) {
        return Err(Error::domain(format!(
            "Beta-weighted integral did not converge (p={p}, q={q}, value={value:e}, error={err:e})"
        )));
    }
    Ok(value)
}

/// `₂F₁(a, b; c; z)` split as `exp(ln_scale) · value`, which keeps large
/// values (z close to 1) representable when they are later multiplied by a
/// small prefactor.
///
/// Evaluated with the Euler integral
/// `Γ(c)/(Γ(b)Γ(c−b)) ∫₀¹ t^{b−1}(1−t)^{c−b−1}(1−tz)^{−a} dt`, after the
/// Pfaff transformation `₂F₁(a,b;c;z) = (1−z)^{−a} ₂F₁(a, c−b; c; z/(z−1))`
/// when `0 < z < 1`, so that the integrand is always bounded.
pub fn hyp2f1_parts(a: f64, b: f64, c: f64, z: f64) -> Result<(f64, f64)> {
    if ![a, b, c, z].iter().all(|v| v.is_finite()) {
        return Err(Error::domain("hypergeometric parameters must be finite"));
    }
    if z >= 1.0 {
        return Err(Error::domain(format!("hypergeometric argument must satisfy z < 1, got {z}")));
    }
    if z == 0.0 || a == 0.0 || b == 0.0 {
        return Ok((0.0, 1.0));
    }
    // ₂F₁(a, b; b; z) = (1 − z)^{−a}
    if b == c {
        return Ok((-a * (-z).ln_1p(), 1.0));
    }
    if a == c {
        return Ok((-b * (-z).ln_1p(), 1.0));
    }
    let (a, b) = if c > b && b > 0.0 {
        (a, b)
    } else if c > a && a > 0.0 {
        (b, a)
    } else {
        return Err(Error::domain(format!(
            "Euler integral requires c > b > 0 (or c > a > 0), got a={a}, b={b}, c={c}"
        )));
    };
    if z < 0.0 {
        let value = beta_expectation(b, c - b, |t| (-a * (-t * z).ln_1p()).exp())?;
        Ok((0.0, value))
    } else {
        let w = z / (z - 1.0);
        let value = beta_expectation(c - b, b, |t| (-a * (-t * w).ln_1p()).exp())?;
        Ok((-a * (-z).ln_1p(), value))
    }
}

/// Gauss hypergeometric function `₂F₁(a, b; c; z)` for `z < 1` and
/// `c > b > 0` (or `c > a > 0`; `₂F₁` is symmetric in `a`, `b`).
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let (ln_scale, value) = hyp2f1_parts(a, b, c, z)?;
    Ok(ln_scale.exp() * value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_argument() {
        assert_eq!(hyp2f1(3.0, 4.5, 9.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn binomial_identity() {
        let v = hyp2f1(2.0, 3.0, 3.0, -0.5).unwrap();
        assert!((v - 1.0 / 2.25).abs() < 1e-15);
    }

    #[test]
    fn elementary_closed_forms() {
        // ₂F₁(1, 1; 2; z) = −ln(1−z)/z
        for z in [-5.0, -0.9, -0.1, 0.3, 0.9, 0.999] {
            let exact = -(-z as f64).ln_1p() / z;
            let v = hyp2f1(1.0, 1.0, 2.0, z).unwrap();
            assert!((v - exact).abs() < 1e-12 * exact.max(1.0), "z={z}: {v} vs {exact}");
        }
        // ₂F₁(1/2, 1; 3/2; −x²) = atan(x)/x, an endpoint-singular Euler weight
        for x in [0.2f64, 1.0, 3.0] {
            let exact = x.atan() / x;
            let v = hyp2f1(1.0, 0.5, 1.5, -x * x).unwrap();
            assert!((v - exact).abs() < 1e-11, "x={x}: {v} vs {exact}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(hyp2f1(1.0, 2.0, 3.0, 1.0).is_err());
        assert!(hyp2f1(1.0, 2.0, 3.0, 1.5).is_err());
        assert!(hyp2f1(4.0, 5.0, 3.0, -0.5).is_err());
        assert!(hyp2f1(1.0, f64::NAN, 3.0, -0.5).is_err());
    }

    #[test]
    fn beta_expectation_normalized() {
        for (p, q) in [(0.3, 0.6), (1.0, 1.0), (6.0, 4.0), (96.0, 4.0), (2.5, 0.5)] {
            let v = beta_expectation(p, q, |_| 1.0).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "({p},{q}) -> {v}");
            let mean = beta_expectation(p, q, |t| t).unwrap();
            assert!((mean - p / (p + q)).abs() < 1e-12);
        }
    }
}
