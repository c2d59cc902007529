use num_complex::{Complex, Complex32};
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::cube::{CubeData, HyperCube};
use crate::error::{Error, Result};

/// Analytic signal of every pixel spectrum: FFT along the band axis, keep
/// DC and Nyquist, double positive frequencies, zero negative ones, inverse
/// FFT. The real part of the result is the input.
pub fn hilbert_complexify(cube: &HyperCube) -> Result<HyperCube> {
    let values = match cube.data() {
        CubeData::Real(v) => v,
        CubeData::Complex(_) => return Err(Error::invalid("cube is already complex")),
    };
    let bands = cube.bands();
    if bands < 2 {
        return Err(Error::invalid(format!("complexification needs at least 2 bands, got {bands}")));
    }
    let plane = cube.plane_len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(bands);
    let inv = planner.plan_fft_inverse(bands);
    let positive_end = bands.div_ceil(2);
    let scale = 1.0 / bands as f64;

    let spectra: Vec<Vec<Complex32>> = (0..plane)
        .into_par_iter()
        .with_min_len(64)
        .map(|p| {
            let mut buf: Vec<Complex<f64>> = (0..bands).map(|b| Complex::new(values[b * plane + p] as f64, 0.0)).collect();
            fwd.process(&mut buf);
            for z in &mut buf[1..positive_end] {
                *z *= 2.0;
            }
            for z in &mut buf[bands / 2 + 1..] {
                *z = Complex::new(0.0, 0.0);
            }
            inv.process(&mut buf);
            buf.iter().map(|z| Complex32::new((z.re * scale) as f32, (z.im * scale) as f32)).collect()
        })
        .collect();

    let mut data = vec![Complex32::new(0.0, 0.0); plane * bands];
    for (p, s) in spectra.iter().enumerate() {
        for (b, z) in s.iter().enumerate() {
            data[b * plane + p] = *z;
        }
    }
    HyperCube::new(cube.width(), cube.height(), bands, CubeData::Complex(data))
}

/// Keep bands `0, factor, 2·factor, …`.
pub fn downsample_bands(cube: &HyperCube, factor: usize) -> Result<HyperCube> {
    if factor == 0 {
        return Err(Error::invalid("downsampling factor must be at least 1"));
    }
    if factor > 1 && factor >= cube.bands() {
        return Err(Error::invalid(format!("factor {factor} leaves no band pairs in a {}-band cube", cube.bands())));
    }
    let keep: Vec<usize> = (0..cube.bands()).step_by(factor).collect();
    cube.with_bands(&keep)
}

/// Contiguous slice of `count` bands starting at `start`.
pub fn select_bands(cube: &HyperCube, start: usize, count: usize) -> Result<HyperCube> {
    if count == 0 || start.checked_add(count).map_or(true, |end| end > cube.bands()) {
        return Err(Error::invalid(format!(
            "band range {start}..{} outside 0..{}",
            start.saturating_add(count),
            cube.bands()
        )));
    }
    let keep: Vec<usize> = (start..start + count).collect();
    cube.with_bands(&keep)
}

/// Complexify, downsample by two, then keep `count` bands from `start`.
pub fn preprocess(cube: &HyperCube, factor: usize, start: usize, count: usize) -> Result<HyperCube> {
    let c = hilbert_complexify(cube)?;
    let c = downsample_bands(&c, factor)?;
    select_bands(&c, start, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(values: &[f32]) -> HyperCube {
        HyperCube::new(1, 1, values.len(), CubeData::Real(values.to_vec())).unwrap()
    }

    fn complex_values(c: &HyperCube) -> Vec<Complex32> {
        match c.data() {
            CubeData::Complex(v) => v.clone(),
            _ => panic!("expected complex"),
        }
    }

    #[test]
    fn four_point_cosine() {
        let out = complex_values(&hilbert_complexify(&spectrum(&[1.0, 0.0, -1.0, 0.0])).unwrap());
        let want = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (z, (re, im)) in out.iter().zip(want) {
            assert!((z.re - re).abs() < 1e-7 && (z.im - im).abs() < 1e-7, "{z}");
        }
    }

    #[test]
    fn constant_passes_through() {
        for b in [2, 3, 7, 8] {
            let out = complex_values(&hilbert_complexify(&spectrum(&vec![2.5; b])).unwrap());
            assert!(out.iter().all(|z| (z.re - 2.5).abs() < 1e-6 && z.im.abs() < 1e-6), "{out:?}");
        }
    }

    #[test]
    fn odd_length_keeps_real_part() {
        let x = [0.3, -1.2, 2.0, 0.7, -0.1];
        let out = complex_values(&hilbert_complexify(&spectrum(&x)).unwrap());
        for (z, v) in out.iter().zip(x) {
            assert!((z.re - v).abs() <= 1e-6 * v.abs().max(1.0));
        }
    }

    #[test]
    fn band_errors() {
        assert!(hilbert_complexify(&spectrum(&[1.0])).is_err());
        let c = spectrum(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(downsample_bands(&c, 0).is_err());
        assert!(downsample_bands(&c, 5).is_err());
        assert_eq!(downsample_bands(&c, 1).unwrap(), c);
        assert!(select_bands(&c, 3, 3).is_err());
        assert!(select_bands(&c, 0, 0).is_err());
        assert_eq!(select_bands(&c, 0, 5).unwrap(), c);
    }

    #[test]
    fn downsample_and_select() {
        let values: Vec<f32> = (0..116 * 2).map(|i| i as f32).collect();
        let c = HyperCube::new(2, 1, 116, CubeData::Real(values)).unwrap();
        let d = downsample_bands(&c, 2).unwrap();
        assert_eq!(d.bands(), 58);
        for k in 0..58 {
            assert_eq!(d.get(k, 0, 1), c.get(2 * k, 0, 1));
        }
        let s = select_bands(&d, 3, 6).unwrap();
        assert_eq!(s.bands(), 6);
        assert_eq!(s.get(0, 0, 0), d.get(3, 0, 0));
    }
}
