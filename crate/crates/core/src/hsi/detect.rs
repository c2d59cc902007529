use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cube::{CubeData, HyperCube};
use crate::detectors::{DetectorEngine, DetectorKind, KnownParams, ParameterSource};
use crate::error::{Error, Result};
use crate::gaussian::ComplexVector;
use crate::montecarlo::FaCurve;
use crate::pfa::PfaLaw;

/// Square window of secondary pixels around the pixel under test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub size: usize,
    pub exclude_center: bool,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { size: 5, exclude_center: true }
    }
}

impl WindowSpec {
    pub fn new(size: usize) -> Self {
        WindowSpec { size, exclude_center: true }
    }

    pub fn half(&self) -> usize {
        self.size / 2
    }

    /// Number of secondary vectors per pixel.
    pub fn secondary_count(&self) -> usize {
        self.size * self.size - usize::from(self.exclude_center)
    }

    pub fn validate(&self, kind: DetectorKind, m: usize) -> Result<()> {
        if self.size < 3 || self.size % 2 == 0 {
            return Err(Error::invalid(format!("window size must be odd and at least 3, got {}", self.size)));
        }
        let n = self.secondary_count();
        let need = kind.min_secondary(m).max(m + 1);
        if n < need {
            return Err(Error::invalid(format!(
                "a {0}x{0} window gives N = {n} secondary pixels; detector {kind} in {m} bands needs N >= {need}",
                self.size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelFlag {
    Ok,
    /// Window does not fit inside the image.
    Boundary,
    /// Singular covariance estimate or undefined statistic; statistic set to 0.
    Degenerate,
}

impl PixelFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PixelFlag::Ok => "ok",
            PixelFlag::Boundary => "boundary",
            PixelFlag::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionMap {
    pub width: usize,
    pub height: usize,
    pub detector: DetectorKind,
    /// Secondary vectors per pixel.
    pub n: usize,
    /// Bands.
    pub m: usize,
    /// Row-major, 0 for boundary and degenerate pixels.
    pub statistics: Vec<f64>,
    pub flags: Vec<PixelFlag>,
}

impl DetectionMap {
    pub fn get(&self, row: usize, col: usize) -> (f64, PixelFlag) {
        let i = row * self.width + col;
        (self.statistics[i], self.flags[i])
    }

    pub fn count(&self, flag: PixelFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }

    pub fn ok_statistics(&self) -> Vec<f64> {
        self.thinned_statistics(1)
    }

    /// Statistics of ok pixels on the lattice of every `step`-th row and
    /// column counted from the first interior pixel. With `step` equal to the
    /// window size the selected windows do not overlap.
    pub fn thinned_statistics(&self, step: usize) -> Vec<f64> {
        let step = step.max(1);
        let (r0, c0) = self.first_ok().unwrap_or((0, 0));
        let mut out = Vec::new();
        for r in (r0..self.height).step_by(step) {
            for c in (c0..self.width).step_by(step) {
                let (s, f) = self.get(r, c);
                if f == PixelFlag::Ok {
                    out.push(s);
                }
            }
        }
        out
    }

    fn first_ok(&self) -> Option<(usize, usize)> {
        let i = self.flags.iter().position(|&f| f != PixelFlag::Boundary)?;
        Some((i / self.width, i % self.width))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,statistic,flag\n");
        for r in 0..self.height {
            for c in 0..self.width {
                let (v, f) = self.get(r, c);
                s.push_str(&format!("{r},{c},{v},{}\n", f.as_str()));
            }
        }
        s
    }

    /// Single-band real cube of the statistics.
    pub fn to_cube(&self) -> Result<HyperCube> {
        HyperCube::new(self.width, self.height, 1, CubeData::Real(self.statistics.iter().map(|&v| v as f32).collect()))
    }
}

/// Run an adaptive detector over every interior pixel, estimating the
/// background from the surrounding window.
pub fn sliding_window_detect(
    cube: &HyperCube,
    detector: DetectorKind,
    steering: &ComplexVector,
    window: WindowSpec,
) -> Result<DetectionMap> {
    if detector.parameters() != ParameterSource::Estimated {
        return Err(Error::invalid(format!(
            "detector {detector} needs a known background; use amf, anmf, kelly-plugin or kelly-generalized"
        )));
    }
    let m = cube.bands();
    Error::check_dim(m, steering.dim())?;
    window.validate(detector, m)?;
    let engine = DetectorEngine::new(detector, steering, &KnownParams::none())?;
    let (w, h) = (cube.width(), cube.height());
    let half = window.half();
    let n = window.secondary_count();
    let pixels = cube.pixel_major();

    let rows: Vec<Result<Vec<(f64, PixelFlag)>>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut engine = engine.clone();
            let mut secondary = Vec::with_capacity(n * m);
            let mut row = Vec::with_capacity(w);
            for c in 0..w {
                if r < half || c < half || r + half >= h || c + half >= w {
                    row.push((0.0, PixelFlag::Boundary));
                    continue;
                }
                secondary.clear();
                for rr in r - half..=r + half {
                    for cc in c - half..=c + half {
                        if window.exclude_center && rr == r && cc == c {
                            continue;
                        }
                        let p = (rr * w + cc) * m;
                        secondary.extend_from_slice(&pixels[p..p + m]);
                    }
                }
                let p = (r * w + c) * m;
                let test: &[Complex64] = &pixels[p..p + m];
                match engine.evaluate(&secondary, test) {
                    Ok(res) => row.push((res.statistic, PixelFlag::Ok)),
                    Err(Error::SingularEstimate { .. } | Error::UndefinedStatistic(_)) => {
                        row.push((0.0, PixelFlag::Degenerate))
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(row)
        })
        .collect();

    let mut statistics = Vec::with_capacity(w * h);
    let mut flags = Vec::with_capacity(w * h);
    for row in rows {
        for (s, f) in row? {
            statistics.push(s);
            flags.push(f);
        }
    }
    Ok(DetectionMap { width: w, height: h, detector, n, m, statistics, flags })
}

/// Exceedance fraction of the map's ok pixels at each threshold, with the
/// closed-form law overlaid when one exists.
pub fn empirical_pfa_from_map(map: &DetectionMap, thresholds: &[f64]) -> Result<FaCurve> {
    empirical_pfa_from_map_thinned(map, thresholds, 1)
}

/// As [`empirical_pfa_from_map`] on the thinned pixel lattice.
pub fn empirical_pfa_from_map_thinned(map: &DetectionMap, thresholds: &[f64], step: usize) -> Result<FaCurve> {
    let stats = map.thinned_statistics(step);
    if stats.is_empty() {
        return Err(Error::domain("detection map has no ok pixels"));
    }
    let law = PfaLaw::new(map.detector, map.m, map.n).ok();
    let f = law.map(|l| move |t: f64| l.pfa(t));
    FaCurve::from_statistics(map.detector, stats, thresholds, f.as_ref().map(|f| f as &dyn Fn(f64) -> Result<f64>), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::build_toeplitz_covariance;
    use crate::hsi::synthetic_complex_cube;
    use num_complex::Complex32;

    fn gaussian_cube(w: usize, h: usize, m: usize, seed: u64) -> HyperCube {
        let mu = ComplexVector::constant(m, Complex64::new(3.0, 4.0)).unwrap();
        synthetic_complex_cube(w, h, &mu, &build_toeplitz_covariance(0.4, m).unwrap(), seed).unwrap()
    }

    #[test]
    fn window_counts() {
        assert_eq!(WindowSpec::default().secondary_count(), 24);
        assert_eq!(WindowSpec { size: 3, exclude_center: false }.secondary_count(), 9);
        assert!(WindowSpec::new(4).validate(DetectorKind::Anmf, 2).is_err());
        assert!(WindowSpec::new(3).validate(DetectorKind::Anmf, 8).is_err());
        assert!(WindowSpec::new(5).validate(DetectorKind::Anmf, 6).is_ok());
    }

    #[test]
    fn boundary_and_domain() {
        let cube = gaussian_cube(12, 9, 4, 1);
        let p = ComplexVector::unit_ones(4).unwrap();
        let map = sliding_window_detect(&cube, DetectorKind::Anmf, &p, WindowSpec::default()).unwrap();
        assert_eq!(map.n, 24);
        assert_eq!(map.count(PixelFlag::Ok), 8 * 5);
        assert_eq!(map.get(1, 5).1, PixelFlag::Boundary);
        assert_eq!(map.get(2, 2).1, PixelFlag::Ok);
        for s in map.ok_statistics() {
            assert!((0.0..=1.0).contains(&s));
        }
        assert_eq!(map.thinned_statistics(5).len(), 2);
    }

    #[test]
    fn constant_cube_is_degenerate() {
        let data = vec![Complex32::new(1.0, 2.0); 8 * 8 * 3];
        let cube = HyperCube::new(8, 8, 3, CubeData::Complex(data)).unwrap();
        let p = ComplexVector::unit_ones(3).unwrap();
        let map = sliding_window_detect(&cube, DetectorKind::Amf, &p, WindowSpec::default()).unwrap();
        assert_eq!(map.count(PixelFlag::Degenerate), 16);
        assert_eq!(map.count(PixelFlag::Ok), 0);
        assert!(empirical_pfa_from_map(&map, &[0.5]).is_err());
    }

    #[test]
    fn rejects_known_parameter_detectors() {
        let cube = gaussian_cube(6, 6, 2, 2);
        let p = ComplexVector::unit_ones(2).unwrap();
        assert!(sliding_window_detect(&cube, DetectorKind::Mf, &p, WindowSpec::default()).is_err());
        assert!(sliding_window_detect(&cube, DetectorKind::Anmf, &ComplexVector::unit_ones(3).unwrap(), WindowSpec::default()).is_err());
    }

    #[test]
    fn pfa_endpoints() {
        let cube = gaussian_cube(10, 10, 3, 3);
        let p = ComplexVector::unit_ones(3).unwrap();
        let map = sliding_window_detect(&cube, DetectorKind::KellyPlugin, &p, WindowSpec::default()).unwrap();
        let stats = map.ok_statistics();
        let lo = stats.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = stats.iter().copied().fold(0.0, f64::max);
        let curve = empirical_pfa_from_map(&map, &[lo / 2.0, hi]).unwrap();
        assert_eq!(curve.empirical_pfa, vec![1.0, 0.0]);
        assert_eq!(curve.pfa_floor, 1.0 / 36.0);
        assert!(curve.theoretical_pfa.is_some());
    }

    #[test]
    fn translation_equivariance() {
        let cube = gaussian_cube(14, 10, 3, 4);
        let p = ComplexVector::unit_ones(3).unwrap();
        let map = sliding_window_detect(&cube, DetectorKind::Anmf, &p, WindowSpec::default()).unwrap();
        // drop the first column and row of the cube
        let (w, h) = (13, 9);
        let mut data = Vec::new();
        for b in 0..3 {
            for r in 1..10 {
                for c in 1..14 {
                    let z = cube.get(b, r, c);
                    data.push(Complex32::new(z.re as f32, z.im as f32));
                }
            }
        }
        let shifted = HyperCube::new(w, h, 3, CubeData::Complex(data)).unwrap();
        let map2 = sliding_window_detect(&shifted, DetectorKind::Anmf, &p, WindowSpec::default()).unwrap();
        for r in 0..h {
            for c in 0..w {
                let (s2, f2) = map2.get(r, c);
                if f2 == PixelFlag::Ok {
                    assert_eq!(map.get(r + 1, c + 1), (s2, f2));
                }
            }
        }
        assert_eq!(map2.count(PixelFlag::Ok), (w - 4) * (h - 4));
    }
}
