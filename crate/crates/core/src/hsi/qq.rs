use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::cube::{CubeData, HyperCube};
use crate::error::{Error, Result};

/// Pixel rectangle: rows `row..row+height`, columns `col..col+width`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QqPlot {
    /// `(normal quantile, sample quantile)`, sorted.
    pub pairs: Vec<(f64, f64)>,
    /// Least-squares line `sample = slope·normal + intercept`.
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of the pairs; 0 when degenerate.
    pub correlation: f64,
    /// All sample values equal.
    pub degenerate: bool,
}

impl QqPlot {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("normal_quantile,sample_quantile\n");
        for (x, y) in &self.pairs {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }
}

/// Normal Q-Q data of one band over a region, plotting positions `(i − ½)/n`.
pub fn qq_plot_data(cube: &HyperCube, band: usize, region: Region) -> Result<QqPlot> {
    let values = match cube.data() {
        CubeData::Real(v) => v,
        CubeData::Complex(_) => return Err(Error::invalid("Q-Q data needs a real cube")),
    };
    if band >= cube.bands() {
        return Err(Error::invalid(format!("band {band} outside 0..{}", cube.bands())));
    }
    if region.height == 0
        || region.width == 0
        || region.row + region.height > cube.height()
        || region.col + region.width > cube.width()
    {
        return Err(Error::invalid(format!(
            "region {}x{} at ({}, {}) outside the {}x{} image",
            region.height,
            region.width,
            region.row,
            region.col,
            cube.height(),
            cube.width()
        )));
    }
    let n = region.height * region.width;
    if n < 3 {
        return Err(Error::invalid("Q-Q data needs at least 3 pixels"));
    }
    let mut sample = Vec::with_capacity(n);
    for r in region.row..region.row + region.height {
        for c in region.col..region.col + region.width {
            sample.push(values[cube.index(band, r, c)] as f64);
        }
    }
    Ok(qq_from_sample(sample))
}

pub fn qq_from_sample(mut sample: Vec<f64>) -> QqPlot {
    sample.sort_by(f64::total_cmp);
    let n = sample.len();
    let normal = Normal::standard();
    let pairs: Vec<(f64, f64)> =
        sample.iter().enumerate().map(|(i, &y)| (normal.inverse_cdf((i as f64 + 0.5) / n as f64), y)).collect();
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let degenerate = sample.first() == sample.last();
    let slope = sxy / sxx;
    QqPlot {
        pairs,
        slope,
        intercept: my - slope * mx,
        correlation: if degenerate { 0.0 } else { sxy / (sxx * syy).sqrt() },
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points() {
        let q = qq_from_sample(vec![1.0, -1.0, 0.0]);
        let normal = Normal::standard();
        let want = [1.0 / 6.0, 0.5, 5.0 / 6.0].map(|p| normal.inverse_cdf(p));
        for ((x, y), (w, v)) in q.pairs.iter().zip(want.iter().zip([-1.0, 0.0, 1.0])) {
            assert!((x - w).abs() < 1e-12);
            assert_eq!(*y, v);
        }
        assert!(!q.degenerate);
        assert!(q.intercept.abs() < 1e-12);
    }

    #[test]
    fn constant_region_is_degenerate() {
        let cube = HyperCube::new(4, 4, 1, CubeData::Real(vec![2.0; 16])).unwrap();
        let r = Region { row: 0, col: 0, height: 4, width: 4 };
        let q = qq_plot_data(&cube, 0, r).unwrap();
        assert!(q.degenerate);
        assert_eq!(q.slope, 0.0);
        assert_eq!(q.intercept, 2.0);
    }

    #[test]
    fn region_errors() {
        let cube = HyperCube::new(4, 4, 2, CubeData::Real(vec![0.0; 32])).unwrap();
        assert!(qq_plot_data(&cube, 0, Region { row: 2, col: 0, height: 3, width: 1 }).is_err());
        assert!(qq_plot_data(&cube, 2, Region { row: 0, col: 0, height: 2, width: 2 }).is_err());
        assert!(qq_plot_data(&cube, 0, Region { row: 0, col: 0, height: 1, width: 2 }).is_err());
    }
}
