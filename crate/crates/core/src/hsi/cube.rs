use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CnSampler, ComplexVector, HermitianPDMatrix, RngStream};

pub const MAGIC: &str = "JCUBE";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleType {
    /// One little-endian `f32` per value.
    F32,
    /// Two little-endian `f32` per value, real part first.
    C64,
}

impl SampleType {
    pub fn bytes_per_value(self) -> usize {
        match self {
            SampleType::F32 => 4,
            SampleType::C64 => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    magic: String,
    version: u32,
    width: usize,
    height: usize,
    bands: usize,
    dtype: SampleType,
    interleave: String,
    endian: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CubeData {
    Real(Vec<f32>),
    Complex(Vec<Complex32>),
}

/// Hyperspectral cube stored band-sequentially: value `(band, row, col)`
/// lives at `band·height·width + row·width + col`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperCube {
    width: usize,
    height: usize,
    bands: usize,
    data: CubeData,
}

impl HyperCube {
    pub fn new(width: usize, height: usize, bands: usize, data: CubeData) -> Result<Self> {
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::invalid("cube dimensions must be positive"));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|v| v.checked_mul(bands))
            .ok_or_else(|| Error::invalid("cube dimensions overflow"))?;
        let (len, finite) = match &data {
            CubeData::Real(v) => (v.len(), v.iter().all(|x| x.is_finite())),
            CubeData::Complex(v) => (v.len(), v.iter().all(|z| z.re.is_finite() && z.im.is_finite())),
        };
        Error::check_dim(expected, len)?;
        if !finite {
            return Err(Error::invalid("cube contains non-finite values"));
        }
        Ok(HyperCube { width, height, bands, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn data(&self) -> &CubeData {
        &self.data
    }

    pub fn sample_type(&self) -> SampleType {
        match self.data {
            CubeData::Real(_) => SampleType::F32,
            CubeData::Complex(_) => SampleType::C64,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.data, CubeData::Complex(_))
    }

    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, band: usize, row: usize, col: usize) -> usize {
        band * self.plane_len() + row * self.width + col
    }

    /// Value widened to `Complex64` (imaginary part 0 for real cubes).
    pub fn get(&self, band: usize, row: usize, col: usize) -> Complex64 {
        let i = self.index(band, row, col);
        match &self.data {
            CubeData::Real(v) => Complex64::new(v[i] as f64, 0.0),
            CubeData::Complex(v) => Complex64::new(v[i].re as f64, v[i].im as f64),
        }
    }

    /// Pixel-major copy: spectrum of pixel `(row, col)` at
    /// `[(row·width + col)·bands ..][..bands]`.
    pub fn pixel_major(&self) -> Vec<Complex64> {
        let plane = self.plane_len();
        let mut out = vec![Complex64::new(0.0, 0.0); plane * self.bands];
        for b in 0..self.bands {
            for p in 0..plane {
                out[p * self.bands + b] = match &self.data {
                    CubeData::Real(v) => Complex64::new(v[b * plane + p] as f64, 0.0),
                    CubeData::Complex(v) => Complex64::new(v[b * plane + p].re as f64, v[b * plane + p].im as f64),
                };
            }
        }
        out
    }

    /// Keep the listed bands, in order.
    pub(crate) fn with_bands(&self, bands: &[usize]) -> Result<Self> {
        let plane = self.plane_len();
        let data = match &self.data {
            CubeData::Real(v) => CubeData::Real(bands.iter().flat_map(|&b| v[b * plane..(b + 1) * plane].iter().copied()).collect()),
            CubeData::Complex(v) => {
                CubeData::Complex(bands.iter().flat_map(|&b| v[b * plane..(b + 1) * plane].iter().copied()).collect())
            }
        };
        HyperCube::new(self.width, self.height, bands.len(), data)
    }

    fn header(&self) -> Header {
        Header {
            magic: MAGIC.into(),
            version: VERSION,
            width: self.width,
            height: self.height,
            bands: self.bands,
            dtype: self.sample_type(),
            interleave: "bsq".into(),
            endian: "little".into(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(&self.header()).expect("header serializes");
        out.push(b'\n');
        match &self.data {
            CubeData::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            CubeData::Complex(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let parse = |offset: usize, message: String| Error::Parse { offset, message };
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse(bytes.len(), "missing header line terminator".into()))?;
        let header: Header =
            serde_json::from_slice(&bytes[..nl]).map_err(|e| parse(e.column().saturating_sub(1), format!("bad header: {e}")))?;
        if header.magic != MAGIC {
            return Err(parse(0, format!("bad magic '{}', expected '{MAGIC}'", header.magic)));
        }
        if header.version != VERSION {
            return Err(parse(0, format!("unsupported version {}, expected {VERSION}", header.version)));
        }
        if header.interleave != "bsq" {
            return Err(parse(0, format!("unsupported interleave '{}', expected 'bsq'", header.interleave)));
        }
        if header.endian != "little" {
            return Err(parse(0, format!("unsupported byte order '{}', expected 'little'", header.endian)));
        }
        let start = nl + 1;
        let count = header
            .width
            .checked_mul(header.height)
            .and_then(|v| v.checked_mul(header.bands))
            .ok_or_else(|| parse(0, "cube dimensions overflow".into()))?;
        let expected = count * header.dtype.bytes_per_value();
        let payload = &bytes[start..];
        if payload.len() != expected {
            return Err(parse(
                start + payload.len().min(expected),
                format!("payload is {} bytes, expected {expected} bytes", payload.len()),
            ));
        }
        let f = |i: usize| f32::from_le_bytes(payload[4 * i..4 * i + 4].try_into().expect("4 bytes"));
        let non_finite = |i: usize| parse(start + 4 * i, "non-finite value in payload".into());
        let data = match header.dtype {
            SampleType::F32 => {
                let mut v = Vec::with_capacity(count);
                for i in 0..count {
                    let x = f(i);
                    if !x.is_finite() {
                        return Err(non_finite(i));
                    }
                    v.push(x);
                }
                CubeData::Real(v)
            }
            SampleType::C64 => {
                let mut v = Vec::with_capacity(count);
                for i in 0..count {
                    let (re, im) = (f(2 * i), f(2 * i + 1));
                    if !re.is_finite() {
                        return Err(non_finite(2 * i));
                    }
                    if !im.is_finite() {
                        return Err(non_finite(2 * i + 1));
                    }
                    v.push(Complex32::new(re, im));
                }
                CubeData::Complex(v)
            }
        };
        HyperCube::new(header.width, header.height, header.bands, data)
    }
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    HyperCube::from_bytes(&fs::read(path)?)
}

pub fn save_cube(cube: &HyperCube, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&cube.to_bytes())?;
    Ok(())
}

/// Complex cube whose pixel spectra are i.i.d. `CN(mean, cov)`. Row `r`
/// draws from stream `r` of `seed`.
pub fn synthetic_complex_cube(
    width: usize,
    height: usize,
    mean: &ComplexVector,
    cov: &HermitianPDMatrix,
    seed: u64,
) -> Result<HyperCube> {
    let bands = mean.dim();
    Error::check_dim(bands, cov.dim())?;
    let sampler = CnSampler::new(mean, cov.cholesky())?;
    let rows: Vec<Vec<Complex64>> = (0..height)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r as u64);
            let mut s = sampler.clone();
            let mut row = vec![Complex64::new(0.0, 0.0); width * bands];
            for px in row.chunks_exact_mut(bands) {
                s.draw_into(&mut rng, px);
            }
            row
        })
        .collect();
    let plane = width * height;
    let mut data = vec![Complex32::new(0.0, 0.0); plane * bands];
    for (r, row) in rows.iter().enumerate() {
        for c in 0..width {
            for b in 0..bands {
                let z = row[c * bands + b];
                data[b * plane + r * width + c] = Complex32::new(z.re as f32, z.im as f32);
            }
        }
    }
    HyperCube::new(width, height, bands, CubeData::Complex(data))
}

/// Real cube of i.i.d. `N(mean, std²)` values. Row `r` draws from stream `r`.
pub fn synthetic_real_cube(width: usize, height: usize, bands: usize, mean: f64, std: f64, seed: u64) -> Result<HyperCube> {
    if !(std >= 0.0 && std.is_finite() && mean.is_finite()) {
        return Err(Error::invalid("mean must be finite and std nonnegative"));
    }
    let plane = width * height;
    let mut data = vec![0f32; plane * bands];
    let rows: Vec<Vec<f32>> = (0..height)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r as u64);
            (0..width * bands).map(|_| (mean + std * rng.standard_normal()) as f32).collect()
        })
        .collect();
    for (r, row) in rows.iter().enumerate() {
        for c in 0..width {
            for b in 0..bands {
                data[b * plane + r * width + c] = row[c * bands + b];
            }
        }
    }
    HyperCube::new(width, height, bands, CubeData::Real(data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::build_toeplitz_covariance;

    fn small() -> HyperCube {
        let data = (0..24).map(|i| i as f32 * 0.5 - 3.0).collect();
        HyperCube::new(4, 3, 2, CubeData::Real(data)).unwrap()
    }

    #[test]
    fn layout() {
        let c = small();
        assert_eq!(c.index(1, 2, 3), 12 + 8 + 3);
        assert_eq!(c.get(1, 0, 0).re, 12.0 * 0.5 - 3.0);
        let pm = c.pixel_major();
        assert_eq!(pm[5 * 2 + 1], c.get(1, 1, 1));
    }

    #[test]
    fn byte_round_trip() {
        let c = small();
        assert_eq!(HyperCube::from_bytes(&c.to_bytes()).unwrap(), c);
        let mu = ComplexVector::constant(3, Complex64::new(1.0, -1.0)).unwrap();
        let z = synthetic_complex_cube(5, 4, &mu, &build_toeplitz_covariance(0.4, 3).unwrap(), 3).unwrap();
        let bytes = z.to_bytes();
        let back = HyperCube::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = small().to_bytes();
        bytes.truncate(bytes.len() - 5);
        let err = HyperCube::from_bytes(&bytes).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("91 bytes") && msg.contains("expected 96 bytes"), "{msg}");
    }

    #[test]
    fn bad_headers() {
        let c = small();
        let good = String::from_utf8_lossy(&c.to_bytes()[..c.to_bytes().iter().position(|&b| b == b'\n').unwrap()]).to_string();
        for (from, to) in [("\"version\":1", "\"version\":2"), ("JCUBE", "XCUBE"), ("\"bsq\"", "\"bil\"")] {
            let mut bytes = good.replace(from, to).into_bytes();
            bytes.push(b'\n');
            bytes.extend_from_slice(&[0u8; 96]);
            assert!(matches!(HyperCube::from_bytes(&bytes), Err(Error::Parse { .. })), "{to}");
        }
        assert!(HyperCube::from_bytes(b"{}").is_err());
    }

    #[test]
    fn non_finite_rejected_with_offset() {
        let c = small();
        let mut bytes = c.to_bytes();
        let start = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
        bytes[start + 8..start + 12].copy_from_slice(&f32::NAN.to_le_bytes());
        match HyperCube::from_bytes(&bytes) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, start + 8),
            other => panic!("{other:?}"),
        }
        assert!(HyperCube::new(1, 1, 1, CubeData::Real(vec![f32::INFINITY])).is_err());
    }

    #[test]
    fn generators_are_reproducible() {
        let a = synthetic_real_cube(6, 5, 4, 1.0, 2.0, 9).unwrap();
        let b = synthetic_real_cube(6, 5, 4, 1.0, 2.0, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synthetic_real_cube(6, 5, 4, 1.0, 2.0, 10).unwrap());
    }
}
