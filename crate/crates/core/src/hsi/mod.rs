//! Hyperspectral cubes: binary I/O, spectral complexification, band
//! management and sliding-window detection.
//!
//! # Cube file format
//!
//! A single line of UTF-8 JSON terminated by `\n`, then the raw payload:
//!
//! ```text
//! {"magic":"JCUBE","version":1,"width":W,"height":H,"bands":B,"dtype":"f32","interleave":"bsq","endian":"little"}
//! ```
//!
//! `dtype` is `f32` (4 bytes per value) or `c64` (two `f32`, real part
//! first). The payload holds `W·H·B` values in band-sequential order, value
//! `(band, row, col)` at index `band·H·W + row·W + col`, all little-endian.

mod bands;
mod cube;
mod detect;
mod qq;

pub use bands::{downsample_bands, hilbert_complexify, preprocess, select_bands};
pub use cube::{load_cube, save_cube, synthetic_complex_cube, synthetic_real_cube, CubeData, HyperCube, SampleType, MAGIC, VERSION};
pub use detect::{
    empirical_pfa_from_map, empirical_pfa_from_map_thinned, sliding_window_detect, DetectionMap, PixelFlag, WindowSpec,
};
pub use qq::{qq_from_sample, qq_plot_data, QqPlot, Region};
