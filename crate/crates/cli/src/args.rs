use std::path::PathBuf;

use cfar_core::detectors::DetectorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Adaptive Gaussian target detection: false-alarm regulation, detection
/// curves and hyperspectral sliding-window detection.
///
/// Exit codes: 0 success, 1 usage error, 2 domain or precondition error,
/// 3 I/O error. Errors are reported on stderr as a single line
/// `cfar: error kind=<usage|domain|io> code=<n> msg=<text>`.
#[derive(Debug, Parser)]
#[command(name = "cfar", version)]
pub struct Cli {
    /// Worker threads for trial and pixel blocks. Results do not depend on
    /// it. Default: all cores.
    #[arg(long, global = true, env = "CFAR_WORKERS", value_name = "K")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a false-alarm regulation curve (PFA against threshold).
    ///
    /// Writes <OUT>.csv (threshold,empirical,theoretical,ci_lo,ci_hi),
    /// <OUT>.json and <OUT>.manifest.json.
    SimulateFa(SimulateFaArgs),
    /// Simulate a detection curve (Pd against SNR) at a fixed PFA.
    ///
    /// SNR is |α|²·pᴴΣ⁻¹p in dB with real positive α. Writes <OUT>.csv
    /// (snr_db,empirical,theoretical,ci_lo,ci_hi), <OUT>.json and
    /// <OUT>.manifest.json.
    SimulatePd(SimulatePdArgs),
    /// Threshold for a target PFA, from the exact law or by simulation for
    /// kelly-generalized.
    ///
    /// Prints one line `detector=.. m=.. N=.. pfa=.. lambda=.. [eta=..]`.
    Threshold(ThresholdArgs),
    /// Sliding-window detection on a complex cube, plus the empirical PFA
    /// curve over the valid pixels.
    ///
    /// Writes <OUT>.map.csv, <OUT>.map.jcube, <OUT>.pfa.csv, <OUT>.pfa.json
    /// and <OUT>.manifest.json.
    Detect(DetectArgs),
    /// Complexify a real cube along the spectral axis, downsample bands and
    /// select a contiguous band range.
    ///
    /// Writes <OUT>.jcube and <OUT>.manifest.json.
    Complexify(ComplexifyArgs),
    /// Normal Q-Q pairs of one band over a pixel region of a real cube.
    ///
    /// Writes <OUT>.csv (normal_quantile,sample_quantile), <OUT>.json
    /// (pairs plus line fit) and <OUT>.manifest.json.
    Qqplot(QqArgs),
    /// Write a synthetic cube of i.i.d. pixel spectra.
    ///
    /// Writes <OUT>.jcube and <OUT>.manifest.json.
    GenCube(GenCubeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExperimentArgs {
    /// JSON experiment descriptor. Flags given on the command line override
    /// its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Detector: mf, amf-known, amf, nmf, anmf-known, anmf, kelly-known,
    /// kelly-plugin, kelly-generalized. Required unless set by --config.
    #[arg(long)]
    pub detector: Option<DetectorKind>,

    /// Vector dimension (bands). Default 5.
    #[arg(long)]
    pub m: Option<usize>,

    /// Number of secondary vectors per trial. Default 10.
    #[arg(long = "N", value_name = "N")]
    pub n: Option<usize>,

    /// Toeplitz covariance parameter, Σ_ij = rho^|i-j|, |rho| < 1. Default 0.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,

    /// Background mean, one complex literal `a+bj` repeated m times. Default 0.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,

    /// Monte-Carlo trials per curve point. Default 100000.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Master RNG seed (unsigned 64-bit). Default 0.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Steering vector file, two columns re,im, m rows. Default: all-ones
    /// vector scaled to unit norm.
    #[arg(long, value_name = "FILE")]
    pub steering: Option<PathBuf>,

    /// Trials per RNG block. Changing it changes the random draws. Default 4096.
    #[arg(long)]
    pub block_size: Option<usize>,

    /// Output path prefix.
    #[arg(long, value_name = "PREFIX")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateFaArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,

    /// Comma-separated thresholds λ (statistic units), ascending.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "grid")]
    pub thresholds: Option<Vec<f64>>,

    /// Linear threshold grid `lo:hi:count`. Default: the thresholds giving
    /// PFA = 10^(-k/4), k = 0..16, when an exact law exists, otherwise 0 to
    /// just below the statistic's supremum (or 0 to 40) in 41 steps.
    #[arg(long, value_name = "LO:HI:COUNT")]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulatePdArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,

    /// Target false-alarm probability. Default 0.001.
    #[arg(long, default_value_t = 1e-3)]
    pub pfa: f64,

    /// Comma-separated SNR values in dB, ascending.
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "snr_grid")]
    pub snr_db: Option<Vec<f64>>,

    /// Linear SNR grid in dB `lo:hi:count`. Default -10:30:41.
    #[arg(long, value_name = "LO:HI:COUNT", allow_hyphen_values = true)]
    pub snr_grid: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdArgs {
    /// Detector name, see simulate-fa.
    #[arg(long)]
    pub detector: DetectorKind,

    /// Vector dimension.
    #[arg(long)]
    pub m: usize,

    /// Number of secondary vectors.
    #[arg(long = "N", value_name = "N")]
    pub n: usize,

    /// Target false-alarm probability in (0, 1].
    #[arg(long)]
    pub pfa: f64,

    /// kelly-generalized only: calibration trials, at least 100/pfa.
    /// Default 100/pfa rounded up.
    #[arg(long)]
    pub trials: Option<usize>,

    /// kelly-generalized only: RNG seed. Default 0.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// kelly-generalized only: Toeplitz parameter of the simulated
    /// background. The statistic is CFAR so this does not matter in theory.
    /// Default 0.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,

    /// Also write the printed line to <OUT>.txt with <OUT>.manifest.json.
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    /// Complex input cube (.jcube).
    #[arg(long, value_name = "FILE")]
    pub cube: PathBuf,

    /// amf, anmf, kelly-plugin or kelly-generalized. Default anmf.
    #[arg(long, default_value = "anmf")]
    pub detector: DetectorKind,

    /// Steering vector file, two columns re,im, one row per band.
    #[arg(long, value_name = "FILE")]
    pub steering: PathBuf,

    /// Odd window side in pixels, at least 3. Default 5 (N = 24).
    #[arg(long, default_value_t = 5)]
    pub window: usize,

    /// Keep the pixel under test among its own secondary data.
    #[arg(long)]
    pub include_center: bool,

    /// Comma-separated thresholds for the PFA curve, ascending.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "grid")]
    pub thresholds: Option<Vec<f64>>,

    /// Linear threshold grid `lo:hi:count`. Default 0 to just below the statistic's
    /// supremum (or 0 to 40) in 41 steps.
    #[arg(long, value_name = "LO:HI:COUNT")]
    pub grid: Option<String>,

    /// Use every THIN-th row and column for the PFA curve. With THIN equal
    /// to the window size the windows do not overlap. Default 1.
    #[arg(long, default_value_t = 1)]
    pub thin: usize,

    /// Output path prefix.
    #[arg(long, value_name = "PREFIX")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ComplexifyArgs {
    /// Real input cube (.jcube).
    #[arg(long, value_name = "FILE")]
    pub cube: PathBuf,

    /// Keep one band in FACTOR after complexification. Default 2.
    #[arg(long, default_value_t = 2)]
    pub factor: usize,

    /// First band to keep after downsampling. Default 0.
    #[arg(long, default_value_t = 0)]
    pub start: usize,

    /// Number of bands to keep. Default: all from --start.
    #[arg(long)]
    pub count: Option<usize>,

    /// Output path prefix.
    #[arg(long, value_name = "PREFIX")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QqArgs {
    /// Real input cube (.jcube).
    #[arg(long, value_name = "FILE")]
    pub cube: PathBuf,

    /// Band index (0-based). Default 0.
    #[arg(long, default_value_t = 0)]
    pub band: usize,

    /// Pixel region `row,col,height,width`. Default: whole image.
    #[arg(long, value_name = "ROW,COL,HEIGHT,WIDTH")]
    pub region: Option<String>,

    /// Output path prefix.
    #[arg(long, value_name = "PREFIX")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenCubeArgs {
    /// Number of bands.
    #[arg(long)]
    pub m: usize,

    /// Toeplitz parameter of the band covariance, |rho| < 1. Default 0.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,

    /// Mean of every band, complex literal `a+bj`. Default 0.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub mu: String,

    /// Image width in pixels.
    #[arg(long)]
    pub width: usize,

    /// Image height in pixels.
    #[arg(long)]
    pub height: usize,

    /// RNG seed. Default 0.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write a real cube of independent N(Re mu, 1) values instead; --rho
    /// must then be 0.
    #[arg(long)]
    pub real: bool,

    /// Output path prefix.
    #[arg(long, value_name = "PREFIX")]
    pub out: PathBuf,
}
