use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cfar_core::detectors::DetectorKind;
use cfar_core::gaussian::{build_toeplitz_covariance, ComplexVector};
use cfar_core::hsi::{
    empirical_pfa_from_map_thinned, load_cube, preprocess, qq_plot_data, save_cube, sliding_window_detect,
    synthetic_complex_cube, synthetic_real_cube, HyperCube, Region, WindowSpec,
};
use cfar_core::montecarlo::{
    calibrate_threshold_empirical, simulate_fa_curve, simulate_pd_curve, ExperimentConfig, SteeringSpec, VectorSpec,
};
use cfar_core::pfa::{eta_lambda_transform, PfaLaw, ThresholdScale};
use cfar_core::text::{format_complex, parse_complex, parse_vector_columns};
use num_complex::Complex64;
use serde::Serialize;

use crate::args::*;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Domain(_) => "domain",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Io(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg: String = self.message().split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "cfar: error kind={} code={} msg={msg}", self.kind(), self.code())
    }
}

impl From<cfar_core::Error> for CliError {
    fn from(e: cfar_core::Error) -> Self {
        match e {
            cfar_core::Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn read_cube(path: &Path) -> CliResult<HyperCube> {
    load_cube(path).map_err(|e| match e {
        cfar_core::Error::Io(io) => io_err(path, io),
        other => CliError::Domain(format!("{}: {other}", path.display())),
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Collects output files and writes the manifest last.
struct Outputs<'a> {
    prefix: &'a Path,
    files: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(prefix: &'a Path) -> Self {
        Outputs { prefix, files: Vec::new() }
    }

    fn write(&mut self, suffix: &str, bytes: &[u8]) -> CliResult<()> {
        let path = with_suffix(self.prefix, suffix);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.record(&path);
        Ok(())
    }

    fn write_cube(&mut self, suffix: &str, cube: &HyperCube) -> CliResult<()> {
        let path = with_suffix(self.prefix, suffix);
        save_cube(cube, &path).map_err(|e| io_err(&path, e))?;
        self.record(&path);
        Ok(())
    }

    fn record(&mut self, path: &Path) {
        self.files.push(path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    }

    fn finish<T: Serialize>(mut self, command: &str, argv: &[String], resolved: &T) -> CliResult<()> {
        let manifest = Manifest {
            tool: "cfar",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv,
            resolved,
            outputs: &self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let files = std::mem::take(&mut self.files);
        self.write(".manifest.json", text.as_bytes())?;
        self.files = files;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    /// Arguments after the program name, without `--workers`.
    argv: &'a [String],
    resolved: &'a T,
    outputs: &'a [String],
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("grid '{spec}' is not LO:HI:COUNT"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

fn linear_to_supremum(kind: DetectorKind, n: usize) -> Vec<f64> {
    let sup = kind.domain_max(n);
    if sup.is_finite() {
        // the supremum itself is not a valid threshold
        (0..41).map(|i| sup * i as f64 / 41.0).collect()
    } else {
        (0..41).map(|i| i as f64).collect()
    }
}

fn default_fa_grid(cfg: &ExperimentConfig) -> CliResult<Vec<f64>> {
    match PfaLaw::new(cfg.detector, cfg.m, cfg.n) {
        Ok(law) => (0..=16).map(|k| law.invert(10f64.powf(-k as f64 / 4.0)).map_err(CliError::from)).collect(),
        Err(_) => Ok(linear_to_supremum(cfg.detector, cfg.n)),
    }
}

fn steering_entries(path: &Path) -> CliResult<Vec<String>> {
    let v = parse_vector_columns(&read_text(path)?).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    Ok(v.iter().map(|z| format_complex(*z)).collect())
}

fn build_config(e: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &e.config {
        Some(path) => ExperimentConfig::from_json(&read_text(path)?)
            .map_err(|err| CliError::Domain(format!("{}: {err}", path.display())))?,
        None => {
            let detector = e
                .detector
                .ok_or_else(|| CliError::Usage("--detector is required when no --config is given".into()))?;
            ExperimentConfig::new(detector, 5, 10, 0.0, Complex64::new(0.0, 0.0), 100_000, 0)
        }
    };
    if let Some(d) = e.detector {
        cfg.detector = d;
    }
    if let Some(m) = e.m {
        cfg.m = m;
    }
    if let Some(n) = e.n {
        cfg.n = n;
    }
    if let Some(rho) = e.rho {
        cfg.rho = rho;
    }
    if let Some(mu) = &e.mu {
        parse_complex(mu).map_err(|err| CliError::Usage(format!("--mu: {err}")))?;
        cfg.mu = VectorSpec::Constant(mu.clone());
    }
    if let Some(t) = e.trials {
        cfg.trials = t;
    }
    if let Some(s) = e.seed {
        cfg.seed = s;
    }
    if let Some(path) = &e.steering {
        cfg.steering = SteeringSpec::Entries(steering_entries(path)?);
    }
    if let Some(b) = e.block_size {
        cfg.block_size = b;
    }
    cfg.validate_base()?;
    Ok(cfg)
}

pub fn simulate_fa(a: &SimulateFaArgs, argv: &[String]) -> CliResult<()> {
    let mut cfg = build_config(&a.exp)?;
    cfg.thresholds = match (&a.thresholds, &a.grid) {
        (Some(t), _) => t.clone(),
        (None, Some(g)) => parse_grid(g)?,
        (None, None) if !cfg.thresholds.is_empty() => cfg.thresholds.clone(),
        (None, None) => default_fa_grid(&cfg)?,
    };
    let curve = simulate_fa_curve(&cfg)?;
    let mut out = Outputs::new(&a.exp.out);
    out.write(".csv", curve.to_csv().as_bytes())?;
    out.write(".json", (curve.to_json() + "\n").as_bytes())?;
    out.finish("simulate-fa", argv, &cfg)
}

pub fn simulate_pd(a: &SimulatePdArgs, argv: &[String]) -> CliResult<()> {
    let mut cfg = build_config(&a.exp)?;
    cfg.snr_grid_db = match (&a.snr_db, &a.snr_grid) {
        (Some(s), _) => s.clone(),
        (None, Some(g)) => parse_grid(g)?,
        (None, None) if !cfg.snr_grid_db.is_empty() => cfg.snr_grid_db.clone(),
        (None, None) => parse_grid("-10:30:41")?,
    };
    let curve = simulate_pd_curve(&cfg, a.pfa)?;
    let mut out = Outputs::new(&a.exp.out);
    out.write(".csv", curve.to_csv().as_bytes())?;
    out.write(".json", (curve.to_json() + "\n").as_bytes())?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        experiment: &'a ExperimentConfig,
        pfa: f64,
    }
    out.finish("simulate-pd", argv, &Resolved { experiment: &cfg, pfa: a.pfa })
}

pub fn threshold(a: &ThresholdArgs, argv: &[String]) -> CliResult<String> {
    let mut line = format!("detector={} m={} N={} pfa={}", a.detector, a.m, a.n, a.pfa);
    let lambda = if a.detector == DetectorKind::KellyGeneralized {
        if !(a.pfa > 0.0 && a.pfa <= 1.0) {
            return Err(CliError::Domain(format!("target PFA must lie in (0, 1], got {}", a.pfa)));
        }
        let trials = a.trials.unwrap_or((100.0 / a.pfa).ceil() as usize);
        let cfg = ExperimentConfig::new(a.detector, a.m, a.n, a.rho, Complex64::new(0.0, 0.0), trials, a.seed);
        let cal = calibrate_threshold_empirical(&cfg, a.pfa)?;
        line.push_str(&format!(" lambda={} lambda_ci_lo={} lambda_ci_hi={}", cal.threshold, cal.ci_lo, cal.ci_hi));
        cal.threshold
    } else {
        let lambda = PfaLaw::new(a.detector, a.m, a.n)?.invert(a.pfa)?;
        line.push_str(&format!(" lambda={lambda}"));
        lambda
    };
    if let Ok(eta) = eta_lambda_transform(a.detector, lambda, ThresholdScale::LambdaToEta, a.n, a.m) {
        line.push_str(&format!(" eta={eta}"));
    }
    if let Some(prefix) = &a.out {
        let mut out = Outputs::new(prefix);
        out.write(".txt", format!("{line}\n").as_bytes())?;
        out.finish("threshold", argv, a)?;
    }
    Ok(line)
}

pub fn detect(a: &DetectArgs, argv: &[String]) -> CliResult<()> {
    let cube = read_cube(&a.cube)?;
    if !cube.is_complex() {
        return Err(CliError::Domain(format!("{}: cube is real; run complexify first", a.cube.display())));
    }
    let steering = ComplexVector::new(
        parse_vector_columns(&read_text(&a.steering)?).map_err(|e| CliError::Domain(format!("{}: {e}", a.steering.display())))?.into_vec(),
    )?;
    let window = WindowSpec { size: a.window, exclude_center: !a.include_center };
    let map = sliding_window_detect(&cube, a.detector, &steering, window)?;
    let thresholds = match (&a.thresholds, &a.grid) {
        (Some(t), _) => t.clone(),
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => linear_to_supremum(a.detector, map.n),
    };
    if a.thin == 0 {
        return Err(CliError::Usage("--thin must be at least 1".into()));
    }
    let curve = empirical_pfa_from_map_thinned(&map, &thresholds, a.thin)?;
    let mut out = Outputs::new(&a.out);
    out.write(".map.csv", map.to_csv().as_bytes())?;
    out.write_cube(".map.jcube", &map.to_cube()?)?;
    out.write(".pfa.csv", curve.to_csv().as_bytes())?;
    out.write(".pfa.json", (curve.to_json() + "\n").as_bytes())?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        args: &'a DetectArgs,
        secondary_per_pixel: usize,
        thresholds: &'a [f64],
    }
    out.finish("detect", argv, &Resolved { args: a, secondary_per_pixel: map.n, thresholds: &thresholds })
}

pub fn complexify(a: &ComplexifyArgs, argv: &[String]) -> CliResult<()> {
    let cube = read_cube(&a.cube)?;
    if a.factor == 0 {
        return Err(CliError::Usage("--factor must be at least 1".into()));
    }
    let after = cube.bands().div_ceil(a.factor);
    let count = a.count.unwrap_or(after.saturating_sub(a.start));
    let result = preprocess(&cube, a.factor, a.start, count)?;
    let mut out = Outputs::new(&a.out);
    out.write_cube(".jcube", &result)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        args: &'a ComplexifyArgs,
        count: usize,
    }
    out.finish("complexify", argv, &Resolved { args: a, count })
}

pub fn qqplot(a: &QqArgs, argv: &[String]) -> CliResult<()> {
    let cube = read_cube(&a.cube)?;
    let region = match &a.region {
        Some(s) => {
            let v: Vec<usize> = s
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("--region '{s}' is not ROW,COL,HEIGHT,WIDTH")))?;
            if v.len() != 4 {
                return Err(CliError::Usage(format!("--region '{s}' is not ROW,COL,HEIGHT,WIDTH")));
            }
            Region { row: v[0], col: v[1], height: v[2], width: v[3] }
        }
        None => Region { row: 0, col: 0, height: cube.height(), width: cube.width() },
    };
    let qq = qq_plot_data(&cube, a.band, region)?;
    let mut out = Outputs::new(&a.out);
    out.write(".csv", qq.to_csv().as_bytes())?;
    out.write(".json", (serde_json::to_string_pretty(&qq).expect("qq serializes") + "\n").as_bytes())?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        args: &'a QqArgs,
        region: Region,
    }
    out.finish("qqplot", argv, &Resolved { args: a, region })
}

pub fn gen_cube(a: &GenCubeArgs, argv: &[String]) -> CliResult<()> {
    let mu = parse_complex(&a.mu).map_err(|e| CliError::Usage(format!("--mu: {e}")))?;
    let cube = if a.real {
        if a.rho != 0.0 || mu.im != 0.0 {
            return Err(CliError::Domain("--real needs --rho 0 and a real --mu".into()));
        }
        synthetic_real_cube(a.width, a.height, a.m, mu.re, 1.0, a.seed)?
    } else {
        let mean = ComplexVector::constant(a.m, mu)?;
        let cov = build_toeplitz_covariance(a.rho, a.m)?;
        synthetic_complex_cube(a.width, a.height, &mean, &cov, a.seed)?
    };
    let mut out = Outputs::new(&a.out);
    out.write_cube(".jcube", &cube)?;
    out.finish("gen-cube", argv, a)
}
