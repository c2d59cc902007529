use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Background, ExperimentConfig};
use super::stats::{binomial_halfwidth, count_above, isotonic_fit, ks_pvalue, ks_statistic, quantile_select, quantile_sorted};
use crate::detectors::{DetectorEngine, DetectorKind};
use crate::error::{Error, Result};
use crate::gaussian::{quad_norm, CnSampler, RngStream};
use crate::pfa::PfaLaw;
use crate::text::cell;

/// Consecutive failed draws after which a trial gives up.
const MAX_REDRAWS: usize = 1000;

const BOOTSTRAP_RESAMPLES: usize = 100;

/// Stream-id layout: 8-bit phase tag, 24-bit point index, 32-bit block index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
enum Phase {
    FalseAlarm = 1,
    Detection = 2,
    Calibration = 3,
    Permutation = 4,
    Bootstrap = 5,
}

fn stream_id(phase: Phase, point: usize, block: usize) -> u64 {
    debug_assert!(point < 1 << 24 && (block as u64) < 1 << 32);
    ((phase as u64) << 56) | ((point as u64) << 32) | block as u64
}

/// Raw statistic sample from one simulation phase.
#[derive(Clone, Debug)]
pub struct StatisticSample {
    /// In trial order.
    pub values: Vec<f64>,
    /// Draws discarded because the estimate was singular or the statistic undefined.
    pub singular_redraws: usize,
}

#[derive(Clone, Copy, Debug, Default)]
struct TrialOptions {
    /// Real amplitude added along the steering vector to the test vector.
    amplitude: f64,
    /// Swap the test vector with a uniformly chosen secondary vector.
    permute: bool,
}

/// Evaluate the configured detector on `cfg.trials` independent draws of
/// `N` secondary vectors and one test vector.
///
/// Trials are split into blocks of `cfg.block_size`; block `b` uses its own
/// RNG stream so the result does not depend on how blocks are scheduled.
fn run_trials(cfg: &ExperimentConfig, bg: &Background, phase: Phase, point: usize, opts: TrialOptions) -> Result<StatisticSample> {
    let kind = cfg.detector;
    let m = cfg.m;
    let n = cfg.n;
    let known = bg.known_params(kind);
    let engine = DetectorEngine::new(kind, &bg.steering, &known)?;
    let sampler = CnSampler::new(&bg.mean, bg.covariance.cholesky())?;
    let signal: Vec<Complex64> = bg.steering.iter().map(|p| p * opts.amplitude).collect();
    let blocks = cfg.trials.div_ceil(cfg.block_size);

    let per_block: Vec<Result<(Vec<f64>, usize)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = cfg.block_size.min(cfg.trials - b * cfg.block_size);
            let mut rng = RngStream::new(cfg.seed, stream_id(phase, point, b));
            let mut swap_rng = opts.permute.then(|| RngStream::new(cfg.seed, stream_id(Phase::Permutation, point, b)));
            let mut engine = engine.clone();
            let mut sampler = sampler.clone();
            let zero = Complex64::new(0.0, 0.0);
            let mut secondary = vec![zero; n * m];
            let mut test = vec![zero; m];
            let mut out = Vec::with_capacity(count);
            let mut redraws = 0;
            for _ in 0..count {
                let mut failures = 0;
                loop {
                    for x in secondary.chunks_exact_mut(m) {
                        sampler.draw_into(&mut rng, x);
                    }
                    sampler.draw_into(&mut rng, &mut test);
                    for (t, s) in test.iter_mut().zip(&signal) {
                        *t += s;
                    }
                    if let Some(r) = swap_rng.as_mut() {
                        if n > 0 {
                            let j = r.index(n);
                            test.swap_with_slice(&mut secondary[j * m..(j + 1) * m]);
                        }
                    }
                    match engine.evaluate(&secondary, &test) {
                        Ok(res) => {
                            out.push(res.statistic);
                            break;
                        }
                        Err(Error::SingularEstimate { .. } | Error::UndefinedStatistic(_)) => {
                            redraws += 1;
                            failures += 1;
                            if failures >= MAX_REDRAWS {
                                return Err(Error::domain(format!(
                                    "{failures} consecutive degenerate draws; the configuration cannot produce valid statistics"
                                )));
                            }
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok((out, redraws))
        })
        .collect();

    let mut values = Vec::with_capacity(cfg.trials);
    let mut singular_redraws = 0;
    for r in per_block {
        let (v, c) = r?;
        values.extend(v);
        singular_redraws += c;
    }
    Ok(StatisticSample { values, singular_redraws })
}

/// Draw the H₀ statistic sample without a threshold grid.
pub fn simulate_null_statistics(cfg: &ExperimentConfig) -> Result<StatisticSample> {
    let bg = cfg.validate_base()?;
    run_trials(cfg, &bg, Phase::FalseAlarm, 0, TrialOptions::default())
}

/// As [`simulate_null_statistics`] but each trial swaps the test vector with
/// a random secondary vector before evaluation. The data draws are the same
/// as the unpermuted run with the same seed.
pub fn simulate_permuted_statistics(cfg: &ExperimentConfig) -> Result<StatisticSample> {
    let bg = cfg.validate_base()?;
    run_trials(cfg, &bg, Phase::FalseAlarm, 0, TrialOptions { amplitude: 0.0, permute: true })
}

/// Empirical false-alarm curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaCurve {
    pub detector: DetectorKind,
    pub thresholds: Vec<f64>,
    pub empirical_pfa: Vec<f64>,
    /// Closed-form law, absent when none is known.
    pub theoretical_pfa: Option<Vec<f64>>,
    pub trials: usize,
    /// 99% binomial half-width per point, centred on the theoretical value
    /// when there is one and on the empirical value otherwise.
    pub ci_halfwidth: Vec<f64>,
    pub singular_redraws: usize,
    /// Smallest nonzero PFA the sample can resolve.
    pub pfa_floor: f64,
    /// Sorted statistic sample behind the curve.
    #[serde(skip)]
    pub statistics: Vec<f64>,
}

impl FaCurve {
    /// Build a curve from a statistic sample. `theoretical` maps a threshold
    /// to its exact PFA.
    pub fn from_statistics(
        detector: DetectorKind,
        mut statistics: Vec<f64>,
        thresholds: &[f64],
        theoretical: Option<&dyn Fn(f64) -> Result<f64>>,
        singular_redraws: usize,
    ) -> Result<Self> {
        if statistics.is_empty() {
            return Err(Error::invalid("empty statistic sample"));
        }
        statistics.sort_by(f64::total_cmp);
        let trials = statistics.len();
        let empirical_pfa: Vec<f64> =
            thresholds.iter().map(|&t| count_above(&statistics, t) as f64 / trials as f64).collect();
        let theoretical_pfa = match theoretical {
            Some(f) => Some(thresholds.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        let centre = theoretical_pfa.as_ref().unwrap_or(&empirical_pfa);
        let ci_halfwidth = centre.iter().map(|&p| binomial_halfwidth(p, trials)).collect();
        Ok(FaCurve {
            detector,
            thresholds: thresholds.to_vec(),
            empirical_pfa,
            theoretical_pfa,
            trials,
            ci_halfwidth,
            singular_redraws,
            pfa_floor: 1.0 / trials as f64,
            statistics,
        })
    }

    fn centre(&self, i: usize) -> f64 {
        self.theoretical_pfa.as_ref().map_or(self.empirical_pfa[i], |t| t[i])
    }

    pub fn ci_lo(&self, i: usize) -> f64 {
        (self.centre(i) - self.ci_halfwidth[i]).max(0.0)
    }

    pub fn ci_hi(&self, i: usize) -> f64 {
        (self.centre(i) + self.ci_halfwidth[i]).min(1.0)
    }

    /// Expected number of exceedances at point `i` under the theoretical law.
    pub fn expected_count(&self, i: usize) -> Option<f64> {
        self.theoretical_pfa.as_ref().map(|t| t[i] * self.trials as f64)
    }

    /// Compare empirical and theoretical values at every point whose expected
    /// count is at least `min_expected`.
    pub fn ci_check(&self, min_expected: f64) -> Option<CiCheck> {
        let theo = self.theoretical_pfa.as_ref()?;
        let mut check = CiCheck::default();
        for i in 0..self.thresholds.len() {
            if theo[i] * self.trials as f64 >= min_expected {
                check.checked += 1;
                let dev = (self.empirical_pfa[i] - theo[i]).abs();
                if dev > self.ci_halfwidth[i] {
                    check.outside.push(i);
                }
                check.worst_ratio = check.worst_ratio.max(dev / self.ci_halfwidth[i]);
            } else {
                check.excluded.push(i);
            }
        }
        Some(check)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,empirical,theoretical,ci_lo,ci_hi\n");
        for i in 0..self.thresholds.len() {
            let theo = self.theoretical_pfa.as_ref().map(|t| t[i]);
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.thresholds[i],
                self.empirical_pfa[i],
                cell(theo),
                self.ci_lo(i),
                self.ci_hi(i)
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }
}

/// Outcome of [`FaCurve::ci_check`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CiCheck {
    pub checked: usize,
    /// Indices outside the interval.
    pub outside: Vec<usize>,
    /// Indices skipped because too few exceedances are expected.
    pub excluded: Vec<usize>,
    /// Largest |empirical − theoretical| / half-width among checked points.
    pub worst_ratio: f64,
}

impl CiCheck {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.outside.is_empty()
    }
}

fn theoretical_law(cfg: &ExperimentConfig) -> Option<PfaLaw> {
    PfaLaw::new(cfg.detector, cfg.m, cfg.n).ok()
}

/// False-alarm regulation curve over `cfg.thresholds`.
pub fn simulate_fa_curve(cfg: &ExperimentConfig) -> Result<FaCurve> {
    let bg = cfg.validate_thresholds()?;
    let sample = run_trials(cfg, &bg, Phase::FalseAlarm, 0, TrialOptions::default())?;
    let law = theoretical_law(cfg);
    let f = law.map(|l| move |t: f64| l.pfa(t));
    FaCurve::from_statistics(
        cfg.detector,
        sample.values,
        &cfg.thresholds,
        f.as_ref().map(|f| f as &dyn Fn(f64) -> Result<f64>),
        sample.singular_redraws,
    )
}

/// Two-sample Kolmogorov–Smirnov p-value between the statistic samples of
/// two curves built on the same threshold grid.
pub fn ks_compare(a: &FaCurve, b: &FaCurve) -> Result<f64> {
    if a.thresholds != b.thresholds {
        return Err(Error::invalid("curves have different threshold grids"));
    }
    if a.statistics.is_empty() || b.statistics.is_empty() {
        return Err(Error::invalid("curve carries no statistic sample"));
    }
    if a.statistics == b.statistics {
        return Ok(1.0);
    }
    let d = ks_statistic(&a.statistics, &b.statistics);
    Ok(ks_pvalue(d, a.statistics.len(), b.statistics.len()))
}

/// Empirical detection threshold and its bootstrap interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub pfa_target: f64,
    pub trials: usize,
    /// 95% percentile-bootstrap interval from 100 resamples.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub singular_redraws: usize,
}

impl Calibration {
    pub fn overlaps(&self, other: &Calibration) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

/// The `(1 − pfa_target)` quantile of the simulated H₀ statistic.
pub fn calibrate_threshold_empirical(cfg: &ExperimentConfig, pfa_target: f64) -> Result<Calibration> {
    if !(pfa_target > 0.0 && pfa_target <= 1.0) {
        return Err(Error::invalid(format!("target PFA must lie in (0, 1], got {pfa_target}")));
    }
    let need = (100.0 / pfa_target).ceil() as usize;
    if cfg.trials < need {
        return Err(Error::InsufficientTrials { have: cfg.trials, need });
    }
    let bg = cfg.validate_base()?;
    if pfa_target == 1.0 {
        return Ok(Calibration {
            threshold: 0.0,
            pfa_target,
            trials: cfg.trials,
            ci_lo: 0.0,
            ci_hi: 0.0,
            singular_redraws: 0,
        });
    }
    let sample = run_trials(cfg, &bg, Phase::Calibration, 0, TrialOptions::default())?;
    let q = 1.0 - pfa_target;
    let mut values = sample.values;
    let threshold = quantile_select(&mut values.clone(), q);

    let n = values.len();
    values.sort_by(f64::total_cmp);
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(cfg.seed, stream_id(Phase::Bootstrap, 0, r));
            let mut resample: Vec<f64> = (0..n).map(|_| values[rng.index(n)]).collect();
            quantile_select(&mut resample, q)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    Ok(Calibration {
        threshold,
        pfa_target,
        trials: n,
        ci_lo: quantile_sorted(&boot, 0.025),
        ci_hi: quantile_sorted(&boot, 0.975),
        singular_redraws: sample.singular_redraws,
    })
}

/// Detection probability against SNR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdCurve {
    pub detector: DetectorKind,
    pub snr_db: Vec<f64>,
    pub pd: Vec<f64>,
    pub pfa_target: f64,
    pub calibrated_threshold: f64,
    /// Bootstrap interval of the threshold when it was calibrated by simulation.
    pub threshold_ci: Option<(f64, f64)>,
    pub trials: usize,
    pub singular_redraws: usize,
}

impl PdCurve {
    pub fn standard_error(&self, i: usize) -> f64 {
        let p = self.pd[i];
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn ci_halfwidth(&self, i: usize) -> f64 {
        binomial_halfwidth(self.pd[i], self.trials)
    }

    /// Largest drop below the isotonic (nondecreasing) fit, in standard
    /// errors of the binomial estimate. Points with zero variance use the
    /// floor `1/trials`.
    pub fn monotonicity_violation(&self) -> Result<f64> {
        let floor = 1.0 / self.trials as f64;
        let se: Vec<f64> = (0..self.pd.len()).map(|i| self.standard_error(i).max(floor)).collect();
        let w: Vec<f64> = se.iter().map(|s| 1.0 / (s * s)).collect();
        let fit = isotonic_fit(&self.pd, &w)?;
        Ok(fit.iter().zip(&self.pd).zip(&se).map(|((f, p), s)| (f - p).abs() / s).fold(0.0, f64::max))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,empirical,theoretical,ci_lo,ci_hi\n");
        for i in 0..self.snr_db.len() {
            let h = self.ci_halfwidth(i);
            s.push_str(&format!(
                "{},{},,{},{}\n",
                self.snr_db[i],
                self.pd[i],
                (self.pd[i] - h).max(0.0),
                (self.pd[i] + h).min(1.0)
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }
}

/// Real amplitude `α` with `α² · pᴴΣ⁻¹p = 10^(snr_db/10)`.
pub fn amplitude_for_snr(bg: &Background, snr_db: f64) -> Result<f64> {
    let energy = quad_norm(&bg.steering, &bg.covariance)?;
    Ok((10f64.powf(snr_db / 10.0) / energy).sqrt())
}

/// Detection curve over `cfg.snr_grid_db` at the threshold giving `pfa_target`.
///
/// Every SNR point reuses the same noise draws (common random numbers), so
/// the curve differs between points only through the injected amplitude.
pub fn simulate_pd_curve(cfg: &ExperimentConfig, pfa_target: f64) -> Result<PdCurve> {
    let bg = cfg.validate_snr()?;
    if !(pfa_target > 0.0 && pfa_target < 1.0) {
        return Err(Error::invalid(format!("target PFA must lie in (0, 1), got {pfa_target}")));
    }
    let (threshold, threshold_ci) = match theoretical_law(cfg) {
        Some(law) => (law.invert(pfa_target)?, None),
        None => {
            let c = calibrate_threshold_empirical(cfg, pfa_target)?;
            (c.threshold, Some((c.ci_lo, c.ci_hi)))
        }
    };
    let mut pd = Vec::with_capacity(cfg.snr_grid_db.len());
    let mut singular_redraws = 0;
    for &snr in &cfg.snr_grid_db {
        let amplitude = amplitude_for_snr(&bg, snr)?;
        let s = run_trials(cfg, &bg, Phase::Detection, 0, TrialOptions { amplitude, permute: false })?;
        singular_redraws += s.singular_redraws;
        pd.push(s.values.iter().filter(|&&v| v > threshold).count() as f64 / s.values.len() as f64);
    }
    Ok(PdCurve {
        detector: cfg.detector,
        snr_db: cfg.snr_grid_db.clone(),
        pd,
        pfa_target,
        calibrated_threshold: threshold,
        threshold_ci,
        trials: cfg.trials,
        singular_redraws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: DetectorKind, trials: usize) -> ExperimentConfig {
        ExperimentConfig::new(kind, 3, 6, 0.4, Complex64::new(3.0, 4.0), trials, 11)
    }

    #[test]
    fn zero_threshold_gives_unit_pfa() {
        let c = cfg(DetectorKind::Mf, 10_000).with_thresholds(vec![0.0]);
        let curve = simulate_fa_curve(&c).unwrap();
        assert_eq!(curve.empirical_pfa, vec![1.0]);
        assert_eq!(curve.theoretical_pfa, Some(vec![1.0]));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut c = cfg(DetectorKind::Amf, 1000).with_thresholds(vec![0.5, 1.0, 2.0]);
        c.block_size = 100;
        let a = simulate_fa_curve(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_fa_curve(&c)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.statistics, b.statistics);
    }

    #[test]
    fn ks_self_is_one_and_grids_must_match() {
        let c = cfg(DetectorKind::KellyPlugin, 2000).with_thresholds(vec![0.1, 0.2]);
        let a = simulate_fa_curve(&c).unwrap();
        assert_eq!(ks_compare(&a, &a).unwrap(), 1.0);
        let mut other = a.clone();
        other.thresholds[0] = 0.15;
        assert!(ks_compare(&a, &other).is_err());
    }

    #[test]
    fn calibration_requires_enough_trials() {
        let c = cfg(DetectorKind::KellyKnownMean, 999);
        match calibrate_threshold_empirical(&c, 0.1) {
            Err(Error::InsufficientTrials { have: 999, need: 1000 }) => {}
            other => panic!("{other:?}"),
        }
        let c = cfg(DetectorKind::KellyKnownMean, 100);
        assert_eq!(calibrate_threshold_empirical(&c, 1.0).unwrap().threshold, 0.0);
    }

    #[test]
    fn pd_curve_is_deterministic_and_monotone() {
        let c = cfg(DetectorKind::Amf, 4000).with_snr_grid(vec![-5.0, 5.0, 10.0, 20.0]);
        let a = simulate_pd_curve(&c, 0.01).unwrap();
        let b = simulate_pd_curve(&c, 0.01).unwrap();
        assert_eq!(a, b);
        assert!(a.pd.windows(2).all(|w| w[0] <= w[1]), "{:?}", a.pd);
        assert_eq!(a.monotonicity_violation().unwrap(), 0.0);
        assert!(a.to_csv().starts_with("snr_db,empirical,theoretical,ci_lo,ci_hi\n"));
    }

    #[test]
    fn permutation_changes_only_the_swap() {
        let c = cfg(DetectorKind::KellyGeneralized, 500);
        let plain = simulate_null_statistics(&c).unwrap();
        let perm = simulate_permuted_statistics(&c).unwrap();
        assert_eq!(plain.values.len(), perm.values.len());
        assert_ne!(plain.values, perm.values);
    }

    #[test]
    fn csv_layout() {
        let c = cfg(DetectorKind::KellyGeneralized, 200).with_thresholds(vec![0.5]);
        let curve = simulate_fa_curve(&c).unwrap();
        assert!(curve.theoretical_pfa.is_none());
        let csv = curve.to_csv();
        let row = csv.lines().nth(1).unwrap();
        assert_eq!(row.split(',').nth(2), Some(""));
    }
}
