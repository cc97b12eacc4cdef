//! Monte Carlo harness.
//!
//! Reproduces the simulation protocol: one fixed channel draw per sweep
//! point, `P` independent observation redraws on top of it, normalized
//! mean-square errors for both estimators against the theoretical
//! variance, and the normalized-statistic histogram with a
//! Kolmogorov-Smirnov Gaussianity check.
//!
//! Reproducibility contract: trial `i` draws from `RngStream(master_seed,
//! i)` and channels from a dedicated substream of the master seed, so a
//! given config yields bit-identical results at any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_channels, sample_observations, ChannelSet, ScenarioConfig};
use crate::detequiv::theta_variance;
use crate::error::{Error, Result};
use crate::estimators::g_estimate;
use crate::rng::RngStream;

/// Stream domain for channel generation, disjoint from trial indices.
const CHANNEL_STREAM: u64 = 0xC4A2_2E00_0000_0000;

/// What a sweep varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sweep {
    /// Signal-to-interference ratios, in dB.
    SirDb(Vec<f64>),
    /// Slot counts `T`.
    Slots(Vec<usize>),
    None,
}

/// Histogram binning for the normalized statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bin_width: f64,
    pub range: (f64, f64),
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            bin_width: 0.2,
            range: (-5.0, 5.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    /// Monte Carlo iterations P.
    pub trials: usize,
    pub sweep: Sweep,
    pub histogram: HistogramSpec,
    pub master_seed: u64,
    /// Worker threads; 0 lets the runtime decide. Results do not depend
    /// on this value.
    pub parallelism: usize,
    /// Redraw the channels on every trial instead of holding one draw
    /// fixed. Off by default: the conditional-on-channel protocol is the
    /// reference; this mode exists for robustness studies. Errors are
    /// then normalized per trial against that trial's own ground truth.
    pub fresh_channels: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidInput("trial count must be >= 1".into()));
        }
        if self.histogram.bin_width <= 0.0 {
            return Err(Error::InvalidInput("bin width must be positive".into()));
        }
        if self.histogram.range.0 >= self.histogram.range.1 {
            return Err(Error::InvalidInput(
                "histogram range must satisfy lo < hi".into(),
            ));
        }
        Ok(())
    }
}

/// One point of an MSE sweep, all dB values as `10 log10`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseCurvePoint {
    pub sweep_value: f64,
    /// Ground-truth mutual information at this point, nats per antenna.
    pub i_true: f64,
    /// Theoretical variance of `N (I_G - I)`.
    pub theta: f64,
    pub mse_th_db: f64,
    pub mse_g_emp_db: f64,
    pub mse_se_emp_db: f64,
    /// Set when the theoretical variance is non-positive; the dB fields
    /// are NaN in that case.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramResult {
    /// `bins + 1` edges.
    pub bin_edges: Vec<f64>,
    /// Normalized so the densities integrate to one over the bins.
    pub densities: Vec<f64>,
    pub ks_statistic: f64,
    pub sample_count: usize,
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10.0_f64.powf(x / 10.0)
}

fn with_pool<R: Send>(parallelism: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if parallelism == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// One Monte Carlo trial's outputs: both estimates plus the ground truth
/// of the channels the trial actually saw.
struct TrialOutcome {
    i_g: f64,
    i_se: f64,
    i_true: f64,
}

/// Runs `trials` independent trials, ordered by trial index. In the
/// default mode the channels are fixed and observations are redrawn; with
/// `fresh_channels` the channels are redrawn per trial too.
fn run_trials(ch: &ChannelSet, cfg: &ExperimentConfig) -> Result<Vec<TrialOutcome>> {
    let h = ch.h_matrices();
    let m = ch.scenario.samples_per_slot;
    let base_i = crate::estimators::ground_truth_mi(ch)?;
    let master_seed = cfg.master_seed;
    let fresh = cfg.fresh_channels;
    with_pool(cfg.parallelism, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = RngStream::new(master_seed, trial as u64);
                if fresh {
                    let chan_rng =
                        RngStream::new(master_seed, CHANNEL_STREAM).substream(1 + trial as u64);
                    let ch_i = generate_channels(&ch.scenario, &chan_rng)?;
                    let obs = sample_observations(&ch_i, m, &mut rng)?;
                    let report = g_estimate(&ch_i.h_matrices(), &obs)?;
                    Ok(TrialOutcome {
                        i_g: report.i_g,
                        i_se: report.i_se,
                        i_true: crate::estimators::ground_truth_mi(&ch_i)?,
                    })
                } else {
                    let obs = sample_observations(ch, m, &mut rng)?;
                    let report = g_estimate(&h, &obs)?;
                    Ok(TrialOutcome {
                        i_g: report.i_g,
                        i_se: report.i_se,
                        i_true: base_i,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// MSE sweep over SIR or slot count: per point, channels are regenerated
/// once (fresh SIR scaling on the same base draws) and held fixed across
/// all trials, matching the conditional-on-channel MSE definition.
pub fn run_mse_sweep(cfg: &ExperimentConfig) -> Result<Vec<MseCurvePoint>> {
    cfg.validate()?;
    let points: Vec<(f64, ScenarioConfig)> = match &cfg.sweep {
        Sweep::SirDb(values) => values
            .iter()
            .map(|&v| {
                let mut s = cfg.scenario.clone();
                s.sir = from_db(v);
                (v, s)
            })
            .collect(),
        Sweep::Slots(values) => values
            .iter()
            .map(|&t| {
                let mut s = cfg.scenario.clone();
                s.slots = t;
                (t as f64, s)
            })
            .collect(),
        Sweep::None => {
            return Err(Error::InvalidInput(
                "an MSE sweep needs a non-empty sweep specification".into(),
            ))
        }
    };
    if points.is_empty() {
        return Err(Error::InvalidInput("sweep value list is empty".into()));
    }

    let channel_rng = RngStream::new(cfg.master_seed, CHANNEL_STREAM);
    let mut curve = Vec::with_capacity(points.len());
    for (sweep_value, scenario) in points {
        let ch = generate_channels(&scenario, &channel_rng)?;
        let i_true = crate::estimators::ground_truth_mi(&ch)?;
        let m = scenario.samples_per_slot;
        let (theta, degenerate) = match theta_variance(&ch, m) {
            Ok(v) => (v, false),
            Err(Error::NonPositiveVariance { value }) => (value, true),
            Err(e) => return Err(e),
        };
        let mut point_cfg = cfg.clone();
        point_cfg.scenario = scenario.clone();
        let results = run_trials(&ch, &point_cfg)?;
        let n2 = (scenario.receive_antennas as f64).powi(2);
        let p = cfg.trials as f64;
        let mut sum_g = 0.0;
        let mut sum_se = 0.0;
        let mut finite = true;
        for outcome in &results {
            let denom = outcome.i_true * outcome.i_true;
            if denom == 0.0 {
                finite = false;
                break;
            }
            sum_g += n2 * (outcome.i_g - outcome.i_true).powi(2) / denom;
            sum_se += n2 * (outcome.i_se - outcome.i_true).powi(2) / denom;
        }
        let i_sq = i_true * i_true;
        let point = if degenerate || i_sq == 0.0 || !finite {
            MseCurvePoint {
                sweep_value,
                i_true,
                theta,
                mse_th_db: f64::NAN,
                mse_g_emp_db: f64::NAN,
                mse_se_emp_db: f64::NAN,
                degenerate: true,
            }
        } else {
            MseCurvePoint {
                sweep_value,
                i_true,
                theta,
                mse_th_db: db(theta / i_sq),
                mse_g_emp_db: db(sum_g / p),
                mse_se_emp_db: db(sum_se / p),
                degenerate: false,
            }
        };
        curve.push(point);
    }
    Ok(curve)
}

/// Draws `P` trials and returns the normalized statistics
/// `z_i = (N / sqrt(theta)) (I_G^i - I)`, ordered by trial. `theta` comes
/// from the base channel draw; in `fresh_channels` mode each trial is
/// centered on its own ground truth.
pub fn normalized_statistics(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let channel_rng = RngStream::new(cfg.master_seed, CHANNEL_STREAM);
    let ch = generate_channels(&cfg.scenario, &channel_rng)?;
    let theta = theta_variance(&ch, cfg.scenario.samples_per_slot)?;
    let scale = cfg.scenario.receive_antennas as f64 / theta.sqrt();
    let results = run_trials(&ch, cfg)?;
    Ok(results
        .iter()
        .map(|outcome| scale * (outcome.i_g - outcome.i_true))
        .collect())
}

/// Bins the normalized statistic and attaches the Kolmogorov-Smirnov
/// distance to the standard normal.
pub fn run_histogram(cfg: &ExperimentConfig) -> Result<HistogramResult> {
    let samples = normalized_statistics(cfg)?;
    histogram_from_samples(&samples, &cfg.histogram)
}

/// Bins samples into the configured grid (out-of-range samples are
/// clamped into the boundary bins so the density integrates to one) and
/// computes the KS statistic on the raw samples.
pub fn histogram_from_samples(samples: &[f64], spec: &HistogramSpec) -> Result<HistogramResult> {
    if samples.is_empty() {
        return Err(Error::InvalidInput(
            "histogram needs at least one sample".into(),
        ));
    }
    let (lo, hi) = spec.range;
    let bins = (((hi - lo) / spec.bin_width).round() as usize).max(1);
    let bin_edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * spec.bin_width).collect();
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let idx = ((x - lo) / spec.bin_width).floor();
        let idx = (idx.max(0.0) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let norm = samples.len() as f64 * spec.bin_width;
    let densities = counts.iter().map(|&c| c as f64 / norm).collect();
    Ok(HistogramResult {
        bin_edges,
        densities,
        ks_statistic: ks_statistic(samples)?,
        sample_count: samples.len(),
    })
}

/// Standard normal CDF, accurate to better than 1e-15.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov-Smirnov sup-distance between the empirical CDF of the
/// samples and the standard normal CDF. Both one-sided gaps are taken at
/// every sorted sample point.
pub fn ks_statistic(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput(
            "KS statistic needs at least one sample".into(),
        ));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("KS samples must not be NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered above"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let phi = standard_normal_cdf(x);
        d = d.max((i as f64 + 1.0) / n - phi).max(phi - i as f64 / n);
    }
    Ok(d)
}
