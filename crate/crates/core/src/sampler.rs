//! Adaptive slice selection from an entropy profile.
//!
//! The adaptive strategy smooths the profile, takes absolute forward
//! differences, normalizes them into weights, accumulates the weights
//! into a CDF, and inverse-samples it with uniform quantiles, so slices
//! around steep entropy changes are selected preferentially. Center and
//! uniform baselines are provided for comparison.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glcm::EntropyProfile;
use crate::smoothing::{sg_smooth, SgConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Entropy-derivative weighted inverse-CDF sampling.
    Glcm,
    /// Contiguous block around the middle of the curated stack.
    Center,
    /// Evenly spaced positions.
    Uniform,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Glcm => write!(f, "glcm"),
            Strategy::Center => write!(f, "center"),
            Strategy::Uniform => write!(f, "uniform"),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "glcm" => Ok(Strategy::Glcm),
            "center" => Ok(Strategy::Center),
            "uniform" => Ok(Strategy::Uniform),
            other => Err(format!("unknown strategy \"{other}\" (expected glcm, center, or uniform)")),
        }
    }
}

/// How the uniform quantiles feeding the inverse CDF are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantileMode {
    /// Deterministic stratified midpoints `(m + 0.5) / N`.
    Midpoint,
    /// N uniform draws from a seeded generator; reproducible per seed.
    Seeded(u64),
}

/// Full sampling configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub n_samples: usize,
    pub strategy: Strategy,
    pub sg: SgConfig,
    pub quantile_mode: QuantileMode,
    pub allow_duplicates: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n_samples: 16,
            strategy: Strategy::Glcm,
            sg: SgConfig::default(),
            quantile_mode: QuantileMode::Midpoint,
            allow_duplicates: false,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::invalid("n must be >= 1"));
        }
        self.sg.validate()
    }
}

/// Configuration snapshot stored in a plan document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub n: usize,
    pub sg_window: usize,
    pub sg_order: usize,
    pub quantile_mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub allow_duplicates: bool,
}

impl From<&SamplingConfig> for PlanConfig {
    fn from(config: &SamplingConfig) -> Self {
        let (quantile_mode, seed) = match config.quantile_mode {
            QuantileMode::Midpoint => ("midpoint".to_string(), None),
            QuantileMode::Seeded(seed) => ("seeded".to_string(), Some(seed)),
        };
        PlanConfig {
            n: config.n_samples,
            sg_window: config.sg.window,
            sg_order: config.sg.order,
            quantile_mode,
            seed,
            allow_duplicates: config.allow_duplicates,
        }
    }
}

/// Selected slices for one volume, with the weights and CDF that
/// produced them (empty for the baseline strategies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub volume_id: String,
    pub strategy: Strategy,
    pub config: PlanConfig,
    /// True when the derivative carried no information (constant profile
    /// or single slice) and weights fell back to uniform.
    pub degenerate: bool,
    /// Original volume slice indices, ascending.
    pub selected: Vec<usize>,
    pub weights: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl SamplingPlan {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("plan serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))
    }
}

/// Absolute forward differences of a profile, normalized to sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffWeights {
    /// Weight of each adjacent pair; entry `k` covers the step from
    /// profile position `k` to `k + 1`, so the vector is one shorter
    /// than the profile.
    pub weights: Vec<f64>,
    /// Set when every difference was zero and the weights fell back to
    /// uniform.
    pub degenerate: bool,
}

/// Differentiate, take absolute values, and normalize into weights.
///
/// A constant input has no derivative mass anywhere; the weights then
/// fall back to uniform and the degenerate flag is set.
pub fn diff_abs_normalize(smoothed: &[f64]) -> Result<DiffWeights> {
    let n = smoothed.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 values to differentiate, got {n}"
        )));
    }
    let diffs: Vec<f64> = smoothed.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let total: f64 = diffs.iter().sum();
    if total > 0.0 {
        Ok(DiffWeights {
            weights: diffs.into_iter().map(|d| d / total).collect(),
            degenerate: false,
        })
    } else {
        Ok(DiffWeights {
            weights: vec![1.0 / (n - 1) as f64; n - 1],
            degenerate: true,
        })
    }
}

/// Partial sums of a weight vector, with the final entry forced to 1.
pub fn build_cdf(weights: &[f64]) -> Result<Vec<f64>> {
    let mut sum = 0.0;
    let mut cdf = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        if w < 0.0 {
            return Err(Error::invalid(format!("negative weight {w} at position {i}")));
        }
        sum += w;
        cdf.push(sum);
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("weights sum to {sum}, expected 1")));
    }
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    Ok(cdf)
}

/// For each quantile, the smallest position whose CDF value reaches it.
/// Results are in quantile order.
pub fn inverse_cdf_sample(cdf: &[f64], quantiles: &[f64]) -> Vec<usize> {
    debug_assert!(!cdf.is_empty());
    quantiles
        .iter()
        .map(|&u| {
            debug_assert!(u > 0.0 && u < 1.0, "quantile {u} outside (0,1)");
            cdf.partition_point(|&f| f < u).min(cdf.len() - 1)
        })
        .collect()
}

fn make_quantiles(n: usize, mode: QuantileMode) -> Vec<f64> {
    match mode {
        QuantileMode::Midpoint => (0..n).map(|m| (m as f64 + 0.5) / n as f64).collect(),
        QuantileMode::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                })
                .collect()
        }
    }
}

/// Run the full adaptive chain on an entropy profile.
///
/// Sampled positions index the weight vector and therefore the curated
/// profile slots; they are mapped back to original volume indices via
/// `profile.slice_indices`. Without `allow_duplicates`, repeated hits are
/// replaced by the highest-weight unchosen positions (lower index on
/// ties) until `min(N, n)` distinct slices are selected.
pub fn sample_glcm(profile: &EntropyProfile, config: &SamplingConfig) -> Result<SamplingPlan> {
    config.validate()?;
    let n = profile.values.len();
    if n == 0 || profile.slice_indices.len() != n {
        return Err(Error::invalid("profile must hold one value per curated slice"));
    }
    if n == 1 {
        return Ok(SamplingPlan {
            volume_id: profile.volume_id.clone(),
            strategy: Strategy::Glcm,
            config: config.into(),
            degenerate: true,
            selected: vec![profile.slice_indices[0]],
            weights: vec![1.0],
            cdf: vec![1.0],
        });
    }

    let smoothed = sg_smooth(&profile.values, &config.sg)?;
    let DiffWeights { weights, degenerate } = diff_abs_normalize(&smoothed)?;
    let cdf = build_cdf(&weights)?;
    let quantiles = make_quantiles(config.n_samples, config.quantile_mode);
    let positions = inverse_cdf_sample(&cdf, &quantiles);

    let selected = if config.allow_duplicates {
        let mut selected: Vec<usize> = positions.iter().map(|&p| profile.slice_indices[p]).collect();
        selected.sort_unstable();
        selected
    } else {
        let target = config.n_samples.min(n);
        let mut chosen = vec![false; n];
        let mut count = 0;
        for &p in &positions {
            if !chosen[p] {
                chosen[p] = true;
                count += 1;
            }
        }
        if count < target {
            let mut refill: Vec<usize> = (0..weights.len()).filter(|&i| !chosen[i]).collect();
            refill.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
            for i in refill {
                if count == target {
                    break;
                }
                chosen[i] = true;
                count += 1;
            }
        }
        // Positions can only reach the first n-1 slots; when N >= n the
        // remaining slices complete the plan in ascending order.
        let mut slot = 0;
        while count < target {
            if !chosen[slot] {
                chosen[slot] = true;
                count += 1;
            }
            slot += 1;
        }
        chosen
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c)
            .map(|(i, _)| profile.slice_indices[i])
            .collect()
    };

    Ok(SamplingPlan {
        volume_id: profile.volume_id.clone(),
        strategy: Strategy::Glcm,
        config: config.into(),
        degenerate,
        selected,
        weights,
        cdf,
    })
}

/// Contiguous block of `min(N, n)` positions centered on the middle of
/// the curated stack, clamped to the valid range.
pub fn sample_center(n_curated: usize, n_samples: usize) -> Vec<usize> {
    let block = n_samples.min(n_curated);
    let start = (n_curated / 2)
        .saturating_sub(n_samples / 2)
        .min(n_curated - block);
    (start..start + block).collect()
}

/// Evenly spaced positions `floor((m + 0.5) * n / N)`, deduplicated.
pub fn sample_uniform(n_curated: usize, n_samples: usize) -> Vec<usize> {
    let mut positions: Vec<usize> = (0..n_samples)
        .map(|m| (2 * m + 1) * n_curated / (2 * n_samples))
        .collect();
    positions.dedup();
    positions
}

/// Dispatch on the configured strategy, producing a plan in all cases.
/// The baselines ignore the smoothing settings and carry no weights.
pub fn sample_plan(profile: &EntropyProfile, config: &SamplingConfig) -> Result<SamplingPlan> {
    match config.strategy {
        Strategy::Glcm => sample_glcm(profile, config),
        baseline => {
            config.validate()?;
            let n = profile.values.len();
            if n == 0 || profile.slice_indices.len() != n {
                return Err(Error::invalid("profile must hold one value per curated slice"));
            }
            let positions = match baseline {
                Strategy::Center => sample_center(n, config.n_samples),
                Strategy::Uniform => sample_uniform(n, config.n_samples),
                Strategy::Glcm => unreachable!(),
            };
            Ok(SamplingPlan {
                volume_id: profile.volume_id.clone(),
                strategy: baseline,
                config: config.into(),
                degenerate: false,
                selected: positions.iter().map(|&p| profile.slice_indices[p]).collect(),
                weights: Vec::new(),
                cdf: Vec::new(),
            })
        }
    }
}
