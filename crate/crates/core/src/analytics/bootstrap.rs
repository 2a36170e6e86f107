use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// A percentile-bootstrap interval for a proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    /// ChaCha stream the resampling indices were drawn from.
    pub stream: u64,
}

impl BootstrapCI {
    /// `28.1% [21.2, 35.0]`
    pub fn display_percent(&self) -> String {
        format!("{:.1}% [{:.1}, {:.1}]", self.point * 100.0, self.lo * 100.0, self.hi * 100.0)
    }
}

/// `k` ones followed by `n - k` zeros.
pub fn indicator_samples(k: usize, n: usize) -> Vec<bool> {
    assert!(k <= n, "k > n");
    (0..n).map(|i| i < k).collect()
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Resampled means, drawing indices with `gen_range(0..n)`.
fn resample_means(samples: &[bool], resamples: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = samples.len();
    (0..resamples)
        .map(|_| {
            let ones = (0..n).filter(|_| samples[rng.gen_range(0..n)]).count();
            ones as f64 / n as f64
        })
        .collect()
}

/// Percentile bootstrap CI for the mean of 0/1 outcomes.
pub fn bootstrap_ci(samples: &[bool], resamples: usize, level: f64, seed: u64) -> Result<BootstrapCI, StatsError> {
    bootstrap_ci_stream(samples, resamples, level, seed, 0)
}

/// As [`bootstrap_ci`], drawing from ChaCha stream `stream` of `seed` so
/// independent estimates can share one master seed.
pub fn bootstrap_ci_stream(
    samples: &[bool],
    resamples: usize,
    level: f64,
    seed: u64,
    stream: u64,
) -> Result<BootstrapCI, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySamples);
    }
    if resamples == 0 {
        return Err(StatsError::ZeroResamples);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut means = resample_means(samples, resamples, &mut rng);
    means.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    let point = samples.iter().filter(|&&s| s).count() as f64 / samples.len() as f64;
    Ok(BootstrapCI {
        point,
        lo: quantile_sorted(&means, alpha / 2.0),
        hi: quantile_sorted(&means, 1.0 - alpha / 2.0),
        n: samples.len(),
        resamples,
        level,
        seed,
        stream,
    })
}
