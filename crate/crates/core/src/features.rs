//! The eleven phase-difference features, in canonical order:
//!
//! | # | name                | definition |
//! |---|---------------------|------------|
//! | 0 | `kurtosis`          | `m4 / m2²` with population moments; 0 for a constant series |
//! | 1 | `abs_mean`          | mean of `|Δφ|` |
//! | 2 | `variance`          | population variance |
//! | 3 | `entropy`           | Shannon entropy (bits) of a 16-bin histogram over `[min, max]` |
//! | 4 | `spectral_entropy`  | Shannon entropy (bits) of the normalized one-sided periodogram, DC excluded |
//! | 5 | `spectral_variance` | spread (Hz²) of that spectrum about its centroid |
//! | 6 | `band_energy_5_10`  | share of non-DC power in bins with center frequency in `[5, 10)` Hz |
//! | 7 | `n_maxima`          | strict interior local maxima |
//! | 8 | `n_minima`          | strict interior local minima |
//! | 9 | `n_above_thresh`    | samples `> 0.04` rad |
//! |10 | `n_below_thresh`    | samples `< -0.04` rad |
//!
//! The periodogram is a single full-length FFT of the mean-removed series
//! without windowing.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::range::PhaseDiffSeries;

pub const NUM_FEATURES: usize = 11;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "kurtosis",
    "abs_mean",
    "variance",
    "entropy",
    "spectral_entropy",
    "spectral_variance",
    "band_energy_5_10",
    "n_maxima",
    "n_minima",
    "n_above_thresh",
    "n_below_thresh",
];

/// Shortest series accepted by [`extract_features`].
pub const MIN_LEN: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("series has {0} samples, at least {MIN_LEN} required")]
    TooShort(usize),
    #[error("slow-time rate {rate} Hz cannot resolve a band ending at {band_hi} Hz")]
    NyquistViolation { rate: f64, band_hi: f64 },
    #[error("invalid feature options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureOptions {
    pub histogram_bins: usize,
    /// Symmetric amplitude threshold (rad) for the above/below counts.
    pub threshold: f64,
    /// Band `[lo, hi)` (Hz) for the band-energy ratio.
    pub band: [f64; 2],
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            histogram_bins: 16,
            threshold: 0.04,
            band: [5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub kurtosis: f64,
    pub abs_mean: f64,
    pub variance: f64,
    pub entropy: f64,
    pub spectral_entropy: f64,
    pub spectral_variance: f64,
    pub band_energy_5_10: f64,
    pub n_maxima: u32,
    pub n_minima: u32,
    pub n_above_thresh: u32,
    pub n_below_thresh: u32,
    /// Set when the series is constant: kurtosis is reported as 0.
    #[serde(skip)]
    pub zero_variance: bool,
    /// Set when the mean-removed series has no spectral power.
    #[serde(skip)]
    pub zero_spectrum: bool,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.kurtosis,
            self.abs_mean,
            self.variance,
            self.entropy,
            self.spectral_entropy,
            self.spectral_variance,
            self.band_energy_5_10,
            f64::from(self.n_maxima),
            f64::from(self.n_minima),
            f64::from(self.n_above_thresh),
            f64::from(self.n_below_thresh),
        ]
    }
}

pub fn extract_features(series: &PhaseDiffSeries) -> Result<FeatureVector, FeatureError> {
    extract_features_with(series, &FeatureOptions::default())
}

pub fn extract_features_with(
    series: &PhaseDiffSeries,
    opts: &FeatureOptions,
) -> Result<FeatureVector, FeatureError> {
    let band_ok = opts.band[0] < opts.band[1];
    if opts.histogram_bins == 0 || opts.threshold.is_nan() || opts.threshold < 0.0 || !band_ok {
        return Err(FeatureError::InvalidOptions(format!("{opts:?}")));
    }
    let x = series.values();
    if x.len() < MIN_LEN {
        return Err(FeatureError::TooShort(x.len()));
    }
    let rate = series.slow_time_rate();
    if rate.is_nan() || rate <= 2.0 * opts.band[1] {
        return Err(FeatureError::NyquistViolation {
            rate,
            band_hi: opts.band[1],
        });
    }

    let moments = Moments::of(x);
    let spectrum = Spectrum::of(x, rate);
    let (n_maxima, n_minima) = count_extrema(x);
    let (n_above_thresh, n_below_thresh) = count_beyond(x, opts.threshold);

    Ok(FeatureVector {
        kurtosis: moments.kurtosis(),
        abs_mean: x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64,
        variance: moments.m2,
        entropy: histogram_entropy(x, opts.histogram_bins),
        spectral_entropy: spectrum.entropy(),
        spectral_variance: spectrum.spread(),
        band_energy_5_10: spectrum.band_ratio(opts.band[0], opts.band[1]),
        n_maxima,
        n_minima,
        n_above_thresh,
        n_below_thresh,
        zero_variance: moments.constant,
        zero_spectrum: spectrum.total == 0.0,
    })
}

struct Moments {
    m2: f64,
    m4: f64,
    constant: bool,
}

impl Moments {
    fn of(x: &[f64]) -> Self {
        let (lo, hi) = min_max(x);
        if lo == hi {
            return Self {
                m2: 0.0,
                m4: 0.0,
                constant: true,
            };
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let (mut m2, mut m4) = (0.0, 0.0);
        for v in x {
            let d2 = (v - mean) * (v - mean);
            m2 += d2;
            m4 += d2 * d2;
        }
        Self {
            m2: m2 / n,
            m4: m4 / n,
            constant: false,
        }
    }

    fn kurtosis(&self) -> f64 {
        if self.constant || self.m2 == 0.0 {
            0.0
        } else {
            self.m4 / (self.m2 * self.m2)
        }
    }
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn entropy_bits(probabilities: impl Iterator<Item = f64>) -> f64 {
    let h: f64 = probabilities
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    // A single occupied bin yields -0.0.
    h.max(0.0)
}

/// Shannon entropy (bits) of an equal-width histogram spanning `[min, max]`.
pub fn histogram_entropy(x: &[f64], bins: usize) -> f64 {
    let (lo, hi) = min_max(x);
    if x.is_empty() || lo == hi {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    let scale = bins as f64 / (hi - lo);
    for v in x {
        let b = (((v - lo) * scale) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = x.len() as f64;
    entropy_bits(counts.into_iter().map(|c| c as f64 / n))
}

/// Strict interior local maxima and minima.
pub fn count_extrema(x: &[f64]) -> (u32, u32) {
    x.windows(3).fold((0, 0), |(max, min), w| {
        (
            max + u32::from(w[1] > w[0] && w[1] > w[2]),
            min + u32::from(w[1] < w[0] && w[1] < w[2]),
        )
    })
}

/// Samples strictly above `threshold` and strictly below `-threshold`.
pub fn count_beyond(x: &[f64], threshold: f64) -> (u32, u32) {
    x.iter().fold((0, 0), |(above, below), &v| {
        (
            above + u32::from(v > threshold),
            below + u32::from(v < -threshold),
        )
    })
}

/// One-sided periodogram of the mean-removed series, DC excluded.
pub struct Spectrum {
    freqs: Vec<f64>,
    power: Vec<f64>,
    total: f64,
}

impl Spectrum {
    pub fn of(x: &[f64], rate: f64) -> Self {
        let n = x.len();
        // A constant series must give an exactly empty spectrum, which the
        // rounded mean does not guarantee.
        let mean = if x.iter().all(|&v| v == x[0]) {
            x[0]
        } else {
            x.iter().sum::<f64>() / n as f64
        };
        let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
        FftPlanner::<f64>::new()
            .plan_fft_forward(n)
            .process(&mut buf);
        let half = n / 2;
        let (mut freqs, mut power) = (Vec::with_capacity(half), Vec::with_capacity(half));
        for (k, z) in buf.iter().enumerate().take(half + 1).skip(1) {
            let weight = if n.is_multiple_of(2) && k == half {
                1.0
            } else {
                2.0
            };
            freqs.push(k as f64 * rate / n as f64);
            power.push(weight * z.norm_sqr());
        }
        let total = power.iter().sum();
        Self {
            freqs,
            power,
            total,
        }
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    fn normalized(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let total = self.total;
        self.freqs
            .iter()
            .zip(&self.power)
            .map(move |(&f, &p)| (f, if total > 0.0 { p / total } else { 0.0 }))
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(self.normalized().map(|(_, p)| p))
    }

    pub fn centroid(&self) -> f64 {
        self.normalized().map(|(f, p)| f * p).sum()
    }

    pub fn spread(&self) -> f64 {
        let c = self.centroid();
        self.normalized().map(|(f, p)| (f - c) * (f - c) * p).sum()
    }

    /// Fraction of total power in bins with `lo <= f < hi`.
    pub fn band_ratio(&self, lo: f64, hi: f64) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let band: f64 = self
            .freqs
            .iter()
            .zip(&self.power)
            .filter(|(&f, _)| f >= lo && f < hi)
            .map(|(_, p)| p)
            .sum();
        (band / self.total).clamp(0.0, 1.0)
    }
}
