//! Range-domain processing: fast-time FFT, incoherent power accumulation over
//! a range search window, face-bin selection, slow-time phase extraction with
//! unwrapping and first differencing.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iq::IqFrame;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum RangeError {
    #[error("bandwidth must be positive, got {0} Hz")]
    InvalidBandwidth(f64),
    #[error("invalid search window [{r_min}, {r_max}] m")]
    InvalidWindow { r_min: f64, r_max: f64 },
    #[error("search window ends at bin {k_max} but only {num_bins} range bins exist")]
    WindowOutOfRange { k_max: usize, num_bins: usize },
    #[error("range bin {bin} out of range for {num_bins} bins")]
    BinOutOfRange { bin: usize, num_bins: usize },
    #[error("zero magnitude at chirp {chirp}, bin {bin}: phase undefined")]
    ZeroMagnitudeBin { chirp: usize, bin: usize },
    #[error("phase series has {0} samples, at least 2 required")]
    TooShort(usize),
    #[error("power profile is empty")]
    EmptyProfile,
    #[error("non-finite phase difference at index {0}")]
    NonFinite(usize),
}

/// Range resolution `c / (2B)` in meters.
pub fn range_resolution(bandwidth: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * bandwidth)
}

/// Per-chirp range spectra `X_n(k)`, row-major by chirp.
#[derive(Debug, Clone)]
pub struct RangeSpectra {
    spectra: Vec<Complex64>,
    num_chirps: usize,
    num_bins: usize,
    range_resolution: f64,
    slow_time_rate: f64,
}

impl RangeSpectra {
    pub fn num_chirps(&self) -> usize {
        self.num_chirps
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn range_resolution(&self) -> f64 {
        self.range_resolution
    }

    pub fn slow_time_rate(&self) -> f64 {
        self.slow_time_rate
    }

    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.spectra[n * self.num_bins..(n + 1) * self.num_bins]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.spectra.chunks_exact(self.num_bins)
    }

    pub fn get(&self, chirp: usize, bin: usize) -> Complex64 {
        self.spectra[chirp * self.num_bins + bin]
    }

    /// Center range of bin `k` (meters).
    pub fn bin_range(&self, k: usize) -> f64 {
        k as f64 * self.range_resolution
    }

    /// Subtracts the slow-time mean of every bin, removing static reflectors.
    pub fn remove_static_clutter(&mut self) {
        let nb = self.num_bins;
        let mut mean = vec![Complex64::new(0.0, 0.0); nb];
        for row in self.spectra.chunks_exact(nb) {
            for (acc, x) in mean.iter_mut().zip(row) {
                *acc += x;
            }
        }
        let scale = 1.0 / self.num_chirps as f64;
        for row in self.spectra.chunks_exact_mut(nb) {
            for (x, m) in row.iter_mut().zip(&mean) {
                *x -= m * scale;
            }
        }
    }
}

/// Range-pipeline knobs. Defaults stay literal: bare DFT, no clutter removal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    /// Lower edge of the face search window (m).
    pub r_min: f64,
    /// Upper edge of the face search window (m).
    pub r_max: f64,
    /// Apply a Hann window along fast time before the FFT.
    pub hann_window: bool,
    /// Subtract the slow-time mean of each range bin.
    pub remove_static_clutter: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            r_min: 0.3,
            r_max: 0.8,
            hann_window: false,
            remove_static_clutter: false,
        }
    }
}

/// Unnormalized `N_s`-point DFT of every chirp with kernel `exp(-j2πkm/N_s)`.
pub fn range_fft(frame: &IqFrame, bandwidth: f64) -> Result<RangeSpectra, RangeError> {
    range_fft_windowed(frame, bandwidth, false)
}

pub fn range_fft_windowed(
    frame: &IqFrame,
    bandwidth: f64,
    hann: bool,
) -> Result<RangeSpectra, RangeError> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(RangeError::InvalidBandwidth(bandwidth));
    }
    let ns = frame.samples_per_chirp();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(ns);
    let mut spectra = frame.data().to_vec();
    if hann {
        let window: Vec<f64> = (0..ns)
            .map(|m| 0.5 - 0.5 * (TAU * m as f64 / ns as f64).cos())
            .collect();
        for row in spectra.chunks_exact_mut(ns) {
            for (x, w) in row.iter_mut().zip(&window) {
                *x *= w;
            }
        }
    }
    // rustfft processes consecutive chunks of length `ns` independently.
    fft.process(&mut spectra);
    Ok(RangeSpectra {
        spectra,
        num_chirps: frame.num_chirps(),
        num_bins: ns,
        range_resolution: range_resolution(bandwidth),
        slow_time_rate: frame.slow_time_rate(),
    })
}

/// Accumulated power `P(k)` over the inclusive bin window `[k_min, k_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    power: Vec<f64>,
    k_min: usize,
}

impl PowerProfile {
    pub fn new(power: Vec<f64>, k_min: usize) -> Result<Self, RangeError> {
        if power.is_empty() {
            return Err(RangeError::EmptyProfile);
        }
        Ok(Self { power, k_min })
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn k_min(&self) -> usize {
        self.k_min
    }

    pub fn k_max(&self) -> usize {
        self.k_min + self.power.len() - 1
    }

    /// `(bin, power)` pairs in ascending bin order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.power
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.k_min + i, p))
    }
}

/// Bin window `[floor(r_min/ΔR), floor(r_max/ΔR)]` for a range interval.
pub fn window_bins(
    range_resolution: f64,
    r_min: f64,
    r_max: f64,
) -> Result<(usize, usize), RangeError> {
    if !(r_min >= 0.0 && r_min < r_max && r_max.is_finite()) {
        return Err(RangeError::InvalidWindow { r_min, r_max });
    }
    let k_min = (r_min / range_resolution).floor() as usize;
    let k_max = (r_max / range_resolution).floor() as usize;
    Ok((k_min, k_max))
}

/// Incoherent integration `P(k) = Σ_n |X_n(k)|²` across all chirps.
pub fn accumulate_power(
    spectra: &RangeSpectra,
    r_min: f64,
    r_max: f64,
) -> Result<PowerProfile, RangeError> {
    let (k_min, k_max) = window_bins(spectra.range_resolution, r_min, r_max)?;
    if k_max >= spectra.num_bins {
        return Err(RangeError::WindowOutOfRange {
            k_max,
            num_bins: spectra.num_bins,
        });
    }
    let mut power = vec![0.0; k_max - k_min + 1];
    for row in spectra.rows() {
        for (p, x) in power.iter_mut().zip(&row[k_min..=k_max]) {
            *p += x.norm_sqr();
        }
    }
    PowerProfile::new(power, k_min)
}

/// Bin of maximum accumulated power; the smallest index wins ties.
pub fn locate_bin(profile: &PowerProfile) -> usize {
    let mut best = (profile.k_min, profile.power[0]);
    for (k, p) in profile.iter().skip(1) {
        if p > best.1 {
            best = (k, p);
        }
    }
    best.0
}

/// Unwrapped slow-time phase at one range bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub phase: Vec<f64>,
    pub bin: usize,
    pub slow_time_rate: f64,
}

/// First difference of the unwrapped phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiffSeries {
    diff: Vec<f64>,
    slow_time_rate: f64,
}

impl PhaseDiffSeries {
    pub fn new(diff: Vec<f64>, slow_time_rate: f64) -> Result<Self, RangeError> {
        if let Some(i) = diff.iter().position(|d| !d.is_finite()) {
            return Err(RangeError::NonFinite(i));
        }
        Ok(Self {
            diff,
            slow_time_rate,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.diff
    }

    pub fn slow_time_rate(&self) -> f64 {
        self.slow_time_rate
    }

    pub fn len(&self) -> usize {
        self.diff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diff.is_empty()
    }
}

/// Sequential 1-D unwrapping: every consecutive step is brought into
/// `(-π, π]` by adding whole turns. Samples already continuous are returned
/// bit-for-bit unchanged.
pub fn unwrap(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut turns = 0.0f64;
    for (i, &x) in raw.iter().enumerate() {
        if i > 0 {
            let step = x - raw[i - 1];
            if step > PI || step <= -PI {
                let mut m = -(step / TAU).round();
                let corrected = step + m * TAU;
                if corrected <= -PI {
                    m += 1.0;
                } else if corrected > PI {
                    m -= 1.0;
                }
                turns += m;
            }
        }
        out.push(if turns == 0.0 { x } else { x + turns * TAU });
    }
    out
}

/// Four-quadrant phase of `X_n(k*)` for every chirp, unwrapped.
pub fn extract_phase(spectra: &RangeSpectra, k_star: usize) -> Result<PhaseSeries, RangeError> {
    if k_star >= spectra.num_bins {
        return Err(RangeError::BinOutOfRange {
            bin: k_star,
            num_bins: spectra.num_bins,
        });
    }
    let mut raw = Vec::with_capacity(spectra.num_chirps);
    for (n, row) in spectra.rows().enumerate() {
        let x = row[k_star];
        if x.re == 0.0 && x.im == 0.0 {
            return Err(RangeError::ZeroMagnitudeBin {
                chirp: n,
                bin: k_star,
            });
        }
        raw.push(x.im.atan2(x.re));
    }
    Ok(PhaseSeries {
        phase: unwrap(&raw),
        bin: k_star,
        slow_time_rate: spectra.slow_time_rate,
    })
}

/// `Δφ_n = φ_n − φ_{n−1}`.
pub fn phase_difference(series: &PhaseSeries) -> Result<PhaseDiffSeries, RangeError> {
    if series.phase.len() < 2 {
        return Err(RangeError::TooShort(series.phase.len()));
    }
    let diff = series.phase.windows(2).map(|w| w[1] - w[0]).collect();
    PhaseDiffSeries::new(diff, series.slow_time_rate)
}

/// Every intermediate of one recording's preprocessing.
#[derive(Debug, Clone)]
pub struct PipelineTrace {
    pub profile: PowerProfile,
    pub bin: usize,
    pub range_resolution: f64,
    pub phase: PhaseSeries,
    pub diff: PhaseDiffSeries,
}

/// Literal preprocessing chain with the default options.
pub fn process_recording(
    frame: &IqFrame,
    bandwidth: f64,
    r_min: f64,
    r_max: f64,
) -> Result<PhaseDiffSeries, RangeError> {
    let opts = PipelineOptions {
        r_min,
        r_max,
        ..PipelineOptions::default()
    };
    Ok(trace_recording(frame, bandwidth, &opts)?.diff)
}

pub fn trace_recording(
    frame: &IqFrame,
    bandwidth: f64,
    opts: &PipelineOptions,
) -> Result<PipelineTrace, RangeError> {
    let mut spectra = range_fft_windowed(frame, bandwidth, opts.hann_window)?;
    if opts.remove_static_clutter {
        spectra.remove_static_clutter();
    }
    let profile = accumulate_power(&spectra, opts.r_min, opts.r_max)?;
    let bin = locate_bin(&profile);
    let phase = extract_phase(&spectra, bin)?;
    let diff = phase_difference(&phase)?;
    Ok(PipelineTrace {
        profile,
        bin,
        range_resolution: spectra.range_resolution,
        phase,
        diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iq::RawCaptureLayout;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn frame_from_rows(rows: Vec<Vec<Complex64>>, rate: f64) -> IqFrame {
        let ns = rows[0].len();
        let nc = rows.len();
        IqFrame::new(
            rows.concat(),
            RawCaptureLayout::single_channel(nc, ns),
            rate,
        )
        .unwrap()
    }

    fn random_frame(seed: u64, nc: usize, ns: usize) -> IqFrame {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..nc)
            .map(|_| {
                (0..ns)
                    .map(|_| {
                        Complex64::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3))
                    })
                    .collect()
            })
            .collect();
        frame_from_rows(rows, 100.0)
    }

    /// Direct O(N²) evaluation of the DFT sum.
    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(m, v)| v * Complex64::from_polar(1.0, -TAU * (k * m) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn pure_tone_lands_in_one_bin() {
        let tone: Vec<Complex64> = (0..16)
            .map(|m| Complex64::from_polar(1.0, TAU * 3.0 * m as f64 / 16.0))
            .collect();
        let frame = frame_from_rows(vec![tone.clone(), tone], 10.0);
        let s = range_fft(&frame, 4e9).unwrap();
        for k in 0..16 {
            let mag = s.get(0, k).norm();
            if k == 3 {
                assert!((mag - 16.0).abs() < 1e-9);
            } else {
                assert!(mag < 1e-9, "bin {k} = {mag}");
            }
        }
    }

    #[test]
    fn matches_direct_dft_sum() {
        let frame = random_frame(3, 3, 12);
        let s = range_fft(&frame, 1e9).unwrap();
        for n in 0..3 {
            for (a, b) in s.row(n).iter().zip(naive_dft(frame.chirp(n))) {
                assert!((a - b).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_frame_gives_zero_spectra() {
        let frame = frame_from_rows(vec![vec![Complex64::new(0.0, 0.0); 8]; 2], 10.0);
        let s = range_fft(&frame, 4e9).unwrap();
        assert!(s.rows().flatten().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn parseval_holds() {
        for seed in 0..10 {
            let frame = random_frame(seed, 4, 64);
            let s = range_fft(&frame, 4e9).unwrap();
            for n in 0..4 {
                let time: f64 = frame.chirp(n).iter().map(|x| x.norm_sqr()).sum();
                let freq: f64 = s.row(n).iter().map(|x| x.norm_sqr()).sum::<f64>() / 64.0;
                assert!(((time - freq) / time).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn window_bins_for_four_ghz() {
        let dr = range_resolution(4e9);
        assert!((dr - 0.0375).abs() < 1e-4);
        assert_eq!(window_bins(dr, 0.3, 0.8).unwrap(), (8, 21));
        assert_eq!((0.55 / dr).floor() as usize, 14);
    }

    #[test]
    fn window_validation() {
        let frame = random_frame(1, 2, 16);
        let s = range_fft(&frame, 4e9).unwrap();
        assert!(matches!(
            accumulate_power(&s, 0.3, 0.8),
            Err(RangeError::WindowOutOfRange {
                k_max: 21,
                num_bins: 16
            })
        ));
        assert!(matches!(
            accumulate_power(&s, 0.5, 0.4),
            Err(RangeError::InvalidWindow { .. })
        ));
        assert!(matches!(
            accumulate_power(&s, -0.1, 0.4),
            Err(RangeError::InvalidWindow { .. })
        ));
    }

    #[test]
    fn single_chirp_power_and_scaling() {
        let frame = random_frame(5, 2, 32);
        let s = range_fft(&frame, 4e9).unwrap();
        let p = accumulate_power(&s, 0.1, 0.5).unwrap();
        for (k, pk) in p.iter() {
            let expect = s.get(0, k).norm_sqr() + s.get(1, k).norm_sqr();
            assert!((pk - expect).abs() <= 1e-9 * expect);
        }
        let s2 = range_fft(&frame.scaled(2.0), 4e9).unwrap();
        let p2 = accumulate_power(&s2, 0.1, 0.5).unwrap();
        for (a, b) in p.power().iter().zip(p2.power()) {
            assert!((4.0 * a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn argmax_and_tie_break() {
        assert_eq!(
            locate_bin(&PowerProfile::new(vec![1.0, 5.0, 3.0], 8).unwrap()),
            9
        );
        assert_eq!(
            locate_bin(&PowerProfile::new(vec![4.0, 4.0], 8).unwrap()),
            8
        );
        assert!(PowerProfile::new(vec![], 0).is_err());
    }

    #[test]
    fn unwrap_hand_oracle() {
        let out = unwrap(&[3.0, -3.0, 3.0]);
        let expected = [3.0, 3.0 + (TAU - 6.0), 3.0];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((out[1] - 3.2832).abs() < 1e-4);
    }

    #[test]
    fn unwrapped_ramp_is_linear() {
        let rows: Vec<Vec<Complex64>> = (0..800)
            .map(|n| {
                vec![
                    Complex64::from_polar(1.0, 0.01 * n as f64),
                    Complex64::new(0.0, 0.0),
                ]
            })
            .collect();
        let frame = frame_from_rows(rows, 100.0);
        // Chirps are [z, 0]; their DFT bin 0 equals z.
        let s = range_fft(&frame, 4e9).unwrap();
        let phase = extract_phase(&s, 0).unwrap();
        for (n, p) in phase.phase.iter().enumerate() {
            assert!((p - 0.01 * n as f64).abs() < 1e-9, "n={n}");
        }
        assert!(phase.phase[799] > PI);
    }

    #[test]
    fn unit_bin_gives_zero_phase() {
        let rows = vec![vec![Complex64::new(1.0, 0.0), 0.0.into()]; 5];
        let s = range_fft(&frame_from_rows(rows, 10.0), 4e9).unwrap();
        assert!(extract_phase(&s, 0)
            .unwrap()
            .phase
            .iter()
            .all(|&p| p == 0.0));
        assert!(matches!(
            extract_phase(&s, 2),
            Err(RangeError::BinOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_frame_has_undefined_phase() {
        let frame = frame_from_rows(vec![vec![Complex64::new(0.0, 0.0); 64]; 4], 100.0);
        assert!(matches!(
            process_recording(&frame, 4e9, 0.3, 0.8),
            Err(RangeError::ZeroMagnitudeBin { .. })
        ));
    }

    #[test]
    fn differences() {
        let mk = |phase: Vec<f64>| PhaseSeries {
            phase,
            bin: 0,
            slow_time_rate: 1.0,
        };
        let d = phase_difference(&mk(vec![0.7; 10])).unwrap();
        assert!(d.values().iter().all(|&x| x == 0.0));
        let d = phase_difference(&mk((0..10).map(|n| 0.01 * n as f64).collect())).unwrap();
        assert_eq!(d.len(), 9);
        assert!(d.values().iter().all(|&x| (x - 0.01).abs() < 1e-12));
        assert_eq!(
            phase_difference(&mk(vec![1.0])),
            Err(RangeError::TooShort(1))
        );
    }

    #[test]
    fn difference_of_sine_peaks_at_its_frequency() {
        let fs = 200.0;
        let f = 3.0;
        let phase = (0..1000).map(|n| (TAU * f * n as f64 / fs).sin()).collect();
        let d = phase_difference(&PhaseSeries {
            phase,
            bin: 0,
            slow_time_rate: fs,
        })
        .unwrap();
        let x: Vec<f64> = d.values().to_vec();
        let n = x.len();
        // Naive DFT magnitude over the one-sided spectrum.
        let peak = (1..n / 2)
            .map(|k| {
                let s: Complex64 = x
                    .iter()
                    .enumerate()
                    .map(|(m, v)| Complex64::from_polar(*v, -TAU * (k * m) as f64 / n as f64))
                    .sum();
                (k, s.norm())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        let peak_freq = peak as f64 * fs / n as f64;
        assert!((peak_freq - f).abs() <= fs / n as f64);
    }

    proptest! {
        #[test]
        fn unwrap_is_idempotent(raw in proptest::collection::vec(-PI..PI, 2..60)) {
            let once = unwrap(&raw);
            prop_assert_eq!(unwrap(&once), once.clone());
            for w in once.windows(2) {
                let d = w[1] - w[0];
                prop_assert!(d > -PI - 1e-12 && d <= PI + 1e-12);
            }
        }

        #[test]
        fn difference_inverts_cumsum(incs in proptest::collection::vec(-3.0f64..3.0, 1..50)) {
            let mut phase = vec![0.0];
            for d in &incs {
                let last = *phase.last().unwrap();
                phase.push(last + d);
            }
            let diff = phase_difference(&PhaseSeries { phase: phase.clone(), bin: 0, slow_time_rate: 1.0 }).unwrap();
            for (n, (got, _)) in diff.values().iter().zip(&incs).enumerate() {
                prop_assert_eq!(*got, phase[n + 1] - phase[n]);
                prop_assert!((got - incs[n]).abs() < 1e-12);
            }
        }

        #[test]
        fn argmax_is_scale_invariant(seed in 0u64..1000, scale in 0.01f64..100.0) {
            let frame = random_frame(seed, 3, 32);
            let a = accumulate_power(&range_fft(&frame, 4e9).unwrap(), 0.1, 1.1).unwrap();
            let b = accumulate_power(&range_fft(&frame.scaled(scale), 4e9).unwrap(), 0.1, 1.1).unwrap();
            prop_assert_eq!(locate_bin(&a), locate_bin(&b));
        }
    }
}
