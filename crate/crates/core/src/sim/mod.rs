//! Synthetic FMCW recordings of grinding and non-grinding faces.
//!
//! Each chirp is synthesized directly in the beat (fast-time) domain: a
//! complex tone centered on the face range bin whose phase follows
//! `4π(R + d(t))/λ`, a static clutter tone, a DC leakage term and complex
//! white Gaussian noise. Samples are quantized to the ADC's `i16` grid.

mod motion;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use motion::{
    displacement_profile, MotionScenario, MotionTrack, MOTION_GRID_RATE, STICK_FRACTION,
    STICK_SLIP_CUTOFF,
};

use crate::iq::{IqError, IqFrame, RawCaptureLayout};
use crate::label::Label;
use crate::range::{range_resolution, SPEED_OF_LIGHT};
use crate::seed;

const STREAM_NOISE: u64 = 2;
const STREAM_PARAMS: u64 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid radar config: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("sample {value:.1} at chirp {chirp} exceeds the i16 ADC range")]
    AmplitudeOverflow { chirp: usize, value: f64 },
    #[error("n_per_class must be at least 1")]
    EmptyDataset,
    #[error(transparent)]
    Frame(#[from] IqError),
}

/// Radar and scene geometry. Defaults describe a 60 GHz, 4 GHz-bandwidth
/// sensor 0.55 m from the face recording 5 s at 200 chirps/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub samples_per_chirp: usize,
    /// Chirp repetition frequency (Hz).
    pub slow_time_rate: f64,
    /// Recording length (s).
    pub duration: f64,
    /// Radar-to-face distance (m).
    pub target_range: f64,
    /// Per-sample SNR of the face echo against the complex noise (dB).
    pub snr_db: f64,
    /// Face echo amplitude in ADC units.
    pub target_amplitude: f64,
    /// Static reflector range (m).
    pub clutter_range: f64,
    pub clutter_amplitude: f64,
    /// Constant leakage added to every sample (ADC units).
    pub dc_amplitude: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            carrier_freq: 60e9,
            bandwidth: 4e9,
            samples_per_chirp: 256,
            slow_time_rate: 200.0,
            duration: 5.0,
            target_range: 0.55,
            snr_db: 20.0,
            target_amplitude: 2000.0,
            clutter_range: 1.2,
            clutter_amplitude: 1500.0,
            dc_amplitude: 400.0,
        }
    }
}

impl RadarConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn range_resolution(&self) -> f64 {
        range_resolution(self.bandwidth)
    }

    pub fn max_range(&self) -> f64 {
        self.samples_per_chirp as f64 * self.range_resolution()
    }

    /// Range bin the face echo occupies.
    pub fn target_bin(&self) -> usize {
        (self.target_range / self.range_resolution()).floor() as usize
    }

    pub fn clutter_bin(&self) -> usize {
        (self.clutter_range / self.range_resolution()).floor() as usize
    }

    /// `duration × slow_time_rate`, required to be a whole number ≥ 2.
    pub fn num_chirps(&self) -> Result<usize, SimError> {
        let n = self.duration * self.slow_time_rate;
        let rounded = n.round();
        if !n.is_finite() || (n - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded < 2.0 {
            return Err(SimError::InvalidConfig(format!(
                "duration × slow_time_rate = {n} is not an integer ≥ 2"
            )));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return bad(format!(
                "carrier_freq must be positive, got {}",
                self.carrier_freq
            ));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            ));
        }
        if self.samples_per_chirp < 2 {
            return bad("samples_per_chirp must be at least 2".into());
        }
        if self.slow_time_rate.is_nan() || self.slow_time_rate <= 0.0 {
            return bad(format!(
                "slow_time_rate must be positive, got {}",
                self.slow_time_rate
            ));
        }
        self.num_chirps()?;
        let max_range = self.max_range();
        if !(self.target_range > 0.0 && self.target_range < max_range) {
            return bad(format!(
                "target_range {} m outside (0, {max_range}) m",
                self.target_range
            ));
        }
        if !(self.clutter_range >= 0.0 && self.clutter_range < max_range) {
            return bad(format!(
                "clutter_range {} m outside [0, {max_range}) m",
                self.clutter_range
            ));
        }
        if self.clutter_amplitude > 0.0 && self.clutter_bin() == self.target_bin() {
            return bad("clutter and target share a range bin".into());
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db must be finite".into());
        }
        for (name, v) in [
            ("target_amplitude", self.target_amplitude),
            ("clutter_amplitude", self.clutter_amplitude),
            ("dc_amplitude", self.dc_amplitude),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        Ok(())
    }

    /// Standard deviation of the complex noise per sample (ADC units).
    pub fn noise_std(&self) -> f64 {
        self.target_amplitude / 10f64.powf(self.snr_db / 20.0)
    }
}

/// Synthesizes one recording.
pub fn synthesize(scenario: &MotionScenario, cfg: &RadarConfig) -> Result<IqFrame, SimError> {
    cfg.validate()?;
    scenario.validate().map_err(SimError::InvalidScenario)?;

    let nc = cfg.num_chirps()?;
    let ns = cfg.samples_per_chirp;
    let lambda = cfg.wavelength();
    let k_target = cfg.target_bin() as f64;
    let k_clutter = cfg.clutter_bin() as f64;
    let phase_per_meter = 4.0 * PI / lambda;
    let target_phase0 = (phase_per_meter * cfg.target_range).rem_euclid(TAU);
    let clutter_phase = (phase_per_meter * cfg.clutter_range).rem_euclid(TAU);
    let noise_component_std = cfg.noise_std() / 2f64.sqrt();

    let track = MotionTrack::generate(scenario, cfg.duration);
    let mut noise_rng = seed::rng(scenario.rng_seed, STREAM_NOISE);
    let dc = Complex64::new(cfg.dc_amplitude, 0.0);

    // Fast-time terms repeat every chirp: the target tone is rotated by the
    // per-chirp displacement phase, everything else is static.
    let target_tone: Vec<Complex64> = (0..ns)
        .map(|m| Complex64::from_polar(cfg.target_amplitude, TAU * k_target * m as f64 / ns as f64))
        .collect();
    let static_part: Vec<Complex64> = (0..ns)
        .map(|m| {
            Complex64::from_polar(
                cfg.clutter_amplitude,
                TAU * k_clutter * m as f64 / ns as f64 + clutter_phase,
            ) + dc
        })
        .collect();

    let mut data = Vec::with_capacity(nc * ns);
    for n in 0..nc {
        let t = n as f64 / cfg.slow_time_rate;
        let rotation = Complex64::from_polar(1.0, target_phase0 + phase_per_meter * track.at(t));
        for m in 0..ns {
            let nre: f64 = StandardNormal.sample(&mut noise_rng);
            let nim: f64 = StandardNormal.sample(&mut noise_rng);
            let x = target_tone[m] * rotation
                + static_part[m]
                + Complex64::new(nre, nim) * noise_component_std;
            let q = Complex64::new(x.re.round(), x.im.round());
            for v in [q.re, q.im] {
                if v < f64::from(i16::MIN) || v > f64::from(i16::MAX) {
                    return Err(SimError::AmplitudeOverflow { chirp: n, value: v });
                }
            }
            data.push(q);
        }
    }
    Ok(IqFrame::new(
        data,
        RawCaptureLayout::single_channel(nc, ns),
        cfg.slow_time_rate,
    )?)
}

/// Closed interval `[lo, hi]`, written as a two-element array in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    fn within(&self, lo: f64, hi: f64) -> bool {
        self.lo >= lo && self.hi <= hi
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Uniform sampling intervals for per-recording scenario parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioRanges {
    pub mandible_freq: Interval,
    pub mandible_amp: Interval,
    pub mandible_jitter: Interval,
    pub masseter_freq: Interval,
    pub masseter_amp: Interval,
    pub respiration_freq: Interval,
    pub respiration_amp: Interval,
    pub tremor_amp: Interval,
}

impl Default for ScenarioRanges {
    fn default() -> Self {
        Self {
            mandible_freq: Interval::new(5.0, 10.0),
            mandible_amp: Interval::new(40e-6, 200e-6),
            mandible_jitter: Interval::new(0.1, 0.3),
            masseter_freq: Interval::new(0.5, 1.5),
            masseter_amp: Interval::new(100e-6, 400e-6),
            respiration_freq: Interval::new(0.2, 0.4),
            respiration_amp: Interval::new(50e-6, 500e-6),
            tremor_amp: Interval::new(10e-6, 80e-6),
        }
    }
}

impl ScenarioRanges {
    pub fn validate(&self) -> Result<(), SimError> {
        let all = [
            ("mandible_freq", self.mandible_freq),
            ("mandible_amp", self.mandible_amp),
            ("mandible_jitter", self.mandible_jitter),
            ("masseter_freq", self.masseter_freq),
            ("masseter_amp", self.masseter_amp),
            ("respiration_freq", self.respiration_freq),
            ("respiration_amp", self.respiration_amp),
            ("tremor_amp", self.tremor_amp),
        ];
        for (name, i) in all {
            if !(i.lo.is_finite() && i.hi.is_finite() && i.lo <= i.hi && i.lo >= 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} interval [{}, {}] is invalid",
                    i.lo, i.hi
                )));
            }
        }
        if !self.mandible_freq.within(5.0, 10.0) {
            return Err(SimError::InvalidConfig(
                "mandible_freq must lie in [5, 10] Hz".into(),
            ));
        }
        if !self.masseter_freq.within(0.5, 1.5) {
            return Err(SimError::InvalidConfig(
                "masseter_freq must lie in [0.5, 1.5] Hz".into(),
            ));
        }
        if self.mandible_jitter.hi >= 1.0 {
            return Err(SimError::InvalidConfig(
                "mandible_jitter must stay below 1".into(),
            ));
        }
        if self.respiration_freq.lo <= 0.0 {
            return Err(SimError::InvalidConfig(
                "respiration_freq must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Scenario for recording `index`, reproducible from `(master_seed, index)`.
    /// Even indices are grinding, odd are not; parameter draws do not depend
    /// on the label.
    pub fn draw(&self, master_seed: u64, index: usize) -> MotionScenario {
        let sample_seed = seed::derive(master_seed, index as u64);
        let mut rng = seed::rng(sample_seed, STREAM_PARAMS);
        let label = if index.is_multiple_of(2) {
            Label::Grinding
        } else {
            Label::NoGrinding
        };
        let scenario = MotionScenario {
            label: Label::Grinding,
            mandible_freq: self.mandible_freq.sample(&mut rng),
            mandible_amp: self.mandible_amp.sample(&mut rng),
            mandible_jitter: self.mandible_jitter.sample(&mut rng),
            masseter_freq: self.masseter_freq.sample(&mut rng),
            masseter_amp: self.masseter_amp.sample(&mut rng),
            respiration_freq: self.respiration_freq.sample(&mut rng),
            respiration_amp: self.respiration_amp.sample(&mut rng),
            tremor_amp: self.tremor_amp.sample(&mut rng),
            rng_seed: sample_seed,
        };
        match label {
            Label::Grinding => scenario,
            Label::NoGrinding => scenario.without_grinding(),
        }
    }
}

/// One synthetic recording.
#[derive(Debug, Clone)]
pub struct Recording {
    pub index: usize,
    pub scenario: MotionScenario,
    pub frame: IqFrame,
}

impl Recording {
    pub fn label(&self) -> Label {
        self.scenario.label
    }

    pub fn id(&self) -> String {
        format!("rec{:04}", self.index)
    }
}

/// `2 × n_per_class` recordings, alternating grinding / no-grinding.
pub fn generate_dataset(
    n_per_class: usize,
    cfg: &RadarConfig,
    ranges: &ScenarioRanges,
    master_seed: u64,
) -> Result<Vec<Recording>, SimError> {
    if n_per_class == 0 {
        return Err(SimError::EmptyDataset);
    }
    cfg.validate()?;
    ranges.validate()?;
    (0..2 * n_per_class)
        .into_par_iter()
        .map(|index| {
            let scenario = ranges.draw(master_seed, index);
            let frame = synthesize(&scenario, cfg)?;
            Ok(Recording {
                index,
                scenario,
                frame,
            })
        })
        .collect()
}
