//! Facial surface displacement model.
//!
//! Grinding adds two components on top of the breathing and tremor shared by
//! both classes: a masseter bulge (slow sinusoid) and a mandibular stick-slip
//! oscillation (asymmetric sawtooth with per-cycle period and amplitude
//! jitter, smoothed by a one-pole low-pass).

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::label::Label;
use crate::seed;

/// Internal rate (Hz) at which the stochastic components are generated.
pub const MOTION_GRID_RATE: f64 = 1000.0;
/// Fraction of each stick-slip cycle spent in the slow "stick" ramp.
pub const STICK_FRACTION: f64 = 0.8;
/// Corner frequency (Hz) of the one-pole smoother applied to the sawtooth.
pub const STICK_SLIP_CUTOFF: f64 = 25.0;

const STREAM_JITTER: u64 = 0;
const STREAM_TREMOR: u64 = 1;
const STREAM_RESPIRATION: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionScenario {
    pub label: Label,
    /// Mandibular oscillation rate (Hz), 5-10 when active.
    pub mandible_freq: f64,
    /// Mandibular sawtooth peak amplitude (m).
    pub mandible_amp: f64,
    /// Relative per-cycle jitter of period and amplitude.
    pub mandible_jitter: f64,
    /// Masseter bulging rate (Hz), 0.5-1.5 when active.
    pub masseter_freq: f64,
    /// Masseter bulging amplitude (m).
    pub masseter_amp: f64,
    pub respiration_freq: f64,
    pub respiration_amp: f64,
    /// Random-walk scale: displacement standard deviation after one second (m).
    pub tremor_amp: f64,
    pub rng_seed: u64,
}

impl MotionScenario {
    /// Motionless face.
    pub fn null(rng_seed: u64) -> Self {
        Self {
            label: Label::NoGrinding,
            mandible_freq: 7.0,
            mandible_amp: 0.0,
            mandible_jitter: 0.0,
            masseter_freq: 1.0,
            masseter_amp: 0.0,
            respiration_freq: 0.3,
            respiration_amp: 0.0,
            tremor_amp: 0.0,
            rng_seed,
        }
    }

    /// The same scenario with the grinding components removed.
    pub fn without_grinding(&self) -> Self {
        Self {
            label: Label::NoGrinding,
            mandible_amp: 0.0,
            masseter_amp: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let amps = [
            ("mandible_amp", self.mandible_amp),
            ("masseter_amp", self.masseter_amp),
            ("respiration_amp", self.respiration_amp),
            ("tremor_amp", self.tremor_amp),
            ("mandible_jitter", self.mandible_jitter),
        ];
        for (name, v) in amps {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.mandible_jitter >= 1.0 {
            return Err(format!(
                "mandible_jitter must be < 1, got {}",
                self.mandible_jitter
            ));
        }
        if self.label == Label::NoGrinding && (self.mandible_amp > 0.0 || self.masseter_amp > 0.0) {
            return Err(
                "no_grinding scenarios must have zero mandible and masseter amplitude".into(),
            );
        }
        if self.mandible_amp > 0.0 && !(5.0..=10.0).contains(&self.mandible_freq) {
            return Err(format!(
                "mandible_freq {} outside [5, 10] Hz",
                self.mandible_freq
            ));
        }
        if self.masseter_amp > 0.0 && !(0.5..=1.5).contains(&self.masseter_freq) {
            return Err(format!(
                "masseter_freq {} outside [0.5, 1.5] Hz",
                self.masseter_freq
            ));
        }
        if self.respiration_amp > 0.0
            && !(self.respiration_freq.is_finite() && self.respiration_freq > 0.0)
        {
            return Err(format!(
                "respiration_freq must be positive, got {}",
                self.respiration_freq
            ));
        }
        Ok(())
    }
}

/// Displacement trajectory of one scenario over `[0, duration]`.
///
/// Sinusoidal parts are evaluated analytically; the sawtooth and tremor are
/// generated causally on a fixed grid and linearly interpolated, so a longer
/// track always extends a shorter one with identical values.
#[derive(Debug, Clone)]
pub struct MotionTrack {
    scenario: MotionScenario,
    respiration_phase: f64,
    grid: Vec<f64>,
}

impl MotionTrack {
    pub fn generate(scenario: &MotionScenario, duration: f64) -> Self {
        let len = (duration.max(0.0) * MOTION_GRID_RATE).ceil() as usize + 2;
        let stick_slip = stick_slip(scenario, len);
        let tremor = tremor(scenario, len);
        let grid = stick_slip.iter().zip(&tremor).map(|(a, b)| a + b).collect();
        let respiration_phase =
            seed::rng(scenario.rng_seed, STREAM_RESPIRATION).random_range(0.0..TAU);
        Self {
            scenario: scenario.clone(),
            respiration_phase,
            grid,
        }
    }

    /// Displacement (m) at time `t` (s).
    pub fn at(&self, t: f64) -> f64 {
        let s = &self.scenario;
        let mut d = 0.0;
        if s.masseter_amp > 0.0 {
            d += s.masseter_amp * (TAU * s.masseter_freq * t).sin();
        }
        if s.respiration_amp > 0.0 {
            d += s.respiration_amp * (TAU * s.respiration_freq * t + self.respiration_phase).sin();
        }
        let pos = (t * MOTION_GRID_RATE).max(0.0);
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let frac = pos - i as f64;
        d + self.grid[i] + frac * (self.grid[i + 1] - self.grid[i])
    }
}

/// Displacement of `scenario` at time `t`.
pub fn displacement_profile(scenario: &MotionScenario, t: f64) -> f64 {
    MotionTrack::generate(scenario, t).at(t)
}

fn stick_slip(s: &MotionScenario, len: usize) -> Vec<f64> {
    if s.mandible_amp == 0.0 {
        return vec![0.0; len];
    }
    let mut rng = seed::rng(s.rng_seed, STREAM_JITTER);
    let dt = 1.0 / MOTION_GRID_RATE;
    let base_period = 1.0 / s.mandible_freq;
    let draw_cycle = |rng: &mut rand_chacha::ChaCha8Rng| {
        let u: f64 = rng.random_range(-1.0..=1.0);
        let v: f64 = rng.random_range(-1.0..=1.0);
        (
            base_period * (1.0 + s.mandible_jitter * u),
            s.mandible_amp * (1.0 + s.mandible_jitter * v),
        )
    };

    let (mut period, mut amp) = draw_cycle(&mut rng);
    // Random position inside the first cycle.
    let mut cycle_start = -rng.random_range(0.0..1.0) * period;
    let alpha = 1.0 - (-TAU * STICK_SLIP_CUTOFF * dt).exp();

    let mut out = Vec::with_capacity(len);
    let mut smoothed = None;
    for i in 0..len {
        let t = i as f64 * dt;
        while t >= cycle_start + period {
            cycle_start += period;
            (period, amp) = draw_cycle(&mut rng);
        }
        let p = (t - cycle_start) / period;
        let raw = if p < STICK_FRACTION {
            amp * (-1.0 + 2.0 * p / STICK_FRACTION)
        } else {
            amp * (1.0 - 2.0 * (p - STICK_FRACTION) / (1.0 - STICK_FRACTION))
        };
        let y = match smoothed {
            None => raw,
            Some(prev) => prev + alpha * (raw - prev),
        };
        smoothed = Some(y);
        out.push(y);
    }
    out
}

fn tremor(s: &MotionScenario, len: usize) -> Vec<f64> {
    if s.tremor_amp == 0.0 {
        return vec![0.0; len];
    }
    let mut rng = seed::rng(s.rng_seed, STREAM_TREMOR);
    let step = s.tremor_amp * (1.0 / MOTION_GRID_RATE).sqrt();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(len);
    out.push(0.0);
    for _ in 1..len {
        let z: f64 = StandardNormal.sample(&mut rng);
        acc += step * z;
        out.push(acc);
    }
    out
}
