//! FMCW radar IF-signal simulator for a single breathing point target.
//!
//! Each chirp is modelled as a complex (I/Q) beat tone
//!
//! ```text
//! s[m][n] = exp(j·2π·(f_b(R_m)·t_n + 2·R_m/λ)) + w[m][n]
//! ```
//!
//! with `t_n = n / adc_rate`, `R_m` the chest range at slow time
//! `m · chirp_period`, `f_b(R) = 2·K·R/c` and `w` circular complex Gaussian
//! noise. The residual video phase and intra-chirp Doppler are dropped.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

// Noise and scenario draws use independent ChaCha streams of the same seed.
const NOISE_STREAM: u64 = 0;
const SCENARIO_STREAM: u64 = 1;

/// Waveform and timing configuration of the chirp sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpParams {
    /// Start frequency (Hz).
    pub f0: f64,
    /// Chirp rate (Hz/s).
    pub slope_k: f64,
    /// Fast-time sweep length (s).
    pub chirp_duration: f64,
    /// Slow-time repetition interval (s).
    pub chirp_period: f64,
    pub num_chirps: usize,
    pub adc_samples: usize,
}

/// 77 GHz start, 29.982 MHz/µs slope, 100 µs sweeps every 50 ms,
/// 512 chirps of 512 ADC samples.
pub fn default_paper_params() -> ChirpParams {
    ChirpParams {
        f0: 77e9,
        slope_k: 29.982e12,
        chirp_duration: 100e-6,
        chirp_period: 50e-3,
        num_chirps: 512,
        adc_samples: 512,
    }
}

impl Default for ChirpParams {
    fn default() -> Self {
        default_paper_params()
    }
}

impl ChirpParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.f0, self.slope_k, self.chirp_duration, self.chirp_period]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("chirp parameters must be finite".into()));
        }
        if self.f0 <= 0.0 || self.slope_k <= 0.0 || self.chirp_duration <= 0.0 {
            return Err(Error::InvalidParameter(
                "f0, slope and chirp duration must be positive".into(),
            ));
        }
        if self.chirp_period < self.chirp_duration {
            return Err(Error::InvalidParameter(
                "chirp period shorter than chirp duration".into(),
            ));
        }
        if self.num_chirps < 2 || self.adc_samples < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 chirps and 2 ADC samples".into(),
            ));
        }
        if self.bandwidth() >= self.f0 {
            return Err(Error::InvalidParameter(
                "sweep bandwidth must stay below the start frequency".into(),
            ));
        }
        Ok(())
    }

    /// Swept bandwidth `K · chirp_duration` (Hz).
    pub fn bandwidth(&self) -> f64 {
        self.slope_k * self.chirp_duration
    }

    /// Fast-time sampling rate (Hz).
    pub fn adc_rate(&self) -> f64 {
        self.adc_samples as f64 / self.chirp_duration
    }

    /// Slow-time sampling rate, one sample per chirp (Hz).
    pub fn slow_rate(&self) -> f64 {
        1.0 / self.chirp_period
    }

    /// Observation window covered by one frame (s).
    pub fn window_duration(&self) -> f64 {
        self.num_chirps as f64 * self.chirp_period
    }

    /// Range-FFT bin spacing (Hz).
    pub fn bin_width(&self) -> f64 {
        self.adc_rate() / self.adc_samples as f64
    }

    /// Carrier wavelength at the start frequency (m).
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f0
    }

    /// Beat frequency of a point target at `range` metres (Hz).
    pub fn beat_frequency(&self, range: f64) -> f64 {
        2.0 * self.slope_k * range / SPEED_OF_LIGHT
    }

    /// Range resolution `c / 2B` (m).
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth())
    }
}

/// Parametric chest-wall motion observed by the radar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreathingScenario {
    /// Mean distance to the chest (m).
    pub base_range: f64,
    /// Peak chest displacement (m).
    pub breath_amplitude: f64,
    /// Breathing frequency (Hz).
    pub breath_freq: f64,
    /// Initial phase of the motion sinusoid (rad).
    pub motion_phase: f64,
    /// Per-sample SNR (dB); `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl BreathingScenario {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.base_range,
            self.breath_amplitude,
            self.breath_freq,
            self.motion_phase,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter("scenario fields must be finite".into()));
        }
        if self.base_range <= 0.0 {
            return Err(Error::InvalidParameter("base range must be positive".into()));
        }
        if self.breath_amplitude < 0.0 || self.breath_freq < 0.0 {
            return Err(Error::InvalidParameter(
                "breath amplitude and frequency must be non-negative".into(),
            ));
        }
        if self.breath_amplitude >= self.base_range {
            return Err(Error::InvalidParameter(
                "breath amplitude must be smaller than the base range".into(),
            ));
        }
        Ok(())
    }

    /// Chest range at time `t` (m).
    pub fn chest_displacement(&self, t: f64) -> f64 {
        self.base_range + self.breath_amplitude * (TAU * self.breath_freq * t + self.motion_phase).sin()
    }

    /// Ground-truth breaths in one observation window of `params`.
    pub fn breaths_per_window(&self, params: &ChirpParams) -> f64 {
        self.breath_freq * params.window_duration()
    }
}

/// One frame of IF samples, `num_chirps` rows by `adc_samples` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct IfFrame {
    samples: Vec<Complex64>,
    params: ChirpParams,
}

impl IfFrame {
    pub fn from_samples(params: ChirpParams, samples: Vec<Complex64>) -> Result<Self> {
        let expected = params.num_chirps * params.adc_samples;
        if samples.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: samples.len(),
            });
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidParameter("IF samples must be finite".into()));
        }
        Ok(Self { samples, params })
    }

    pub fn params(&self) -> &ChirpParams {
        &self.params
    }

    pub fn num_chirps(&self) -> usize {
        self.params.num_chirps
    }

    pub fn adc_samples(&self) -> usize {
        self.params.adc_samples
    }

    /// Fast-time samples of chirp `m`.
    pub fn chirp(&self, m: usize) -> &[Complex64] {
        let n = self.params.adc_samples;
        &self.samples[m * n..(m + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.samples.chunks_exact(self.params.adc_samples)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Debug dump: one line per chirp, interleaved `re,im` per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let line: Vec<String> = row
                .iter()
                .flat_map(|s| [crate::io::fmt_real(s.re), crate::io::fmt_real(s.im)])
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Noise standard deviation per real/imaginary component for unit-power signal.
fn noise_sigma(snr_db: f64) -> Option<f64> {
    if snr_db == f64::INFINITY {
        None
    } else {
        let noise_power = 10f64.powf(-snr_db / 10.0);
        Some((noise_power / 2.0).sqrt())
    }
}

/// Synthesises the IF frame a radar with `params` would record from `scenario`.
pub fn simulate_frame(params: &ChirpParams, scenario: &BreathingScenario) -> Result<IfFrame> {
    params.validate()?;
    scenario.validate()?;

    let lambda = params.wavelength();
    let adc_rate = params.adc_rate();
    let mut samples = Vec::with_capacity(params.num_chirps * params.adc_samples);
    for m in 0..params.num_chirps {
        let range = scenario.chest_displacement(m as f64 * params.chirp_period);
        let beat = params.beat_frequency(range);
        // Work in cycles and keep only the fractional part to preserve precision.
        let carrier_cycles = (2.0 * range / lambda).fract();
        for n in 0..params.adc_samples {
            let cycles = (beat * (n as f64 / adc_rate)).fract() + carrier_cycles;
            samples.push(Complex64::from_polar(1.0, TAU * cycles.fract()));
        }
    }

    if let Some(sigma) = noise_sigma(scenario.snr_db) {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(NOISE_STREAM);
        for s in samples.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(sigma * re, sigma * im);
        }
    }

    IfFrame::from_samples(*params, samples)
}

/// Population of simulated subjects with uniformly drawn breathing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortSpec {
    pub count: usize,
    /// Breathing frequency bounds (Hz).
    pub breath_range: (f64, f64),
    /// Chest displacement amplitude bounds (m).
    pub amplitude_range: (f64, f64),
    pub snr_db: f64,
    pub base_range: f64,
    pub seed: u64,
}

impl CohortSpec {
    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("cohort count must be at least 1".into()));
        }
        for (name, (lo, hi)) in [("breath", self.breath_range), ("amplitude", self.amplitude_range)] {
            if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
                return Err(Error::InvalidParameter(format!("invalid {name} range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Scenario of subject `index`, drawn from seed `seed + index`.
    pub fn scenario(&self, index: usize) -> BreathingScenario {
        let seed = self.seed.wrapping_add(index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SCENARIO_STREAM);
        let (f_lo, f_hi) = self.breath_range;
        let (a_lo, a_hi) = self.amplitude_range;
        let breath_freq = f_lo + (f_hi - f_lo) * rng.random::<f64>();
        let breath_amplitude = a_lo + (a_hi - a_lo) * rng.random::<f64>();
        let motion_phase = TAU * rng.random::<f64>() - PI;
        BreathingScenario {
            base_range: self.base_range,
            breath_amplitude,
            breath_freq,
            motion_phase,
            snr_db: self.snr_db,
            seed,
        }
    }
}

/// Simulates every subject of `cohort`, pairing each frame with its ground truth.
///
/// Subjects are independent and are simulated in parallel; output order
/// follows the subject index.
pub fn simulate_cohort(params: &ChirpParams, cohort: &CohortSpec) -> Result<Vec<(IfFrame, BreathingScenario)>> {
    params.validate()?;
    cohort.validate()?;
    (0..cohort.count)
        .into_par_iter()
        .map(|i| {
            let scenario = cohort.scenario(i);
            simulate_frame(params, &scenario).map(|frame| (frame, scenario))
        })
        .collect()
}
