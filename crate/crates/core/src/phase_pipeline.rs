//! Slow-time phase extraction from IF frames.
//!
//! Chain: range FFT per chirp → target bin selection → per-chirp phase of
//! that bin → unwrapping → spectral-mask band-pass → breath count from the
//! zero-padded spectrum peak.
//!
//! FFT convention: forward transforms are unnormalised,
//! `X[k] = Σ x[n]·exp(−j2πkn/N)`; inverse transforms divide by `N`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::radar_sim::IfFrame;
use crate::{Error, Label, Result};

/// Default respiratory pass band (Hz).
pub const DEFAULT_BAND: (f64, f64) = (0.1, 0.8);

/// Zero-padding factor used by [`estimate_breaths`].
pub const PAD_FACTOR: usize = 16;

/// Normal breathing range in breaths per observation window, inclusive.
pub const NORMAL_BREATHS: (f64, f64) = (5.0, 8.0);

/// Range spectra of every chirp in a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfiles {
    spectra: Vec<Complex64>,
    num_chirps: usize,
    bins: usize,
    /// Frequency spacing between bins (Hz).
    pub bin_width_hz: f64,
    /// Chirp repetition rate (Hz).
    pub slow_rate_hz: f64,
}

impl RangeProfiles {
    /// Wraps precomputed spectra laid out row-major, one row per chirp.
    pub fn new(spectra: Vec<Complex64>, num_chirps: usize, bin_width_hz: f64, slow_rate_hz: f64) -> Result<Self> {
        if num_chirps == 0 || spectra.is_empty() || !spectra.len().is_multiple_of(num_chirps) {
            return Err(Error::InvalidParameter(
                "spectra must hold a whole number of non-empty rows".into(),
            ));
        }
        let bins = spectra.len() / num_chirps;
        Ok(Self {
            spectra,
            num_chirps,
            bins,
            bin_width_hz,
            slow_rate_hz,
        })
    }

    pub fn num_chirps(&self) -> usize {
        self.num_chirps
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        &self.spectra[m * self.bins..(m + 1) * self.bins]
    }

    fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.spectra.chunks_exact(self.bins)
    }
}

/// Processing stage of a [`PhaseSeries`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    Wrapped,
    Unwrapped,
    /// Band-passed to `[low_hz, high_hz]`.
    Filtered {
        low_hz: f64,
        high_hz: f64,
    },
}

/// Phase of the target bin sampled once per chirp.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub values: Vec<f64>,
    pub slow_rate_hz: f64,
    pub stage: Stage,
}

impl PhaseSeries {
    pub fn new(values: Vec<f64>, slow_rate_hz: f64, stage: Stage) -> Self {
        Self {
            values,
            slow_rate_hz,
            stage,
        }
    }

    /// Duration spanned by the series (s).
    pub fn window_duration(&self) -> f64 {
        self.values.len() as f64 / self.slow_rate_hz
    }
}

/// Range FFT of every chirp, no window.
pub fn range_profiles(frame: &IfFrame) -> RangeProfiles {
    let n = frame.adc_samples();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut spectra = frame.samples().to_vec();
    fft.process(&mut spectra);
    let params = frame.params();
    RangeProfiles {
        spectra,
        num_chirps: frame.num_chirps(),
        bins: n,
        bin_width_hz: params.bin_width(),
        slow_rate_hz: params.slow_rate(),
    }
}

/// Index of the bin with the largest mean magnitude across chirps, DC excluded.
///
/// Ties go to the lower index.
pub fn select_bin(profiles: &RangeProfiles) -> Result<usize> {
    let mut mean = vec![0.0; profiles.bins];
    for row in profiles.rows() {
        for (acc, s) in mean.iter_mut().zip(row) {
            *acc += s.norm();
        }
    }
    let chirps = profiles.num_chirps as f64;
    mean.iter_mut().for_each(|v| *v /= chirps);

    let mut best: Option<(usize, f64)> = None;
    for (k, &mag) in mean.iter().enumerate().skip(1) {
        if mag == 0.0 {
            continue;
        }
        // Round-off level differences count as ties.
        match best {
            Some((_, top)) if mag <= top * (1.0 + 1e-12) => {}
            _ => best = Some((k, mag)),
        }
    }
    best.map(|(k, _)| k).ok_or(Error::NoSignal)
}

/// Principal value in `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Wrapped phase of `bin` for every chirp.
pub fn extract_phase(profiles: &RangeProfiles, bin: usize) -> Result<PhaseSeries> {
    if bin >= profiles.bins {
        return Err(Error::InvalidParameter(format!(
            "bin {bin} out of range for {} bins",
            profiles.bins
        )));
    }
    let values = profiles
        .rows()
        .enumerate()
        .map(|(m, row)| {
            let s = row[bin];
            if s.re == 0.0 && s.im == 0.0 {
                return Err(Error::PhaseUndefined(m));
            }
            let arg = s.im.atan2(s.re);
            // atan2 yields −π for a negative-zero imaginary part.
            Ok(if arg == -PI { PI } else { arg })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseSeries::new(values, profiles.slow_rate_hz, Stage::Wrapped))
}

/// First-difference unwrapping; the first sample is kept as is.
pub fn unwrap(series: &PhaseSeries) -> Result<PhaseSeries> {
    if series.stage != Stage::Wrapped {
        return Err(Error::InvalidParameter("unwrap expects a wrapped series".into()));
    }
    Ok(PhaseSeries::new(
        unwrap_values(&series.values),
        series.slow_rate_hz,
        Stage::Unwrapped,
    ))
}

/// Unwraps raw phase values; see [`unwrap`].
pub fn unwrap_values(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut correction = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            let diff = v - values[i - 1];
            if diff > PI {
                correction -= TAU;
            } else if diff < -PI {
                correction += TAU;
            }
        }
        out.push(v + correction);
    }
    out
}

fn bin_frequency(k: usize, len: usize, rate: f64) -> f64 {
    let signed = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
    signed * rate / len as f64
}

/// Zero-phase band-pass by spectral masking: bins whose |frequency| lies
/// outside `[low_hz, high_hz]` are zeroed.
pub fn bandpass(series: &PhaseSeries, low_hz: f64, high_hz: f64) -> Result<PhaseSeries> {
    if series.stage != Stage::Unwrapped {
        return Err(Error::InvalidParameter("bandpass expects an unwrapped series".into()));
    }
    let nyquist = series.slow_rate_hz / 2.0;
    if !(low_hz >= 0.0 && low_hz < high_hz && high_hz <= nyquist) {
        return Err(Error::InvalidParameter(format!(
            "invalid band [{low_hz}, {high_hz}] Hz for Nyquist {nyquist} Hz"
        )));
    }
    let len = series.values.len();
    if len == 0 {
        return Err(Error::InvalidParameter("empty phase series".into()));
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = series.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(len).process(&mut buf);
    for (k, s) in buf.iter_mut().enumerate() {
        let f = bin_frequency(k, len, series.slow_rate_hz).abs();
        if f < low_hz || f > high_hz {
            *s = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = len as f64;
    Ok(PhaseSeries::new(
        buf.iter().map(|s| s.re / scale).collect(),
        series.slow_rate_hz,
        Stage::Filtered { low_hz, high_hz },
    ))
}

/// Breaths per observation window from the dominant in-band frequency.
///
/// The series is zero-padded to [`PAD_FACTOR`] times its length, so the
/// estimate is quantised to `1 / PAD_FACTOR` breaths per window.
pub fn estimate_breaths(series: &PhaseSeries) -> Result<f64> {
    let Stage::Filtered { low_hz, high_hz } = series.stage else {
        return Err(Error::InvalidParameter(
            "breath estimation expects a filtered series".into(),
        ));
    };
    if series.values.iter().all(|&v| v == 0.0) {
        return Err(Error::NoRespiratoryEnergy);
    }
    let len = series.values.len() * PAD_FACTOR;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (b, &v) in buf.iter_mut().zip(&series.values) {
        b.re = v;
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let rate = series.slow_rate_hz;
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in buf.iter().enumerate().take(len / 2 + 1) {
        let f = k as f64 * rate / len as f64;
        if f < low_hz || f > high_hz {
            continue;
        }
        let mag = s.norm_sqr();
        if best.is_none_or(|(_, top)| mag > top) {
            best = Some((k, mag));
        }
    }
    match best {
        Some((k, mag)) if mag > 0.0 => Ok(k as f64 * rate / len as f64 * series.window_duration()),
        _ => Err(Error::NoRespiratoryEnergy),
    }
}

/// Normal iff `5 ≤ breaths ≤ 8` per window.
pub fn classify_by_threshold(breaths: f64) -> Label {
    let (lo, hi) = NORMAL_BREATHS;
    if (lo..=hi).contains(&breaths) {
        Label::Normal
    } else {
        Label::Abnormal
    }
}

/// Output of [`process_frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedFrame {
    pub bin: usize,
    pub unwrapped: PhaseSeries,
    pub filtered: PhaseSeries,
}

/// Runs the whole chain on one frame with the given pass band.
pub fn process_frame(frame: &IfFrame, band: (f64, f64)) -> Result<ProcessedFrame> {
    let profiles = range_profiles(frame);
    let bin = select_bin(&profiles)?;
    let unwrapped = unwrap(&extract_phase(&profiles, bin)?)?;
    let filtered = bandpass(&unwrapped, band.0, band.1)?;
    Ok(ProcessedFrame {
        bin,
        unwrapped,
        filtered,
    })
}
