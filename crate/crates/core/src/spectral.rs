//! Trace post-processing: RMS, single-harmonic extraction and cumulative
//! power spectral density.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Fewest base periods accepted by [`extract_harmonic`].
pub const MIN_PERIODS: usize = 5;

/// Root mean square. NaN for an empty slice.
pub fn rms(samples: &[f64]) -> f64 {
    (samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Population variance. NaN for an empty slice.
pub fn variance(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEstimate {
    pub order: u32,
    /// Complex amplitude in the sine convention: `A sin(nωt + φ)` maps to `A e^{jφ}`.
    pub amplitude: Complex64,
    pub base_frequency_hz: f64,
}

impl HarmonicEstimate {
    pub fn magnitude(&self) -> f64 {
        self.amplitude.norm()
    }

    pub fn phase_deg(&self) -> f64 {
        self.amplitude.arg().to_degrees()
    }
}

/// Fourier coefficient at `n·f0` over the longest trailing window holding an
/// integer number of base periods. Sample `k` is taken at `t = k/fs`.
pub fn extract_harmonic(samples: &[f64], fs: f64, f0: f64, n: u32) -> Result<HarmonicEstimate> {
    if !(fs > 0.0 && f0 > 0.0 && fs.is_finite() && f0.is_finite()) || n == 0 {
        return Err(invalid("harmonic extraction needs fs > 0, f0 > 0 and n >= 1"));
    }
    if n as f64 * f0 >= fs / 2.0 {
        return Err(invalid(format!("harmonic {n} of {f0} Hz is at or above Nyquist")));
    }
    let period = fs / f0;
    let periods = (samples.len() as f64 / period).floor() as usize;
    if periods < MIN_PERIODS {
        return Err(Error::InsufficientData(format!(
            "{periods} base periods available, need {MIN_PERIODS}"
        )));
    }
    let len = ((periods as f64 * period).round() as usize).min(samples.len());
    let start = samples.len() - len;
    let w = 2.0 * PI * n as f64 * f0 / fs;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &x) in samples.iter().enumerate().skip(start) {
        acc += x * Complex64::from_polar(1.0, -w * k as f64);
    }
    Ok(HarmonicEstimate {
        order: n,
        amplitude: Complex64::i() * acc * (2.0 / len as f64),
        base_frequency_hz: f0,
    })
}

/// Welch estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchSettings {
    pub segment_len: usize,
    /// Overlap as a fraction of the segment.
    pub overlap: f64,
}

impl Default for WelchSettings {
    fn default() -> Self {
        WelchSettings {
            segment_len: 1 << 14,
            overlap: 0.5,
        }
    }
}

/// Cumulative one-sided power spectrum, absolute units (signal²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpsdCurve {
    pub frequency_hz: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub sample_rate: f64,
    pub settings: WelchSettings,
    pub segments: usize,
}

impl CpsdCurve {
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Cumulative power at the first bin at or above `f_hz`.
    pub fn at(&self, f_hz: f64) -> f64 {
        let i = self.frequency_hz.partition_point(|&f| f < f_hz);
        self.cumulative[i.min(self.cumulative.len() - 1)]
    }
}

/// Welch PSD with a periodic Hann window, 50% overlap, 2¹⁴-sample segments
/// and per-segment mean removal, integrated over frequency.
pub fn cpsd(samples: &[f64], fs: f64) -> Result<CpsdCurve> {
    cpsd_with(samples, fs, WelchSettings::default())
}

pub fn cpsd_with(samples: &[f64], fs: f64, settings: WelchSettings) -> Result<CpsdCurve> {
    let m = settings.segment_len;
    if m < 2 || !(0.0..1.0).contains(&settings.overlap) {
        return Err(invalid("segment length must be >= 2 and overlap in [0, 1)"));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(invalid(format!("sample rate must be > 0, got {fs}")));
    }
    let hop = ((m as f64 * (1.0 - settings.overlap)).round() as usize).max(1);
    if samples.len() < m {
        return Err(Error::InsufficientData(format!(
            "{} samples, need at least {m}",
            samples.len()
        )));
    }
    let segments = (samples.len() - m) / hop + 1;
    if segments < 2 {
        return Err(Error::InsufficientData(format!(
            "{} samples give one segment of {m}, need two",
            samples.len()
        )));
    }
    let window: Vec<f64> = (0..m)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / m as f64).cos())
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let bins = m / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for s in 0..segments {
        let seg = &samples[s * hop..s * hop + m];
        let mean = seg.iter().sum::<f64>() / m as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, b) in psd.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
    }
    let scale = 1.0 / (fs * wss * segments as f64);
    let df = fs / m as f64;
    let mut total = 0.0;
    let mut cumulative = Vec::with_capacity(bins);
    for (k, p) in psd.iter().enumerate() {
        let one_sided = if k == 0 || (m.is_multiple_of(2) && k == m / 2) {
            1.0
        } else {
            2.0
        };
        total += p * scale * one_sided * df;
        cumulative.push(total);
    }
    Ok(CpsdCurve {
        frequency_hz: (0..bins).map(|k| k as f64 * df).collect(),
        cumulative,
        sample_rate: fs,
        settings,
        segments,
    })
}
