//! Deterministic excitation signals for the reference, disturbance and
//! measurement-noise inputs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum SignalDescriptor {
    #[default]
    Zero,
    /// `amplitude · sin(2π f t + phase)`, phase in radians.
    Sine {
        amplitude: f64,
        frequency_hz: f64,
        #[serde(default)]
        phase: f64,
    },
    GaussianWhite {
        std_dev: f64,
    },
    Sum {
        terms: Vec<SignalDescriptor>,
    },
}

impl SignalDescriptor {
    pub fn sine(amplitude: f64, frequency_hz: f64) -> Self {
        SignalDescriptor::Sine {
            amplitude,
            frequency_hz,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SignalDescriptor::Zero => Ok(()),
            SignalDescriptor::Sine {
                amplitude,
                frequency_hz,
                phase,
            } => {
                if !amplitude.is_finite() || !phase.is_finite() {
                    return Err(invalid("sine amplitude and phase must be finite"));
                }
                if !(frequency_hz.is_finite() && *frequency_hz > 0.0) {
                    return Err(invalid(format!("sine frequency must be > 0, got {frequency_hz}")));
                }
                Ok(())
            }
            SignalDescriptor::GaussianWhite { std_dev } => {
                if std_dev.is_finite() && *std_dev >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("noise standard deviation must be >= 0, got {std_dev}")))
                }
            }
            SignalDescriptor::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
        }
    }

    /// True when the descriptor always produces zeros.
    pub fn is_zero(&self) -> bool {
        match self {
            SignalDescriptor::Zero => true,
            SignalDescriptor::Sine { amplitude, .. } => *amplitude == 0.0,
            SignalDescriptor::GaussianWhite { std_dev } => *std_dev == 0.0,
            SignalDescriptor::Sum { terms } => terms.iter().all(|t| t.is_zero()),
        }
    }
}

/// SplitMix64 finalizer over a pair of words; derives independent stream
/// seeds from a base seed and an index.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples `desc` at the given times. Gaussian components draw from a
/// ChaCha8 stream seeded from `seed`; sum terms use independent sub-seeds.
pub fn generate_signal(desc: &SignalDescriptor, times: &[f64], seed: u64) -> Result<Vec<f64>> {
    desc.validate()?;
    let mut out = vec![0.0; times.len()];
    accumulate(desc, times, seed, &mut out);
    Ok(out)
}

fn accumulate(desc: &SignalDescriptor, times: &[f64], seed: u64, out: &mut [f64]) {
    match desc {
        SignalDescriptor::Zero => {}
        SignalDescriptor::Sine {
            amplitude,
            frequency_hz,
            phase,
        } => {
            let w = 2.0 * PI * frequency_hz;
            for (o, &t) in out.iter_mut().zip(times) {
                *o += amplitude * (w * t + phase).sin();
            }
        }
        SignalDescriptor::GaussianWhite { std_dev } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for o in out.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *o += std_dev * z;
            }
        }
        SignalDescriptor::Sum { terms } => {
            for (i, t) in terms.iter().enumerate() {
                accumulate(t, times, mix_seed(seed, i as u64), out);
            }
        }
    }
}
