//! Sampled-data equivalents of continuous LTI blocks, with the pure input
//! delay realized as a sample buffer plus linear interpolation.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::expm;
use crate::lti::{RationalTf, StateSpace};

/// Input reconstruction assumed between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hold {
    /// Piecewise-constant input (zero-order hold).
    Zero,
    /// Piecewise-linear input (triangle / first-order hold). Same poles and
    /// DC gain as [`Hold::Zero`], without its half-sample lag on
    /// feedthrough-dominated blocks.
    First,
}

// Delays within this many samples of an integer are snapped to it.
const DELAY_SNAP: f64 = 1e-9;

/// Discrete state-space block `x⁺ = Φx + Γu_d`, `y = Cx + Du_d`, where `u_d`
/// is the delayed input.
#[derive(Debug, Clone)]
pub struct DiscreteBlock {
    n: usize,
    phi: Vec<f64>,
    gamma: Vec<f64>,
    c: Vec<f64>,
    d: f64,
    delay_samples: usize,
    delay_frac: f64,
    x: Vec<f64>,
    scratch: Vec<f64>,
    // history[i] = u[k-1-i]
    history: VecDeque<f64>,
}

/// Discretizes a transfer function (delay included) at `sample_rate` Hz.
pub fn discretize(tf: &RationalTf, sample_rate: f64, hold: Hold) -> Result<DiscreteBlock> {
    discretize_state_space(&tf.realize(), tf.delay(), sample_rate, hold)
}

/// Discretizes a continuous state space with an input delay in seconds.
pub fn discretize_state_space(ss: &StateSpace, delay: f64, sample_rate: f64, hold: Hold) -> Result<DiscreteBlock> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(invalid(format!("sample rate must be > 0, got {sample_rate}")));
    }
    if !(delay.is_finite() && delay >= 0.0) {
        return Err(invalid(format!("delay must be >= 0, got {delay}")));
    }
    let n = ss.order();
    let t = 1.0 / sample_rate;
    let (phi, gamma, d) = match hold {
        Hold::Zero => {
            let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
            m.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * t));
            m.view_mut((0, n), (n, 1)).copy_from(&(&ss.b * t));
            let e = expm(&m)?;
            let phi = e.view((0, 0), (n, n)).into_owned();
            let gamma: DVector<f64> = e.view((0, n), (n, 1)).column(0).into_owned();
            (phi, gamma, ss.d)
        }
        Hold::First => {
            let mut m = DMatrix::<f64>::zeros(n + 2, n + 2);
            m.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * t));
            m.view_mut((0, n), (n, 1)).copy_from(&(&ss.b * t));
            m[(n, n + 1)] = 1.0;
            let e = expm(&m)?;
            let phi = e.view((0, 0), (n, n)).into_owned();
            let g0: DVector<f64> = e.view((0, n), (n, 1)).column(0).into_owned();
            let g1: DVector<f64> = e.view((0, n + 1), (n, 1)).column(0).into_owned();
            // causal form with state ξ = x − Γ1 u
            let gamma = &phi * &g1 + &g0 - &g1;
            let d = ss.d + (&ss.c * &g1)[(0, 0)];
            (phi, gamma, d)
        }
    };
    let raw = delay * sample_rate;
    let snapped = raw.round();
    let (delay_samples, delay_frac) = if (raw - snapped).abs() < DELAY_SNAP {
        (snapped as usize, 0.0)
    } else {
        (raw.floor() as usize, raw - raw.floor())
    };
    Ok(DiscreteBlock {
        n,
        phi: (0..n * n).map(|i| phi[(i / n, i % n)]).collect(),
        gamma: gamma.iter().copied().collect(),
        c: ss.c.iter().copied().collect(),
        d,
        delay_samples,
        delay_frac,
        x: vec![0.0; n],
        scratch: vec![0.0; n],
        history: VecDeque::from(vec![0.0; delay_samples + 1]),
    })
}

impl DiscreteBlock {
    pub fn order(&self) -> usize {
        self.n
    }

    /// `Φ` in row-major order.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn feedthrough(&self) -> f64 {
        self.d
    }

    /// Integer part of the input delay, in samples.
    pub fn delay_samples(&self) -> usize {
        self.delay_samples
    }

    /// Fractional part of the input delay, in samples.
    pub fn delay_fraction(&self) -> f64 {
        self.delay_frac
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn state_mut(&mut self) -> &mut [f64] {
        &mut self.x
    }

    /// True when the current output depends on the current input sample.
    pub fn has_feedthrough(&self) -> bool {
        self.d != 0.0 && self.delay_samples == 0
    }

    /// Steady-state gain `C(I − Φ)⁻¹Γ + D`; `None` for an integrating block.
    pub fn dc_gain(&self) -> Option<f64> {
        let n = self.n;
        if n == 0 {
            return Some(self.d);
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - self.phi[i * n + j]
        });
        let x = m.lu().solve(&DVector::from_column_slice(&self.gamma))?;
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(self.c.iter().zip(x.iter()).map(|(c, x)| c * x).sum::<f64>() + self.d)
    }

    fn delayed_input(&self, u_now: f64) -> f64 {
        let m = self.delay_samples;
        let newer = if m == 0 { u_now } else { self.history[m - 1] };
        if self.delay_frac == 0.0 {
            newer
        } else {
            (1.0 - self.delay_frac) * newer + self.delay_frac * self.history[m]
        }
    }

    pub fn output(&self, u_now: f64) -> f64 {
        let cx: f64 = self.c.iter().zip(&self.x).map(|(c, x)| c * x).sum();
        cx + self.d * self.delayed_input(u_now)
    }

    /// Moves to the next sample given the current input.
    pub fn advance(&mut self, u_now: f64) {
        let ud = self.delayed_input(u_now);
        let n = self.n;
        for i in 0..n {
            let row = &self.phi[i * n..(i + 1) * n];
            self.scratch[i] = row.iter().zip(&self.x).map(|(p, x)| p * x).sum::<f64>() + self.gamma[i] * ud;
        }
        std::mem::swap(&mut self.x, &mut self.scratch);
        self.history.pop_back();
        self.history.push_front(u_now);
    }

    /// Output sequence for an input sequence, starting from rest.
    pub fn filter(&mut self, input: &[f64]) -> Vec<f64> {
        input
            .iter()
            .map(|&u| {
                let y = self.output(u);
                self.advance(u);
                y
            })
            .collect()
    }
}
