//! Fixed-step simulation of the closed loop `r → C1 → R → C2 → (+d) → G`,
//! with `y + n` fed back.

mod discrete;
mod signal;

pub use discrete::{discretize, discretize_state_space, DiscreteBlock, Hold};
pub use signal::{generate_signal, mix_seed, SignalDescriptor};

use serde::{Deserialize, Serialize};

use crate::analysis::LoopTopology;
use crate::error::{invalid, Error, Result};
use crate::lti::{RationalTf, StateSpace};
use crate::reset::ResetElement;

/// Default sample rate in Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 100_000.0;
/// Default run length in seconds.
pub const DEFAULT_DURATION: f64 = 4.0;
/// Fraction of a run, counted from the end, treated as steady state.
pub const DEFAULT_ANALYSIS_FRACTION: f64 = 0.5;

/// How a reset instant is placed relative to the sampled zero crossing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetTrigger {
    /// Jump at the first sample on or after the sign change.
    #[default]
    FirstSample,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub topology: LoopTopology,
    pub sample_rate: f64,
    pub duration: f64,
    pub reference: SignalDescriptor,
    pub disturbance: SignalDescriptor,
    pub noise: SignalDescriptor,
    pub seed: u64,
    pub reset_trigger: ResetTrigger,
}

impl SimConfig {
    /// Zero inputs, default rate and duration.
    pub fn new(topology: LoopTopology) -> Self {
        SimConfig {
            topology,
            sample_rate: DEFAULT_SAMPLE_RATE,
            duration: DEFAULT_DURATION,
            reference: SignalDescriptor::Zero,
            disturbance: SignalDescriptor::Zero,
            noise: SignalDescriptor::Zero,
            seed: 0,
            reset_trigger: ResetTrigger::FirstSample,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(invalid(format!("sample rate must be > 0, got {}", self.sample_rate)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid(format!("duration must be > 0, got {}", self.duration)));
        }
        if self.steps() < 2 {
            return Err(invalid("duration shorter than two samples"));
        }
        self.reference.validate()?;
        self.disturbance.validate()?;
        self.noise.validate()
    }

    pub fn steps(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.steps()).map(|k| k as f64 / self.sample_rate).collect()
    }

    /// Samples of `r`, `d` and `n` for this configuration.
    pub fn inputs(&self) -> Result<[Vec<f64>; 3]> {
        let t = self.times();
        Ok([
            generate_signal(&self.reference, &t, mix_seed(self.seed, 0))?,
            generate_signal(&self.disturbance, &t, mix_seed(self.seed, 1))?,
            generate_signal(&self.noise, &t, mix_seed(self.seed, 2))?,
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetEvent {
    pub time: f64,
    pub step: usize,
    pub pre_state: Vec<f64>,
    pub post_state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimWarning {
    /// More resets per second than one per ten samples; the step is likely
    /// too coarse to resolve the crossings.
    ExcessiveResetRate { events_per_second: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimTrace {
    pub sample_rate: f64,
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub e_r: Vec<f64>,
    pub u_r: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// Measurement noise actually injected.
    pub n: Vec<f64>,
    pub events: Vec<ResetEvent>,
    pub warnings: Vec<SimWarning>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// First index of the trailing `fraction` of the run.
    pub fn tail_start(&self, fraction: f64) -> usize {
        let keep = (self.len() as f64 * fraction.clamp(0.0, 1.0)).round() as usize;
        self.len() - keep.min(self.len())
    }

    /// Named channels in export order.
    pub fn channels(&self) -> [(&'static str, &[f64]); 6] {
        [
            ("t", &self.t),
            ("e", &self.e),
            ("e_r", &self.e_r),
            ("u_r", &self.u_r),
            ("u", &self.u),
            ("y", &self.y),
        ]
    }

    pub fn event_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }
}

/// Discretized reset element with the sampled jump rule.
struct ResetBlock {
    block: DiscreteBlock,
    jump: Option<Vec<Vec<f64>>>,
    prev: f64,
    post: Vec<f64>,
}

impl ResetBlock {
    fn new(reset: &ResetElement, sample_rate: f64) -> Result<Self> {
        let ss = StateSpace {
            a: reset.a().clone(),
            b: reset.b().clone(),
            c: reset.c().clone(),
            d: reset.d(),
        };
        let block = discretize_state_space(&ss, 0.0, sample_rate, Hold::Zero)?;
        let jump = if reset.is_linear() {
            None
        } else {
            let m = reset.reset_matrix();
            Some((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
        };
        Ok(ResetBlock {
            post: vec![0.0; block.order()],
            block,
            jump,
            prev: 0.0,
        })
    }

    fn base_linear(reset: &ResetElement, sample_rate: f64) -> Result<Self> {
        Ok(ResetBlock {
            block: discretize(&reset.base_linear_tf(), sample_rate, Hold::Zero)?,
            jump: None,
            prev: 0.0,
            post: Vec::new(),
        })
    }

    /// Applies a pending jump for input `er` at step `k`, then returns the output.
    fn output(&mut self, er: f64, k: usize, time: f64, events: &mut Vec<ResetEvent>) -> f64 {
        if let Some(jm) = &self.jump {
            let prev = self.prev;
            let crossed = k > 0 && (er * prev < 0.0 || (er == 0.0 && prev != 0.0));
            if crossed {
                let x = self.block.state();
                for (i, row) in jm.iter().enumerate() {
                    self.post[i] = row.iter().zip(x).map(|(a, x)| a * x).sum();
                }
                if self.post.iter().zip(x).any(|(p, x)| p != x) {
                    events.push(ResetEvent {
                        time,
                        step: k,
                        pre_state: x.to_vec(),
                        post_state: self.post.clone(),
                    });
                    self.block.state_mut().copy_from_slice(&self.post);
                }
            }
        }
        self.block.output(er)
    }

    fn advance(&mut self, er: f64) {
        self.block.advance(er);
        self.prev = er;
    }
}

/// Runs the hybrid closed loop.
pub fn simulate(cfg: &SimConfig) -> Result<SimTrace> {
    let block = ResetBlock::new(&cfg.topology.reset, cfg.sample_rate)?;
    run(cfg, block)
}

/// Runs the loop with the reset element replaced by its base-linear system.
pub fn simulate_base_linear(cfg: &SimConfig) -> Result<SimTrace> {
    let block = ResetBlock::base_linear(&cfg.topology.reset, cfg.sample_rate)?;
    run(cfg, block)
}

/// Drives the reset element alone with `input` sampled at `sample_rate`;
/// returns its output and reset events.
pub fn simulate_reset_element(
    reset: &ResetElement,
    input: &[f64],
    sample_rate: f64,
) -> Result<(Vec<f64>, Vec<ResetEvent>)> {
    let mut block = ResetBlock::new(reset, sample_rate)?;
    let mut events = Vec::new();
    let mut out = Vec::with_capacity(input.len());
    for (k, &v) in input.iter().enumerate() {
        let y = block.output(v, k, k as f64 / sample_rate, &mut events);
        if !y.is_finite() {
            return Err(Error::Divergence {
                time: k as f64 / sample_rate,
            });
        }
        out.push(y);
        block.advance(v);
    }
    Ok((out, events))
}

fn plant_hold(tf: &RationalTf, fs: f64) -> Hold {
    // FOH's extra feedthrough is harmless only behind at least one sample of delay
    if tf.delay() * fs >= 1.0 - 1e-9 {
        Hold::First
    } else {
        Hold::Zero
    }
}

fn run(cfg: &SimConfig, mut reset: ResetBlock) -> Result<SimTrace> {
    cfg.validate()?;
    let fs = cfg.sample_rate;
    let top = &cfg.topology;
    let mut c1 = discretize(&top.c1, fs, Hold::First)?;
    let mut c2 = discretize(&top.c2, fs, Hold::First)?;
    let mut plant = discretize(&top.plant, fs, plant_hold(&top.plant, fs))?;
    if plant.has_feedthrough() {
        return Err(Error::AlgebraicLoop);
    }
    let [rs, ds, ns] = cfg.inputs()?;
    let steps = cfg.steps();
    let t = cfg.times();
    let mut tr = SimTrace {
        sample_rate: fs,
        e: Vec::with_capacity(steps),
        e_r: Vec::with_capacity(steps),
        u_r: Vec::with_capacity(steps),
        u: Vec::with_capacity(steps),
        y: Vec::with_capacity(steps),
        ..Default::default()
    };
    for k in 0..steps {
        let y = plant.output(0.0);
        let e = rs[k] - (y + ns[k]);
        let er = c1.output(e);
        let ur = reset.output(er, k, t[k], &mut tr.events);
        let u = c2.output(ur);
        if !(y.is_finite() && u.is_finite() && er.is_finite()) || y.abs() > 1e150 || u.abs() > 1e150 {
            return Err(Error::Divergence { time: t[k] });
        }
        tr.e.push(e);
        tr.e_r.push(er);
        tr.u_r.push(ur);
        tr.u.push(u);
        tr.y.push(y);
        c1.advance(e);
        reset.advance(er);
        c2.advance(ur);
        plant.advance(u + ds[k]);
    }
    let limit = fs / 10.0;
    let rate = tr.events.len() as f64 / cfg.duration;
    if rate > limit {
        tr.warnings.push(SimWarning::ExcessiveResetRate {
            events_per_second: rate,
            limit,
        });
    }
    tr.t = t;
    tr.n = ns;
    Ok(tr)
}
