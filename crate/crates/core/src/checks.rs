//! Invariant suite run against a configured loop.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::LoopTopology;
use crate::error::Result;
use crate::lti::FrequencyGrid;
use crate::sim::{simulate, simulate_base_linear, SignalDescriptor, SimConfig};
use crate::spectral::{cpsd, variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.into(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((p, d)) => Self::new(name, p, d),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Runs the analysis and simulation invariants on `topology`, simulating
/// `duration` seconds at `sample_rate`.
pub fn run_checks(topology: &LoopTopology, sample_rate: f64, duration: f64) -> Vec<CheckOutcome> {
    let grid = FrequencyGrid::log_space_hz(1.0, 10_000.0, 60).expect("static grid");
    let mut out = Vec::new();

    out.push(CheckOutcome::new(
        "reset element Hurwitz",
        topology.reset.is_hurwitz(),
        "eigenvalues of A_r in the open left half-plane".into(),
    ));

    out.push(CheckOutcome::from_result(
        "even harmonics vanish",
        (|| {
            let mut worst = 0.0f64;
            for &w in grid.omegas() {
                for n in [2, 4, 6] {
                    worst = worst.max(topology.open_loop_hosidf(w, n)?.norm());
                }
            }
            Ok((worst == 0.0, format!("max |L_even| = {worst:e}")))
        })(),
    ));

    out.push(CheckOutcome::from_result(
        "linear limit of L1",
        (|| {
            let lin = topology.linearized()?;
            let bl = lin.base_linear_open_loop();
            let mut worst = 0.0f64;
            for &w in grid.omegas() {
                worst = worst.max(rel(lin.open_loop_hosidf(w, 1)?, bl.eval(w)?));
            }
            Ok((worst < 1e-9, format!("max relative deviation {worst:e}")))
        })(),
    ));

    let mut cfg = SimConfig::new(topology.clone());
    cfg.sample_rate = sample_rate;
    cfg.duration = duration;
    cfg.disturbance = SignalDescriptor::sine(0.25, 40.0);
    cfg.noise = SignalDescriptor::GaussianWhite { std_dev: 1e-5 };
    cfg.seed = 17;

    out.push(CheckOutcome::from_result(
        "simulator determinism",
        (|| {
            let a = simulate(&cfg)?;
            let b = simulate(&cfg)?;
            Ok((a == b, format!("{} samples, {} resets", a.len(), a.events.len())))
        })(),
    ));

    out.push(CheckOutcome::from_result(
        "reset jumps exact",
        (|| {
            let tr = simulate(&cfg)?;
            let m = topology.reset.reset_matrix();
            let exact = tr.events.iter().all(|ev| {
                (0..m.nrows()).all(|i| {
                    let v: f64 = (0..m.ncols()).map(|j| m[(i, j)] * ev.pre_state[j]).sum();
                    v == ev.post_state[i]
                })
            });
            let ordered = tr.events.windows(2).all(|w| w[0].time < w[1].time);
            Ok((exact && ordered, format!("{} events checked", tr.events.len())))
        })(),
    ));

    out.push(CheckOutcome::from_result(
        "linear-limit simulation",
        (|| {
            let mut lin = cfg.clone();
            lin.topology = topology.linearized()?;
            let a = simulate(&lin)?;
            let b = simulate_base_linear(&lin)?;
            let scale = b.y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            let worst = a.y.iter().zip(&b.y).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale;
            Ok((
                worst < 1e-9 && a.events.is_empty(),
                format!("max relative deviation {worst:e}"),
            ))
        })(),
    ));

    out.push(CheckOutcome::from_result(
        "CPSD monotone and Parseval",
        (|| {
            let tr = simulate(&cfg)?;
            let tail = &tr.e[tr.tail_start(0.5)..];
            let c = cpsd(tail, sample_rate)?;
            let mono = c.cumulative.windows(2).all(|w| w[1] >= w[0]);
            let ratio = c.total() / variance(tail);
            Ok((
                mono && (ratio - 1.0).abs() < 0.05,
                format!("CPSD/variance = {ratio:.4}"),
            ))
        })(),
    ));

    out
}
