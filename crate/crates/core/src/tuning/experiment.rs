use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_loop, resolve_kp, ControllerSpec, NotchParams, Variant};
use crate::analysis::{CurveKind, LoopTopology};
use crate::error::{invalid, Error, Result};
use crate::lti::{FrequencyGrid, RationalTf};
use crate::sim::{mix_seed, simulate, SignalDescriptor, SimConfig, SimTrace, DEFAULT_ANALYSIS_FRACTION};
use crate::spectral::{cpsd, rms, variance, CpsdCurve};

/// Signals and timing shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub sample_rate: f64,
    pub duration: f64,
    /// Trailing fraction of each run used for steady-state statistics.
    pub analysis_fraction: f64,
    #[serde(default)]
    pub reference: SignalDescriptor,
    #[serde(default)]
    pub disturbance: SignalDescriptor,
    /// Standard deviation of the white measurement noise.
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    /// `d = 0.25 sin(2π·40 t)`, `r = 0`, 4 s at 100 kHz, last half analyzed.
    pub fn paper() -> Self {
        Scenario {
            sample_rate: crate::sim::DEFAULT_SAMPLE_RATE,
            duration: crate::sim::DEFAULT_DURATION,
            analysis_fraction: DEFAULT_ANALYSIS_FRACTION,
            reference: SignalDescriptor::Zero,
            disturbance: SignalDescriptor::sine(0.25, 40.0),
            noise_std: 0.0,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.analysis_fraction > 0.0 && self.analysis_fraction <= 1.0) {
            return Err(invalid(format!(
                "analysis_fraction must be in (0, 1], got {}",
                self.analysis_fraction
            )));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(invalid(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        Ok(())
    }

    pub fn sim_config(&self, topology: LoopTopology, noise_std: f64, seed: u64) -> SimConfig {
        SimConfig {
            sample_rate: self.sample_rate,
            duration: self.duration,
            reference: self.reference.clone(),
            disturbance: self.disturbance.clone(),
            noise: if noise_std > 0.0 {
                SignalDescriptor::GaussianWhite { std_dev: noise_std }
            } else {
                SignalDescriptor::Zero
            },
            seed,
            ..SimConfig::new(topology)
        }
    }
}

/// One simulated run and its steady-state error RMS.
#[derive(Debug, Clone)]
pub struct PointRun {
    pub trace: SimTrace,
    pub tail_start: usize,
    pub rms: f64,
}

pub fn run_point(topology: &LoopTopology, scenario: &Scenario, noise_std: f64, seed: u64) -> Result<PointRun> {
    scenario.validate()?;
    let trace = simulate(&scenario.sim_config(topology.clone(), noise_std, seed))?;
    let tail_start = trace.tail_start(scenario.analysis_fraction);
    let rms = rms(&trace.e[tail_start..]);
    Ok(PointRun { trace, tail_start, rms })
}

/// Variance of the steady-state plant output with the noise switched off.
pub fn noise_free_output_power(topology: &LoopTopology, scenario: &Scenario) -> Result<f64> {
    let run = run_point(topology, scenario, 0.0, scenario.seed)?;
    Ok(variance(&run.trace.y[run.tail_start..]))
}

/// `10 log10(P_y / σ²)` with `P_y` the noise-free output power.
pub fn snr_of(topology: &LoopTopology, noise_std: f64, scenario: &Scenario) -> Result<f64> {
    if noise_std == 0.0 {
        return Err(Error::InfiniteSnr);
    }
    if !(noise_std.is_finite() && noise_std > 0.0) {
        return Err(invalid(format!("noise_std must be > 0, got {noise_std}")));
    }
    let p = noise_free_output_power(topology, scenario)?;
    Ok(10.0 * (p / (noise_std * noise_std)).log10())
}

/// Noise level giving `snr_db` for `topology`; zero for an infinite target.
/// `P_y` does not depend on `σ`, so the inversion is closed form.
pub fn noise_std_for_snr(topology: &LoopTopology, snr_db: f64, scenario: &Scenario) -> Result<f64> {
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    if !snr_db.is_finite() {
        return Err(invalid(format!("SNR target must be finite or +inf, got {snr_db}")));
    }
    let p = noise_free_output_power(topology, scenario)?;
    Ok((p / 10f64.powf(snr_db / 10.0)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// Targets in dB; `inf` runs without noise.
    pub snr_db: Vec<f64>,
    pub grid_points: usize,
    pub seeds: usize,
    pub base_seed: u64,
    /// Reuse the same noise realizations at every `ω_x`.
    #[serde(default = "yes")]
    pub common_random_numbers: bool,
}

fn yes() -> bool {
    true
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            snr_db: vec![47.1],
            grid_points: 25,
            seeds: 5,
            base_seed: 1,
            common_random_numbers: true,
        }
    }
}

impl SweepSettings {
    pub fn run_seed(&self, point: usize, rep: usize) -> u64 {
        if self.common_random_numbers {
            mix_seed(self.base_seed, rep as u64)
        } else {
            mix_seed(mix_seed(self.base_seed, point as u64), rep as u64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega_x_hz: f64,
    pub rms_mean: f64,
    pub rms_std: f64,
    pub runs: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub snr_target_db: f64,
    pub noise_std: f64,
    /// Output power over the measured noise variance, averaged over runs.
    pub snr_achieved_db: f64,
    pub points: Vec<SweepPoint>,
    pub argmin_index: Option<usize>,
    pub argmin_hz: Option<f64>,
    /// The minimum is at neither end of the grid.
    pub interior_minimum: bool,
}

impl SweepResult {
    pub fn failed(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| p.error.is_some())
    }
}

fn log_grid_hz(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

fn with_omega_x(base: &ControllerSpec, omega_x_hz: f64) -> Result<ControllerSpec> {
    let variant = match base.variant {
        Variant::Linear => return Err(invalid("an ω_x sweep needs a CgLp controller")),
        Variant::Cglp { .. } => Variant::Cglp { omega_x_hz },
        Variant::FilteredCglp { notch, .. } => Variant::FilteredCglp { omega_x_hz, notch },
    };
    Ok(base.with_variant(&format!("{}@{omega_x_hz:.1}", base.name), variant))
}

/// Noise level for `snr_db` measured on the base controller with `ω_x = ω_r`.
pub fn baseline_noise_std(base: &ControllerSpec, plant: &RationalTf, scenario: &Scenario, snr_db: f64) -> Result<f64> {
    let spec = with_omega_x(base, base.params.omega_r_hz)?;
    noise_std_for_snr(&build_loop(&spec, plant)?, snr_db, scenario)
}

/// Steady-state error RMS over a log grid of `ω_x ∈ [ω_r, ω_f]`, one result
/// per SNR target.
pub fn sweep_omega_x(
    base: &ControllerSpec,
    plant: &RationalTf,
    scenario: &Scenario,
    settings: &SweepSettings,
) -> Result<Vec<SweepResult>> {
    if settings.grid_points < 5 {
        return Err(invalid(format!(
            "grid_points must be >= 5, got {}",
            settings.grid_points
        )));
    }
    if settings.seeds < 1 {
        return Err(invalid("seeds must be >= 1"));
    }
    scenario.validate()?;
    let grid = log_grid_hz(base.params.omega_r_hz, base.params.omega_f_hz, settings.grid_points);
    let loops = grid
        .iter()
        .map(|&wx| build_loop(&with_omega_x(base, wx)?, plant))
        .collect::<Result<Vec<_>>>()?;
    let p_signal = noise_free_output_power(&loops[0], scenario)?;
    settings
        .snr_db
        .iter()
        .map(|&snr| {
            let sigma = if snr == f64::INFINITY {
                0.0
            } else {
                (p_signal / 10f64.powf(snr / 10.0)).sqrt()
            };
            let reps = if sigma == 0.0 { 1 } else { settings.seeds };
            let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..reps).map(move |j| (i, j))).collect();
            let outcomes: Vec<Result<(f64, f64)>> = jobs
                .par_iter()
                .map(|&(i, j)| {
                    let run = run_point(&loops[i], scenario, sigma, settings.run_seed(i, j))?;
                    let nvar = variance(&run.trace.n[run.tail_start..]);
                    Ok((run.rms, nvar))
                })
                .collect();
            let mut points = Vec::with_capacity(grid.len());
            let mut noise_var = Vec::new();
            for (i, &wx) in grid.iter().enumerate() {
                let mut runs = Vec::with_capacity(reps);
                let mut error = None;
                for o in &outcomes[i * reps..(i + 1) * reps] {
                    match o {
                        Ok((r, nv)) => {
                            runs.push(*r);
                            noise_var.push(*nv);
                        }
                        Err(e) => error = Some(e.to_string()),
                    }
                }
                let (rms_mean, rms_std) = if error.is_some() {
                    (f64::NAN, f64::NAN)
                } else {
                    let m = runs.iter().sum::<f64>() / runs.len() as f64;
                    (m, variance(&runs).sqrt())
                };
                points.push(SweepPoint {
                    omega_x_hz: wx,
                    rms_mean,
                    rms_std,
                    runs,
                    error,
                });
            }
            let argmin_index = points
                .iter()
                .enumerate()
                .filter(|(_, p)| p.error.is_none())
                .min_by(|a, b| a.1.rms_mean.total_cmp(&b.1.rms_mean))
                .map(|(i, _)| i);
            let mean_nvar = noise_var.iter().sum::<f64>() / noise_var.len().max(1) as f64;
            Ok(SweepResult {
                snr_target_db: snr,
                noise_std: sigma,
                snr_achieved_db: if mean_nvar > 0.0 {
                    10.0 * (p_signal / mean_nvar).log10()
                } else {
                    f64::INFINITY
                },
                argmin_hz: argmin_index.map(|i| grid[i]),
                interior_minimum: argmin_index.is_some_and(|i| i > 0 && i + 1 < grid.len()),
                argmin_index,
                points,
            })
        })
        .collect()
}

/// The five configurations of the disturbance study: linear, lead after the
/// reset (`ω_x = ω_r`), lead before it (`ω_x = ω_f`), split at 360 Hz, and
/// split at 360 Hz with the 50 Hz notch pair.
pub fn paper_comparison_specs() -> Vec<ControllerSpec> {
    let nl = ControllerSpec::paper_cglp();
    let wr = nl.params.omega_r_hz;
    let wf = nl.params.omega_f_hz;
    vec![
        ControllerSpec::paper_linear(),
        nl.with_variant("cglp-wx-wr", Variant::Cglp { omega_x_hz: wr }),
        nl.with_variant("cglp-wx-wf", Variant::Cglp { omega_x_hz: wf }),
        nl.with_variant("cglp-wx-360", Variant::Cglp { omega_x_hz: 360.0 }),
        nl.with_variant(
            "filtered-cglp-wx-360",
            Variant::FilteredCglp {
                omega_x_hz: 360.0,
                notch: NotchParams::paper(),
            },
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub name: String,
    pub kp: f64,
    pub s1: Vec<f64>,
    pub s3: Vec<f64>,
    pub cpsd: CpsdCurve,
    pub rms: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub grid_hz: Vec<f64>,
    pub noise_std: f64,
    pub entries: Vec<ComparisonEntry>,
    /// Names sorted by final CPSD value, largest first.
    pub ordering: Vec<String>,
}

impl ComparisonReport {
    pub fn entry(&self, name: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// `|S₁|`, `|S₃|`, error CPSD and RMS for each spec under one scenario. All
/// specs see the same noise realization.
pub fn compare_controllers(
    specs: &[ControllerSpec],
    plant: &RationalTf,
    scenario: &Scenario,
    grid: &FrequencyGrid,
) -> Result<ComparisonReport> {
    if specs.len() < 2 {
        return Err(invalid("comparison needs at least two controllers"));
    }
    scenario.validate()?;
    let entries = specs
        .par_iter()
        .map(|spec| {
            let top = build_loop(spec, plant)?;
            let s1 = top.curve(grid, 1, CurveKind::Sensitivity)?.magnitudes();
            let s3 = top.curve(grid, 3, CurveKind::Sensitivity)?.magnitudes();
            let run = run_point(&top, scenario, scenario.noise_std, scenario.seed)?;
            let tail = &run.trace.e[run.tail_start..];
            Ok(ComparisonEntry {
                name: spec.name.clone(),
                kp: resolve_kp(spec, plant)?,
                s1,
                s3,
                cpsd: cpsd(tail, scenario.sample_rate)?,
                rms: run.rms,
                variance: variance(tail),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<&ComparisonEntry> = entries.iter().collect();
    order.sort_by(|a, b| b.cpsd.total().total_cmp(&a.cpsd.total()));
    Ok(ComparisonReport {
        grid_hz: grid.hz().collect(),
        noise_std: scenario.noise_std,
        ordering: order.iter().map(|e| e.name.clone()).collect(),
        entries,
    })
}
