use std::fs;
use std::path::{Path, PathBuf};

use cglp::checks::{run_checks, CheckOutcome};
use cglp::io::{
    write_cpsd_csv, write_csv, write_events_csv, write_harmonics_csv, write_json, write_trace_csv, Metadata,
};
use cglp::spectral::{cpsd, extract_harmonic, variance, HarmonicEstimate};
use cglp::tuning::{baseline_noise_std, noise_std_for_snr, run_point, sweep_omega_x, SweepResult};
use cglp::{build_loop, CurveKind, LoopTopology, SignalDescriptor, Variant};
use serde::Serialize;

use crate::config::Experiment;
use crate::CliError;

/// Output sink shared by the commands.
pub struct Output {
    dir: PathBuf,
    meta: Metadata,
    pub written: Vec<PathBuf>,
}

impl Output {
    /// Creates the directory and writes the config snapshot into it.
    pub fn open(exp: &Experiment) -> Result<Self, CliError> {
        fs::create_dir_all(&exp.output_dir)?;
        let snapshot = exp.output_dir.join("config.toml");
        fs::write(&snapshot, exp.snapshot_toml())?;
        Ok(Output {
            dir: exp.output_dir.clone(),
            meta: Metadata::new(exp.config_hash(), exp.scenario.seed),
            written: vec![snapshot],
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn csv(&mut self, name: &str, columns: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let p = self.path(name);
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        write_csv(&p, &self.meta, &cols, rows)?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        let p = self.path(name);
        write_json(&p, &self.meta, data)?;
        Ok(())
    }

    fn file(&mut self, name: &str, f: impl FnOnce(&Path, &Metadata) -> cglp::Result<()>) -> Result<(), CliError> {
        let p = self.path(name);
        f(&p, &self.meta)?;
        Ok(())
    }
}

fn phase_deg(v: num_complex::Complex64) -> f64 {
    if v.norm() == 0.0 {
        0.0
    } else {
        v.arg().to_degrees()
    }
}

fn loops(exp: &Experiment) -> Result<Vec<(String, LoopTopology)>, CliError> {
    exp.controllers
        .iter()
        .map(|c| Ok((c.name.clone(), build_loop(c, &exp.plant)?)))
        .collect()
}

/// `(f, |ℒ_n|, ∠ℒ_n)` for each requested harmonic.
pub fn hosidf(exp: &Experiment, out: &mut Output) -> Result<(), CliError> {
    let grid = exp.grid();
    for (name, top) in loops(exp)? {
        let mut columns = vec!["f_hz".to_string()];
        let mut rows: Vec<Vec<f64>> = grid.hz().map(|f| vec![f]).collect();
        for &n in &exp.analysis.harmonics {
            columns.push(format!("l{n}_mag"));
            columns.push(format!("l{n}_phase_deg"));
            let c = top.curve(&grid, n, CurveKind::OpenLoop)?;
            for (row, v) in rows.iter_mut().zip(&c.values) {
                row.push(v.norm());
                row.push(phase_deg(*v));
            }
        }
        out.csv(&format!("hosidf_{name}.csv"), &columns, &rows)?;
    }
    Ok(())
}

/// `|S_n|`, `∠S_n` and, for `n > 1`, the factors `|S_bl(jnω)|` and `|ℒ_n|`.
pub fn sensitivity(exp: &Experiment, out: &mut Output) -> Result<(), CliError> {
    let grid = exp.grid();
    for (name, top) in loops(exp)? {
        let mut columns = vec!["f_hz".to_string()];
        let mut rows: Vec<Vec<f64>> = grid.hz().map(|f| vec![f]).collect();
        for &n in &exp.analysis.harmonics {
            columns.push(format!("s{n}_mag"));
            columns.push(format!("s{n}_phase_deg"));
            let s = top.curve(&grid, n, CurveKind::Sensitivity)?;
            for (row, v) in rows.iter_mut().zip(&s.values) {
                row.push(v.norm());
                row.push(phase_deg(*v));
            }
            if n > 1 {
                columns.push(format!("sbl_{n}w_mag"));
                columns.push(format!("l{n}_mag"));
                let l = top.curve(&grid, n, CurveKind::OpenLoop)?;
                for ((row, &w), v) in rows.iter_mut().zip(grid.omegas()).zip(&l.values) {
                    row.push(top.base_linear_sensitivity(n as f64 * w)?.norm());
                    row.push(v.norm());
                }
            }
        }
        out.csv(&format!("sensitivity_{name}.csv"), &columns, &rows)?;
    }
    Ok(())
}

fn first_sine(d: &SignalDescriptor) -> Option<f64> {
    match d {
        SignalDescriptor::Sine {
            frequency_hz,
            amplitude,
            ..
        } if *amplitude != 0.0 => Some(*frequency_hz),
        SignalDescriptor::Sum { terms } => terms.iter().find_map(first_sine),
        _ => None,
    }
}

/// Noise level for the experiment, derived from `snr_db` when given.
fn noise_std(exp: &Experiment) -> Result<f64, CliError> {
    let Some(snr) = exp.snr_db else {
        return Ok(exp.scenario.noise_std);
    };
    let cglp = exp.controllers.iter().find(|c| c.variant != Variant::Linear);
    Ok(match cglp {
        Some(spec) => baseline_noise_std(spec, &exp.plant, &exp.scenario, snr)?,
        None => noise_std_for_snr(&build_loop(&exp.controllers[0], &exp.plant)?, snr, &exp.scenario)?,
    })
}

#[derive(Serialize)]
struct HarmonicRow {
    n: u32,
    magnitude: f64,
    phase_deg: f64,
}

#[derive(Serialize)]
struct RunSummary {
    name: String,
    rms: f64,
    variance: f64,
    cpsd_total: Option<f64>,
    resets: usize,
    warnings: Vec<cglp::sim::SimWarning>,
    harmonics: Vec<HarmonicRow>,
}

#[derive(Serialize)]
struct SimulateSummary {
    noise_std: f64,
    snr_db: Option<f64>,
    base_frequency_hz: Option<f64>,
    runs: Vec<RunSummary>,
    /// Controller names by steady-state error variance, largest first.
    ordering: Vec<String>,
}

/// Trace, events, CPSD and harmonic tables per controller, plus a summary.
pub fn simulate(exp: &Experiment, out: &mut Output) -> Result<(), CliError> {
    let sigma = noise_std(exp)?;
    let sc = &exp.scenario;
    let f0 = first_sine(&sc.disturbance).or_else(|| first_sine(&sc.reference));
    let mut runs = Vec::new();
    for (name, top) in loops(exp)? {
        let run = run_point(&top, sc, sigma, sc.seed)?;
        let tail = &run.trace.e[run.tail_start..];
        out.file(&format!("trace_{name}.csv"), |p, m| write_trace_csv(p, m, &run.trace))?;
        out.file(&format!("events_{name}.csv"), |p, m| write_events_csv(p, m, &run.trace))?;
        let curve = cpsd(tail, sc.sample_rate).ok();
        if let Some(c) = &curve {
            out.file(&format!("cpsd_{name}.csv"), |p, m| write_cpsd_csv(p, m, c))?;
        }
        let mut harmonics: Vec<HarmonicEstimate> = Vec::new();
        if let Some(f0) = f0 {
            for &n in &exp.analysis.harmonics {
                if let Ok(h) = extract_harmonic(tail, sc.sample_rate, f0, n) {
                    harmonics.push(h);
                }
            }
            out.file(&format!("harmonics_{name}.csv"), |p, m| {
                write_harmonics_csv(p, m, &harmonics)
            })?;
        }
        runs.push(RunSummary {
            name,
            rms: run.rms,
            variance: variance(tail),
            cpsd_total: curve.map(|c| c.total()),
            resets: run.trace.events.len(),
            warnings: run.trace.warnings.clone(),
            harmonics: harmonics
                .iter()
                .map(|h| HarmonicRow {
                    n: h.order,
                    magnitude: h.magnitude(),
                    phase_deg: h.phase_deg(),
                })
                .collect(),
        });
    }
    let mut order: Vec<&RunSummary> = runs.iter().collect();
    order.sort_by(|a, b| b.variance.total_cmp(&a.variance));
    let summary = SimulateSummary {
        noise_std: sigma,
        snr_db: exp.snr_db,
        base_frequency_hz: f0,
        ordering: order.iter().map(|r| r.name.clone()).collect(),
        runs,
    };
    out.json("simulate_summary.json", &summary)
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    controller: &'a str,
    results: &'a [SweepResult],
}

fn snr_tag(snr: f64) -> String {
    if snr.is_infinite() {
        "inf".into()
    } else {
        format!("{snr}")
    }
}

/// `ω_x` sweep for every CgLp controller.
pub fn sweep(exp: &Experiment, out: &mut Output) -> Result<(), CliError> {
    let targets: Vec<_> = exp
        .controllers
        .iter()
        .filter(|c| c.variant != Variant::Linear)
        .collect();
    if targets.is_empty() {
        return Err(CliError::Validation("sweep needs at least one CgLp controller".into()));
    }
    for spec in targets {
        let results = sweep_omega_x(spec, &exp.plant, &exp.scenario, &exp.sweep)?;
        for r in &results {
            let rows: Vec<Vec<f64>> = r
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.omega_x_hz,
                        p.rms_mean,
                        p.rms_std,
                        f64::from(u8::from(p.error.is_some())),
                    ]
                })
                .collect();
            let columns = ["omega_x_hz", "rms_mean", "rms_std", "failed"].map(String::from);
            out.csv(
                &format!("sweep_{}_snr{}.csv", spec.name, snr_tag(r.snr_target_db)),
                &columns,
                &rows,
            )?;
            for p in r.points.iter().filter(|p| p.error.is_some()) {
                eprintln!(
                    "warning: {} omega_x = {:.1} Hz failed: {}",
                    spec.name,
                    p.omega_x_hz,
                    p.error.as_deref().unwrap_or("")
                );
            }
        }
        out.json(
            &format!("sweep_{}.json", spec.name),
            &SweepSummary {
                controller: &spec.name,
                results: &results,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateReport {
    controller: String,
    checks: Vec<CheckOutcome>,
}

/// Runs the invariant suite on each configured loop. Returns whether all passed.
pub fn validate(exp: &Experiment, out: &mut Output) -> Result<bool, CliError> {
    let duration = exp.scenario.duration.min(1.0);
    let mut reports = Vec::new();
    let mut ok = true;
    for (name, top) in loops(exp)? {
        let checks = run_checks(&top, exp.scenario.sample_rate, duration);
        for c in &checks {
            println!(
                "{} {name}: {} ({})",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.detail
            );
            ok &= c.passed;
        }
        reports.push(ValidateReport {
            controller: name,
            checks,
        });
    }
    out.json("validate.json", &reports)?;
    Ok(ok)
}
