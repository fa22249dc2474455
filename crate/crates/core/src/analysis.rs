//! Closed-loop frequency-domain analysis of the loop
//! `r → e → C1 → R → C2 → (+d) → G → y`, with `y + n` fed back.
//!
//! Open-loop HOSIDFs, base-linear sensitivity, higher-order sensitivities,
//! the pre/post filter ratio and crossover/phase-margin queries live here.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lti::{FrequencyGrid, RationalTf};
use crate::reset::ResetElement;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopTopology {
    pub c1: RationalTf,
    pub reset: ResetElement,
    pub c2: RationalTf,
    pub plant: RationalTf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    OpenLoop,
    Sensitivity,
}

/// Per-harmonic complex response sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HosidfCurve {
    pub grid: FrequencyGrid,
    pub order: u32,
    pub kind: CurveKind,
    pub values: Vec<Complex64>,
}

impl HosidfCurve {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("omega must be > 0, got {omega}")))
    }
}

impl LoopTopology {
    pub fn new(c1: RationalTf, reset: ResetElement, c2: RationalTf, plant: RationalTf) -> Self {
        Self { c1, reset, c2, plant }
    }

    /// Open loop with resets disabled: `C1 · R_bl · C2 · G`.
    pub fn base_linear_open_loop(&self) -> RationalTf {
        RationalTf::chain([&self.c1, &self.reset.base_linear_tf(), &self.c2, &self.plant])
    }

    /// Same loop with every reset coefficient set to one.
    pub fn linearized(&self) -> Result<Self> {
        Ok(Self {
            reset: self.reset.with_gamma(1.0)?,
            ..self.clone()
        })
    }

    /// `ℒ_n(ω) = G(jnω) C2(jnω) H_n(ω) C1(jω) e^{j(n−1)∠C1(jω)}`.
    pub fn open_loop_hosidf(&self, omega: f64, n: u32) -> Result<Complex64> {
        check_omega(omega)?;
        let h = self.reset.hosidf(omega, n)?.value;
        self.compose(omega, n, h)
    }

    fn compose(&self, omega: f64, n: u32, h: Complex64) -> Result<Complex64> {
        if h == Complex64::new(0.0, 0.0) {
            return Ok(h);
        }
        let wn = n as f64 * omega;
        let c1 = self.c1.eval(omega)?;
        let rot = Complex64::from_polar(1.0, (n as f64 - 1.0) * c1.arg());
        Ok(self.plant.eval(wn)? * self.c2.eval(wn)? * h * c1 * rot)
    }

    /// `S_bl(jω) = 1/(1 + L_bl(jω))`.
    pub fn base_linear_sensitivity(&self, omega: f64) -> Result<Complex64> {
        check_omega(omega)?;
        let l = self.c1.eval(omega)?
            * self.reset.base_linear_tf().eval(omega)?
            * self.c2.eval(omega)?
            * self.plant.eval(omega)?;
        let den = Complex64::new(1.0, 0.0) + l;
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::SingularSensitivity { omega });
        }
        Ok(den.inv())
    }

    /// Higher-order sensitivity `S_n(ω)`: the complex amplitude of the n-th
    /// harmonic of the steady-state error for `r = sin(ωt)`.
    pub fn sensitivity_hosidf(&self, omega: f64, n: u32) -> Result<Complex64> {
        check_omega(omega)?;
        if n == 0 {
            return Err(invalid("harmonic order must be >= 1"));
        }
        if n.is_multiple_of(2) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let s1 = self.first_order_sensitivity(omega)?;
        if n == 1 {
            return Ok(s1);
        }
        let ln = self.open_loop_hosidf(omega, n)?;
        let sbl = self.base_linear_sensitivity(n as f64 * omega)?;
        Ok(-ln * sbl * Complex64::from_polar(s1.norm(), n as f64 * s1.arg()))
    }

    fn first_order_sensitivity(&self, omega: f64) -> Result<Complex64> {
        let den = Complex64::new(1.0, 0.0) + self.open_loop_hosidf(omega, 1)?;
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::SingularSensitivity { omega });
        }
        Ok(den.inv())
    }

    /// Evaluates ℒ_n or S_n over a grid, one frequency point per task.
    pub fn curve(&self, grid: &FrequencyGrid, n: u32, kind: CurveKind) -> Result<HosidfCurve> {
        let values = grid
            .omegas()
            .par_iter()
            .map(|&w| match kind {
                CurveKind::OpenLoop => self.open_loop_hosidf(w, n),
                CurveKind::Sensitivity => self.sensitivity_hosidf(w, n),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HosidfCurve {
            grid: grid.clone(),
            order: n,
            kind,
            values,
        })
    }

    /// Gain that puts the first-order open loop at 0 dB at `omega_c`, assuming
    /// the loop was built with unit controller gain.
    pub fn normalize_kp(&self, omega_c: f64) -> Result<f64> {
        normalize_kp(|w| self.open_loop_hosidf(w, 1), omega_c)
    }

    pub fn crossover_and_margin(&self, bracket: (f64, f64)) -> Result<Crossover> {
        crossover_and_margin(|w| self.open_loop_hosidf(w, 1), bracket)
    }
}

/// Predicted ratio `|S_n'|/|S_n| = |N(jω)|·|N⁻¹(jnω)|` after inserting `N`
/// before and `N⁻¹` after the reset element. Returns `+∞` when `N` has a
/// zero at `jnω` (to within 1e-12 of the gain at `jω`).
pub fn prepost_ratio(filter: &RationalTf, omega: f64, n: u32) -> Result<f64> {
    check_omega(omega)?;
    if n == 0 {
        return Err(invalid("harmonic order must be >= 1"));
    }
    let at_w = filter.eval(omega)?.norm();
    let at_nw = filter.eval(n as f64 * omega)?.norm();
    if at_nw <= 1e-12 * at_w.max(1.0) {
        return Ok(f64::INFINITY);
    }
    Ok(at_w / at_nw)
}

/// Gain crossover frequency and phase margin of a first-order describing function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub omega_c: f64,
    pub phase_margin_deg: f64,
}

/// Default crossover search bracket, 1 Hz to 10 kHz in rad/s.
pub fn default_crossover_bracket() -> (f64, f64) {
    (crate::lti::hz_to_rad(1.0), crate::lti::hz_to_rad(1.0e4))
}

const SCAN_POINTS: usize = 4000;

/// Finds the unique frequency where `|L(jω)| = 1` inside `bracket` by a log
/// scan followed by log-bisection. More than one crossing is an error.
pub fn crossover_and_margin<F>(open_loop: F, bracket: (f64, f64)) -> Result<Crossover>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(format!("bad crossover bracket [{lo}, {hi}]")));
    }
    let log_gain = |w: f64| -> Result<f64> { Ok(open_loop(w)?.norm().ln()) };
    let grid = FrequencyGrid::log_space(lo, hi, SCAN_POINTS)?;
    let mut brackets = Vec::new();
    let mut prev = (lo, log_gain(lo)?);
    for &w in &grid.omegas()[1..] {
        let g = log_gain(w)?;
        if prev.1 == 0.0 {
            brackets.push((prev.0, prev.0));
        } else if prev.1.signum() != g.signum() && g != 0.0 {
            brackets.push((prev.0, w));
        }
        prev = (w, g);
    }
    if prev.1 == 0.0 {
        brackets.push((prev.0, prev.0));
    }
    let (mut a, mut b) = match brackets.as_slice() {
        [] => return Err(Error::NoCrossover { lo, hi }),
        [one] => *one,
        _ => return Err(Error::MultipleCrossovers { brackets }),
    };
    let mut ga = log_gain(a)?;
    for _ in 0..200 {
        if b == a {
            break;
        }
        let m = (a * b).sqrt();
        let gm = log_gain(m)?;
        if gm.abs() < 1e-9 || (b / a - 1.0) < 1e-15 {
            a = m;
            b = m;
            break;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let omega_c = (a * b).sqrt();
    let l = open_loop(omega_c)?;
    let mut pm = 180.0 + l.arg().to_degrees();
    if pm > 180.0 {
        pm -= 360.0;
    }
    Ok(Crossover {
        omega_c,
        phase_margin_deg: pm,
    })
}

/// `k_p = 1/|L(jω_c)|` for a loop evaluated with unit controller gain.
pub fn normalize_kp<F>(open_loop_unit_gain: F, omega_c: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    check_omega(omega_c)?;
    let g = open_loop_unit_gain(omega_c)?.norm();
    if g == 0.0 || !g.is_finite() {
        return Err(invalid(format!("loop gain at omega_c is {g}")));
    }
    Ok(1.0 / g)
}
