//! Single-input single-output LTI blocks as real rational functions of `s`
//! with an optional pure input delay.
//!
//! Coefficients are stored in ascending powers of `s`. Every constructor in
//! this module yields a proper transfer function; improper ones are rejected.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Converts a frequency in Hz to angular frequency in rad/s.
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

/// Converts an angular frequency in rad/s to Hz.
pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Proper rational transfer function `N(s)/D(s) · exp(-s·delay)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf", into = "RawTf")]
pub struct RationalTf {
    num: Vec<f64>,
    den: Vec<f64>,
    delay: f64,
}

#[derive(Serialize, Deserialize)]
struct RawTf {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    #[serde(default)]
    delay: f64,
}

impl TryFrom<RawTf> for RationalTf {
    type Error = Error;
    fn try_from(raw: RawTf) -> Result<Self> {
        RationalTf::new(raw.numerator, raw.denominator, raw.delay)
    }
}

impl From<RationalTf> for RawTf {
    fn from(tf: RationalTf) -> Self {
        RawTf {
            numerator: tf.num,
            denominator: tf.den,
            delay: tf.delay,
        }
    }
}

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    if p.is_empty() {
        p.push(0.0);
    }
    p
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(p: &[f64], s: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

impl RationalTf {
    /// Builds `num(s)/den(s)` (ascending powers) with an input delay in seconds.
    pub fn new(num: Vec<f64>, den: Vec<f64>, delay: f64) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(invalid("transfer function coefficients must be finite"));
        }
        let num = trim(num);
        let den = trim(den);
        if den.iter().all(|&c| c == 0.0) {
            return Err(invalid("denominator is identically zero"));
        }
        if num.len() > den.len() {
            return Err(invalid(format!(
                "improper transfer function (numerator degree {} > denominator degree {})",
                num.len() - 1,
                den.len() - 1
            )));
        }
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(invalid(format!("delay must be finite and >= 0, got {delay}")));
        }
        Ok(Self { num, den, delay })
    }

    pub fn unity() -> Self {
        Self::gain(1.0)
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
            delay: 0.0,
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Denominator degree (number of states of a minimal-order companion realization).
    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn with_delay(mut self, delay: f64) -> Result<Self> {
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(invalid(format!("delay must be finite and >= 0, got {delay}")));
        }
        self.delay = delay;
        Ok(self)
    }

    /// Scales the numerator by `k`.
    pub fn scaled(mut self, k: f64) -> Self {
        self.num.iter_mut().for_each(|c| *c *= k);
        self
    }

    /// Evaluates the rational part at a complex point, ignoring the delay.
    pub fn eval_rational(&self, s: Complex64) -> Option<Complex64> {
        let d = horner(&self.den, s);
        if d == Complex64::new(0.0, 0.0) {
            return None;
        }
        Some(horner(&self.num, s) / d)
    }

    /// Frequency response at `omega` rad/s, delay included.
    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(invalid(format!("evaluation frequency must be >= 0, got {omega}")));
        }
        let s = Complex64::new(0.0, omega);
        let r = self.eval_rational(s).ok_or(Error::PoleOnAxis { omega })?;
        Ok(r * Complex64::from_polar(1.0, -omega * self.delay))
    }

    /// Static gain `N(0)/D(0)`; `None` when the block has a pole at the origin.
    pub fn dc_gain(&self) -> Option<f64> {
        (self.den[0] != 0.0).then(|| self.num[0] / self.den[0])
    }

    /// Cascade `self · other`: polynomial products, delays add.
    pub fn series(&self, other: &RationalTf) -> RationalTf {
        RationalTf {
            num: trim(convolve(&self.num, &other.num)),
            den: trim(convolve(&self.den, &other.den)),
            delay: self.delay + other.delay,
        }
    }

    /// Cascade of any number of blocks; the empty product is unity.
    pub fn chain<'a>(blocks: impl IntoIterator<Item = &'a RationalTf>) -> RationalTf {
        blocks.into_iter().fold(RationalTf::unity(), |acc, b| acc.series(b))
    }

    /// Exact reciprocal (numerator and denominator swapped). Requires a
    /// biproper, delay-free block.
    pub fn reciprocal(&self) -> Result<RationalTf> {
        if self.delay != 0.0 {
            return Err(invalid("cannot invert a block with a pure delay"));
        }
        if self.num.len() != self.den.len() || self.num.iter().all(|&c| c == 0.0) {
            return Err(invalid("reciprocal requires a biproper block"));
        }
        RationalTf::new(self.den.clone(), self.num.clone(), 0.0)
    }

    /// True when both blocks describe the same rational function, judged by
    /// cross-multiplication `N_a·D_b = N_b·D_a` (so common factors need not be
    /// cancelled first) and equal delays.
    pub fn is_equivalent(&self, other: &RationalTf, rel_tol: f64) -> bool {
        if (self.delay - other.delay).abs() > rel_tol * self.delay.abs().max(other.delay.abs()) {
            return false;
        }
        let lhs = convolve(&self.num, &other.den);
        let rhs = convolve(&other.num, &self.den);
        let n = lhs.len().max(rhs.len());
        let scale = lhs.iter().chain(rhs.iter()).fold(0.0_f64, |m, c| m.max(c.abs()));
        (0..n).all(|i| {
            let a = lhs.get(i).copied().unwrap_or(0.0);
            let b = rhs.get(i).copied().unwrap_or(0.0);
            (a - b).abs() <= rel_tol * scale
        })
    }

    /// Controllable-canonical state-space realization of the rational part.
    ///
    /// The companion form is built in the scaled variable `s/Ω` so that the
    /// coefficients stay of order one for blocks with widely spread corner
    /// frequencies; the delay is not part of the realization.
    pub fn realize(&self) -> StateSpace {
        let n = self.order();
        let lead = self.den[n];
        if n == 0 {
            return StateSpace {
                a: DMatrix::zeros(0, 0),
                b: DVector::zeros(0),
                c: RowDVector::zeros(0),
                d: self.num[0] / lead,
            };
        }
        let omega = self.frequency_scale();
        let mut den = vec![0.0; n + 1];
        let mut num = vec![0.0; n + 1];
        let mut pow = 1.0;
        for k in 0..=n {
            den[k] = self.den[k] * pow / (lead * omega.powi(n as i32));
            num[k] = self.num.get(k).copied().unwrap_or(0.0) * pow / (lead * omega.powi(n as i32));
            pow *= omega;
        }
        let d = num[n];
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -den[j];
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let c = RowDVector::from_iterator(n, (0..n).map(|k| num[k] - d * den[k]));
        StateSpace {
            a: a * omega,
            b: b * omega,
            c,
            d,
        }
    }

    fn frequency_scale(&self) -> f64 {
        let n = self.order();
        let m = self.den.iter().position(|&c| c != 0.0).unwrap_or(0);
        if m >= n {
            return 1.0;
        }
        let w = (self.den[m] / self.den[n]).abs().powf(1.0 / (n - m) as f64);
        if w.is_finite() && w > 0.0 {
            w
        } else {
            1.0
        }
    }
}

/// Continuous-time single-input single-output state space `(A, B, C, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}

/// Strictly increasing, positive, finite list of angular frequencies (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid(Vec<f64>);

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        FrequencyGrid::new(v)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(g: FrequencyGrid) -> Self {
        g.0
    }
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(invalid("frequency grid is empty"));
        }
        if omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("frequency grid entries must be finite and > 0"));
        }
        if omegas.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("frequency grid must be strictly increasing"));
        }
        Ok(Self(omegas))
    }

    /// `points` log-spaced angular frequencies between `lo` and `hi` rad/s inclusive.
    pub fn log_space(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(invalid(format!("bad grid bounds [{lo}, {hi}]")));
        }
        if points < 2 {
            return Err(invalid("log grid needs at least 2 points"));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (points - 1) as f64;
        let mut v: Vec<f64> = (0..points).map(|i| (a + step * i as f64).exp()).collect();
        v[0] = lo;
        v[points - 1] = hi;
        Self::new(v)
    }

    /// Log-spaced grid with bounds given in Hz.
    pub fn log_space_hz(lo_hz: f64, hi_hz: f64, points: usize) -> Result<Self> {
        Self::log_space(hz_to_rad(lo_hz), hz_to_rad(hi_hz), points)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hz(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&w| rad_to_hz(w))
    }
}

impl Default for FrequencyGrid {
    /// 1000 log-spaced points over 1 Hz to 10 kHz.
    fn default() -> Self {
        Self::log_space_hz(1.0, 1.0e4, 1000).expect("static grid bounds")
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// `(1 + s/zero)/(1 + s/pole)`; collapses to unity when the corners coincide.
fn corner_ratio(zero: f64, pole: f64) -> RationalTf {
    if zero == pole {
        return RationalTf::unity();
    }
    RationalTf {
        num: vec![1.0, 1.0 / zero],
        den: vec![1.0, 1.0 / pole],
        delay: 0.0,
    }
}

/// Lead filter `(1 + s/ω_r)/(1 + s/ω_f)`.
pub fn make_lead(omega_r: f64, omega_f: f64) -> Result<RationalTf> {
    check_positive("omega_r", omega_r)?;
    check_positive("omega_f", omega_f)?;
    if omega_r >= omega_f {
        return Err(invalid(format!(
            "lead requires omega_r < omega_f, got {omega_r} >= {omega_f}"
        )));
    }
    Ok(corner_ratio(omega_r, omega_f))
}

/// Splits the lead at `ω_x` into `L1 = (1+s/ω_r)/(1+s/ω_x)` and
/// `L2 = (1+s/ω_x)/(1+s/ω_f)`, so that `L1·L2` is the full lead.
pub fn make_split_lead(omega_r: f64, omega_x: f64, omega_f: f64) -> Result<(RationalTf, RationalTf)> {
    check_positive("omega_r", omega_r)?;
    check_positive("omega_x", omega_x)?;
    check_positive("omega_f", omega_f)?;
    if omega_r > omega_f {
        return Err(invalid("split lead requires omega_r <= omega_f"));
    }
    if !(omega_r..=omega_f).contains(&omega_x) {
        return Err(invalid(format!(
            "omega_x = {omega_x} outside [omega_r, omega_f] = [{omega_r}, {omega_f}]"
        )));
    }
    Ok((corner_ratio(omega_r, omega_x), corner_ratio(omega_x, omega_f)))
}

/// PID corner frequencies and gain, all angular frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidParams {
    pub kp: f64,
    pub omega_i: f64,
    pub omega_d: f64,
    pub omega_t: f64,
}

impl PidParams {
    /// Rule-of-thumb corners: `ω_i = ω_c/10`, `ω_d = ω_c/3`, `ω_t = 3ω_c`.
    pub fn rule_of_thumb(kp: f64, omega_c: f64) -> Self {
        Self {
            kp,
            omega_i: omega_c / 10.0,
            omega_d: omega_c / 3.0,
            omega_t: 3.0 * omega_c,
        }
    }

    /// `k_p (1 + ω_i/s) (1 + s/ω_d)/(1 + s/ω_t)` with the integrator pole at
    /// the origin kept exact.
    pub fn tf(&self) -> Result<RationalTf> {
        check_positive("k_p", self.kp)?;
        check_positive("omega_i", self.omega_i)?;
        check_positive("omega_d", self.omega_d)?;
        check_positive("omega_t", self.omega_t)?;
        let num = convolve(&[self.kp * self.omega_i, self.kp], &[1.0, 1.0 / self.omega_d]);
        let den = vec![0.0, 1.0, 1.0 / self.omega_t];
        RationalTf::new(num, den, 0.0)
    }
}

/// PID with rule-of-thumb corners around the crossover `ω_c`.
pub fn make_pid(kp: f64, omega_c: f64) -> Result<RationalTf> {
    check_positive("omega_c", omega_c)?;
    PidParams::rule_of_thumb(kp, omega_c).tf()
}

/// Notch `N` and its exact inverse:
/// `N(s) = (s²/ω_n² + s/(Q1 ω_n) + 1)/(s²/ω_n² + s/(Q2 ω_n) + 1)`.
/// The notch attenuates (|N(jω_n)| = Q2/Q1 < 1) when `Q2 < Q1`.
pub fn make_notch(omega_n: f64, q1: f64, q2: f64) -> Result<(RationalTf, RationalTf)> {
    check_positive("omega_n", omega_n)?;
    check_positive("Q1", q1)?;
    check_positive("Q2", q2)?;
    if q1 == q2 {
        return Ok((RationalTf::unity(), RationalTf::unity()));
    }
    let w2 = 1.0 / (omega_n * omega_n);
    let num = vec![1.0, 1.0 / (q1 * omega_n), w2];
    let den = vec![1.0, 1.0 / (q2 * omega_n), w2];
    let n = RationalTf::new(num.clone(), den.clone(), 0.0)?;
    let n_inv = RationalTf::new(den, num, 0.0)?;
    Ok((n, n_inv))
}

/// Identified stage model `9836 e^{-0.00027 s}/(s² + 8.737 s + 7376)`.
pub fn paper_plant() -> RationalTf {
    RationalTf::new(vec![9836.0], vec![7376.0, 8.737, 1.0], 0.00027).expect("static plant")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn unity_evaluates_to_one() {
        let v = RationalTf::unity().eval(123.0).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn plant_dc_and_150hz() {
        let g = paper_plant();
        let dc = g.eval(0.0).unwrap();
        assert!((dc.norm() - 9836.0 / 7376.0).abs() < 1e-12);
        assert!((g.dc_gain().unwrap() - 1.333514).abs() < 1e-6);
        // |G(j2π150)| = 9836/|7376 - w² + j 8.737 w|
        let w = hz_to_rad(150.0);
        let expect = 9836.0 / Complex64::new(7376.0 - w * w, 8.737 * w).norm();
        assert!((g.eval(w).unwrap().norm() - expect).abs() < 1e-15);
        assert!((expect - 0.01117).abs() < 1e-5);
    }

    #[test]
    fn pole_on_axis_is_reported() {
        let integ = RationalTf::new(vec![1.0], vec![0.0, 1.0], 0.0).unwrap();
        assert_eq!(integ.eval(0.0), Err(Error::PoleOnAxis { omega: 0.0 }));
        let osc = RationalTf::new(vec![1.0], vec![4.0, 0.0, 1.0], 0.0).unwrap();
        assert!(matches!(osc.eval(2.0), Err(Error::PoleOnAxis { .. })));
    }

    #[test]
    fn rejects_improper_and_bad_delay() {
        assert!(RationalTf::new(vec![1.0, 1.0], vec![1.0], 0.0).is_err());
        assert!(RationalTf::new(vec![1.0], vec![0.0, 0.0], 0.0).is_err());
        assert!(RationalTf::new(vec![1.0], vec![1.0], -1e-3).is_err());
        // trailing zeros are trimmed before the properness check
        assert!(RationalTf::new(vec![1.0, 0.0, 0.0], vec![1.0, 1.0], 0.0).is_ok());
    }

    #[test]
    fn series_identity_and_lead_gain() {
        let g = paper_plant();
        assert_eq!(RationalTf::unity().series(&g), g);
        let lead = make_lead(hz_to_rad(50.0), hz_to_rad(450.0)).unwrap();
        let w = hz_to_rad(150.0);
        let gl = g.series(&lead).eval(w).unwrap().norm();
        assert!((gl - g.eval(w).unwrap().norm() * 3.0).abs() < 1e-14);
    }

    #[test]
    fn lead_asymptote_and_peak_phase() {
        let (wr, wf) = (hz_to_rad(150.0), hz_to_rad(3000.0));
        assert!(make_lead(wr, wr).is_err());
        assert!(make_lead(wf, wr).is_err());
        let lead = make_lead(wr, wf).unwrap();
        let hf = lead.eval(1e12).unwrap().norm();
        assert!((hf - 20.0).abs() < 1e-6);
        let peak = lead.eval((wr * wf).sqrt()).unwrap().arg().to_degrees();
        let expect = (20f64.sqrt().atan() - (1.0 / 20f64.sqrt()).atan()).to_degrees();
        assert!((peak - expect).abs() < 1e-10);
        assert!((peak - 64.79).abs() < 0.01);
    }

    #[test]
    fn split_lead_edges() {
        let (wr, wf) = (hz_to_rad(150.0), hz_to_rad(3000.0));
        let (l1, l2) = make_split_lead(wr, wr, wf).unwrap();
        assert_eq!(l1, RationalTf::unity());
        assert_eq!(l2, make_lead(wr, wf).unwrap());
        let (l1, l2) = make_split_lead(wr, wf, wf).unwrap();
        assert_eq!(l2, RationalTf::unity());
        assert_eq!(l1, make_lead(wr, wf).unwrap());
        assert!(make_split_lead(wr, 0.5 * wr, wf).is_err());
        assert!(make_split_lead(wr, 2.0 * wf, wf).is_err());
        let (l1, l2) = make_split_lead(wr, hz_to_rad(360.0), wf).unwrap();
        assert!(l1.series(&l2).is_equivalent(&make_lead(wr, wf).unwrap(), 1e-12));
    }

    #[test]
    fn pid_values() {
        let wc = hz_to_rad(150.0);
        let pid = make_pid(1.0, wc).unwrap();
        let g = pid.eval(wc).unwrap().norm();
        let expect = Complex64::new(1.0, -0.1).norm() * 3.0;
        assert!((g - expect).abs() < 1e-12, "{g} vs {expect}");
        assert!((expect - 3.0150).abs() < 1e-4);
        let hf = pid.eval(1e12).unwrap().norm();
        assert!((hf - 9.0).abs() < 1e-6);
        assert_eq!(pid.den()[0], 0.0);
        let p = PidParams::rule_of_thumb(1.0, wc);
        assert!((rad_to_hz(p.omega_i) - 15.0).abs() < 1e-12);
        assert!((rad_to_hz(p.omega_d) - 50.0).abs() < 1e-12);
        assert!((rad_to_hz(p.omega_t) - 450.0).abs() < 1e-12);
        assert!(make_pid(-1.0, wc).is_err());
        assert!(make_pid(1.0, 0.0).is_err());
    }

    #[test]
    fn notch_properties() {
        let wn = hz_to_rad(50.0);
        let (n, ni) = make_notch(wn, 1.0, 0.4).unwrap();
        assert!((n.eval(wn).unwrap().norm() - 0.4).abs() < 1e-15);
        for w in [1.0, 100.0, wn, 3.0 * wn, 1e4] {
            let p = n.eval(w).unwrap().norm() * ni.eval(w).unwrap().norm();
            assert!((p - 1.0).abs() < 1e-14);
        }
        let (u, ui) = make_notch(wn, 0.7, 0.7).unwrap();
        assert_eq!(u, RationalTf::unity());
        assert_eq!(ui, RationalTf::unity());
        assert!(make_notch(wn, 0.0, 0.4).is_err());
        assert!(make_notch(-wn, 1.0, 0.4).is_err());
    }

    #[test]
    fn realization_matches_transfer_function() {
        let wc = hz_to_rad(150.0);
        let (n, _) = make_notch(hz_to_rad(50.0), 1.0, 0.4).unwrap();
        let tf = make_pid(30.0, wc)
            .unwrap()
            .series(&make_lead(wc, hz_to_rad(3000.0)).unwrap())
            .series(&n);
        let ss = tf.realize();
        assert_eq!(ss.order(), tf.order());
        for w in [3.0, 300.0, 3000.0, 30000.0] {
            let s = Complex64::new(0.0, w);
            let n = ss.order();
            let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
                let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
                diag - ss.a[(i, j)]
            });
            let b = DVector::<Complex64>::from_fn(n, |i, _| ss.b[i].into());
            let x = m.lu().solve(&b).unwrap();
            let y: Complex64 = (0..n).map(|i| x[i] * ss.c[i]).sum::<Complex64>() + ss.d;
            assert!(rel(y, tf.eval(w).unwrap()) < 1e-10);
        }
        let k = RationalTf::gain(2.5).realize();
        assert_eq!(k.order(), 0);
        assert_eq!(k.d, 2.5);
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1.0]).is_err());
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 1000);
        assert!((g.hz().next().unwrap() - 1.0).abs() < 1e-12);
        assert!((g.hz().last().unwrap() - 1e4).abs() < 1e-8);
    }

    fn random_tf() -> impl Strategy<Value = RationalTf> {
        (1usize..=6)
            .prop_flat_map(|deg| {
                (
                    prop::collection::vec(0.1f64..10.0, deg + 1),
                    0..=deg,
                    prop::collection::vec(0.1f64..10.0, deg + 1),
                    0.0f64..1e-3,
                )
            })
            .prop_map(|(den, ndeg, num, delay)| RationalTf::new(num[..=ndeg].to_vec(), den, delay).unwrap())
    }

    proptest! {
        #[test]
        fn series_evaluates_as_product(a in random_tf(), b in random_tf(), lw in -2.0f64..5.0) {
            let w = 10f64.powf(lw);
            let ab = a.series(&b).eval(w).unwrap();
            let prod = a.eval(w).unwrap() * b.eval(w).unwrap();
            prop_assert!(rel(ab, prod) < 1e-12, "rel err {}", rel(ab, prod));
        }

        #[test]
        fn split_lead_product_is_lead(r in 1.0f64..1e3, xf in 0.0f64..1.0, ratio in 1.5f64..100.0) {
            let f = r * ratio;
            let x = r * ratio.powf(xf);
            let (l1, l2) = make_split_lead(r, x, f).unwrap();
            prop_assert!(l1.series(&l2).is_equivalent(&make_lead(r, f).unwrap(), 1e-12));
        }

        #[test]
        fn delay_only_rotates_phase(a in random_tf(), lw in -2.0f64..5.0) {
            let w = 10f64.powf(lw);
            let undelayed = a.clone().with_delay(0.0).unwrap().eval(w).unwrap();
            let delayed = a.eval(w).unwrap();
            prop_assert!((delayed.norm() - undelayed.norm()).abs() <= 1e-12 * undelayed.norm());
            let rot = delayed / undelayed;
            let expect = Complex64::from_polar(1.0, -w * a.delay());
            prop_assert!((rot - expect).norm() < 1e-9);
        }
    }
}
