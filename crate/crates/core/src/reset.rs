//! Reset element with zero-crossing reset surface and its higher-order
//! sinusoidal-input describing functions (HOSIDF).
//!
//! Between resets the element evolves as `ẋ = A_r x + B_r e_r`,
//! `u_r = C_r x + D_r e_r`. When `e_r` crosses zero and `(A_ρ − I)x ≠ 0`
//! the state jumps to `A_ρ x`, with `A_ρ = diag(γ_1, …, γ_n)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::expm;
use crate::lti::RationalTf;

/// Default harmonic truncation: odd harmonics up to this order.
pub const DEFAULT_MAX_HARMONIC: u32 = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct ResetElement {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
    d: f64,
    gammas: Vec<f64>,
}

/// Complex gain of the n-th harmonic of the element output per unit input sinusoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicResponse {
    pub order: u32,
    pub value: Complex64,
}

fn check_gamma(g: f64) -> Result<()> {
    if g.is_finite() && g > -1.0 && g <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("reset coefficient must lie in (-1, 1], got {g}")))
    }
}

impl ResetElement {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>, d: f64, gammas: Vec<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.len() != n || gammas.len() != n {
            return Err(invalid(format!(
                "inconsistent reset element dimensions: A {}x{}, B {}, C {}, A_rho {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len(),
                gammas.len()
            )));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|x| !x.is_finite()) || !d.is_finite() {
            return Err(invalid("reset element matrices must be finite"));
        }
        gammas.iter().try_for_each(|&g| check_gamma(g))?;
        Ok(Self { a, b, c, d, gammas })
    }

    /// Generalized first-order reset element: `A_r = −ω_α`, `B_r = 1`,
    /// `C_r = ω_α`, `D_r = 0`, `A_ρ = γ`.
    pub fn gfore(omega_alpha: f64, gamma: f64) -> Result<Self> {
        if !(omega_alpha.is_finite() && omega_alpha > 0.0) {
            return Err(invalid(format!("omega_alpha must be > 0, got {omega_alpha}")));
        }
        check_gamma(gamma)?;
        Self::new(
            DMatrix::from_element(1, 1, -omega_alpha),
            DVector::from_element(1, 1.0),
            RowDVector::from_element(1, omega_alpha),
            0.0,
            vec![gamma],
        )
    }

    /// Static gain with no states (never resets).
    pub fn static_gain(d: f64) -> Result<Self> {
        Self::new(DMatrix::zeros(0, 0), DVector::zeros(0), RowDVector::zeros(0), d, vec![])
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Diagonal of the reset matrix `A_ρ`.
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn reset_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.gammas))
    }

    /// True when every γ equals one, i.e. resets never change the state.
    pub fn is_linear(&self) -> bool {
        self.gammas.iter().all(|&g| g == 1.0)
    }

    pub fn is_hurwitz(&self) -> bool {
        if self.order() == 0 {
            return true;
        }
        self.a.clone().complex_eigenvalues().iter().all(|l| l.re < 0.0)
    }

    /// Same element with every reset coefficient replaced by `gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let mut out = self.clone();
        out.gammas.iter_mut().for_each(|g| *g = gamma);
        Ok(out)
    }

    /// Transfer function of the base linear system `C_r(sI − A_r)⁻¹B_r + D_r`.
    pub fn base_linear_tf(&self) -> RationalTf {
        let n = self.order();
        if n == 0 {
            return RationalTf::gain(self.d);
        }
        // Faddeev–LeVerrier: det(sI − A) = Σ p_k s^k and
        // adj(sI − A) = Σ_{k=1..n} M_k s^{n−k}.
        let id = DMatrix::<f64>::identity(n, n);
        let mut p = vec![0.0; n + 1];
        p[n] = 1.0;
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut num = vec![0.0; n + 1];
        for k in 1..=n {
            m = &self.a * &m + &id * p[n - k + 1];
            let cmb = (&self.c * &m * &self.b)[(0, 0)];
            num[n - k] += cmb;
            p[n - k] = -(&self.a * &m).trace() / k as f64;
        }
        for (nk, pk) in num.iter_mut().zip(&p) {
            *nk += self.d * pk;
        }
        RationalTf::new(num, p, 0.0).expect("realization of a finite state space is proper")
    }

    /// The describing-function correction matrix `Θ_D(ω)`; identically zero
    /// when `A_ρ = I`.
    pub fn theta_d(&self, omega: f64) -> Result<DMatrix<f64>> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(invalid(format!("omega must be > 0, got {omega}")));
        }
        let n = self.order();
        let id = DMatrix::<f64>::identity(n, n);
        let a_rho = self.reset_matrix();
        let lambda = &id * (omega * omega) + &self.a * &self.a;
        let lambda_inv = lambda.try_inverse().ok_or(Error::DescribingFunctionUndefined {
            omega,
            reason: "omega^2 I + A_r^2 is singular",
        })?;
        let e = expm(&(&self.a * (PI / omega)))?;
        let delta = &id + &e;
        let delta_r = &id + &a_rho * &e;
        let delta_r_inv = delta_r.try_inverse().ok_or(Error::DescribingFunctionUndefined {
            omega,
            reason: "I + A_rho exp(pi/omega A_r) is singular",
        })?;
        let gamma_r = delta_r_inv * &a_rho * &delta * &lambda_inv;
        Ok(&delta * (gamma_r - lambda_inv) * (-2.0 * omega * omega / PI))
    }

    /// HOSIDF `H_n(ω)` of the element for a unit sinusoid at `ω`.
    pub fn hosidf(&self, omega: f64, n: u32) -> Result<HarmonicResponse> {
        if n == 0 {
            return Err(invalid("harmonic order must be >= 1"));
        }
        if n.is_multiple_of(2) {
            return Ok(HarmonicResponse {
                order: n,
                value: Complex64::new(0.0, 0.0),
            });
        }
        let theta = self.theta_d(omega)?;
        let value = self.hosidf_with_theta(&theta, omega, n)?;
        Ok(HarmonicResponse { order: n, value })
    }

    /// All harmonics `1..=n_max` at one frequency, sharing one `Θ_D` evaluation.
    pub fn hosidf_series(&self, omega: f64, n_max: u32) -> Result<Vec<HarmonicResponse>> {
        let theta = self.theta_d(omega)?;
        (1..=n_max)
            .map(|n| {
                let value = if n % 2 == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.hosidf_with_theta(&theta, omega, n)?
                };
                Ok(HarmonicResponse { order: n, value })
            })
            .collect()
    }

    fn hosidf_with_theta(&self, theta: &DMatrix<f64>, omega: f64, n: u32) -> Result<Complex64> {
        let dim = self.order();
        let j = Complex64::new(0.0, 1.0);
        let d = if n == 1 { self.d } else { 0.0 };
        if dim == 0 {
            return Ok(Complex64::new(d, 0.0));
        }
        let s = j * (n as f64 * omega);
        let m = DMatrix::<Complex64>::from_fn(dim, dim, |r, c| {
            let diag = if r == c { s } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(r, c)]
        });
        // rhs = (I + jΘ)B for n = 1, jΘB otherwise
        let rhs = DVector::<Complex64>::from_fn(dim, |r, _| {
            let tb: f64 = (0..dim).map(|c| theta[(r, c)] * self.b[c]).sum();
            let base = if n == 1 { self.b[r] } else { 0.0 };
            Complex64::new(base, tb)
        });
        let x = m.lu().solve(&rhs).ok_or(Error::PoleOnAxis {
            omega: n as f64 * omega,
        })?;
        let out: Complex64 = (0..dim).map(|r| x[r] * self.c[r]).sum();
        Ok(out + d)
    }
}

/// High-frequency limit of `Θ_D` for a first-order element: `4(1−γ)/(π(1+γ))`.
pub fn theta_d_infinity(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(4.0 * (1.0 - gamma) / (PI * (1.0 + gamma)))
}

/// GFORE corner frequency whose describing function matches the gain of
/// `1/(1 + s/ω_r)` at both frequency extremes: `ω_r/√(1 + Θ_∞²)`.
pub fn gfore_corner_from_target(omega_r: f64, gamma: f64) -> Result<f64> {
    if !(omega_r.is_finite() && omega_r > 0.0) {
        return Err(invalid(format!("omega_r must be > 0, got {omega_r}")));
    }
    let th = theta_d_infinity(gamma)?;
    Ok(omega_r / (1.0 + th * th).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::hz_to_rad;
    use proptest::prelude::*;

    fn scalar_theta(wa: f64, g: f64, w: f64) -> f64 {
        // closed form of Θ_D for A_r = −ω_α
        let lam = w * w + wa * wa;
        let e = (-PI * wa / w).exp();
        let delta = 1.0 + e;
        let delta_r = 1.0 + g * e;
        -2.0 * w * w / PI * delta * (g * delta / (delta_r * lam) - 1.0 / lam)
    }

    #[test]
    fn gfore_linear_limit() {
        let wa = hz_to_rad(114.5);
        let r = ResetElement::gfore(wa, 1.0).unwrap();
        assert!(r.is_linear());
        for w in [1.0, 100.0, 1e4] {
            assert_eq!(r.theta_d(w).unwrap()[(0, 0)], 0.0);
            let h = r.hosidf(w, 1).unwrap().value;
            let bl = r.base_linear_tf().eval(w).unwrap();
            assert!((h - bl).norm() < 1e-12 * bl.norm());
            assert_eq!(r.hosidf(w, 3).unwrap().value.norm(), 0.0);
        }
    }

    #[test]
    fn gfore_validation() {
        assert!(ResetElement::gfore(1.0, -1.0).is_err());
        assert!(ResetElement::gfore(1.0, 1.2).is_err());
        assert!(ResetElement::gfore(0.0, 0.5).is_err());
        let r = ResetElement::gfore(10.0, 0.0).unwrap();
        assert_eq!(r.gammas(), &[0.0]);
        assert!(r.is_hurwitz());
    }

    #[test]
    fn corner_from_target() {
        assert_eq!(gfore_corner_from_target(5.0, 1.0).unwrap(), 5.0);
        let wa = gfore_corner_from_target(hz_to_rad(150.0), 0.2).unwrap();
        let hz = crate::lti::rad_to_hz(wa);
        assert!((hz - 114.357).abs() < 1e-3, "{hz}");
        let th0 = theta_d_infinity(0.0).unwrap();
        assert!((th0 - 4.0 / PI).abs() < 1e-15);
        let w0 = gfore_corner_from_target(1.0, 0.0).unwrap();
        assert!((w0 - 1.0 / (1.0 + 16.0 / (PI * PI)).sqrt()).abs() < 1e-15);
        assert!((w0 - 0.6177).abs() < 1e-4);
        assert!(gfore_corner_from_target(1.0, -1.0).is_err());
    }

    #[test]
    fn base_linear_tf_shapes() {
        let wa = 700.0;
        let r = ResetElement::gfore(wa, 0.2).unwrap();
        assert!(r
            .base_linear_tf()
            .is_equivalent(&RationalTf::new(vec![1.0], vec![1.0, 1.0 / wa], 0.0).unwrap(), 1e-14));
        let k = ResetElement::static_gain(3.0).unwrap();
        assert_eq!(k.base_linear_tf(), RationalTf::gain(3.0));
        // diag(−a, −b) with C = [a, b] is a/(s+a) + b/(s+b)
        let (a, b) = (3.0, 40.0);
        let two = ResetElement::new(
            DMatrix::from_row_slice(2, 2, &[-a, 0.0, 0.0, -b]),
            DVector::from_vec(vec![1.0, 1.0]),
            RowDVector::from_vec(vec![a, b]),
            0.0,
            vec![0.5, 0.5],
        )
        .unwrap();
        let expect = RationalTf::new(vec![2.0 * a * b, a + b], vec![a * b, a + b, 1.0], 0.0).unwrap();
        assert!(two.base_linear_tf().is_equivalent(&expect, 1e-14));
    }

    #[test]
    fn theta_matches_scalar_closed_form_and_limit() {
        let wa = hz_to_rad(114.5);
        let r = ResetElement::gfore(wa, 0.2).unwrap();
        let w = hz_to_rad(150.0);
        let th = r.theta_d(w).unwrap()[(0, 0)];
        assert!(th > 0.0);
        assert!((th - scalar_theta(wa, 0.2, w)).abs() < 1e-13 * th.abs());
        let far = r.theta_d(wa * 1e6).unwrap()[(0, 0)];
        assert!((far - theta_d_infinity(0.2).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn even_harmonics_vanish_and_order_zero_rejected() {
        let r = ResetElement::gfore(100.0, -0.3).unwrap();
        for n in [2, 4, 6, 8] {
            assert_eq!(r.hosidf(37.0, n).unwrap().value, Complex64::new(0.0, 0.0));
        }
        assert!(r.hosidf(37.0, 0).is_err());
        let series = r.hosidf_series(37.0, DEFAULT_MAX_HARMONIC).unwrap();
        assert_eq!(series.len(), 9);
        assert_eq!(series[2].value, r.hosidf(37.0, 3).unwrap().value);
    }

    #[test]
    fn gfore_h1_limits() {
        let wa = 100.0;
        let r = ResetElement::gfore(wa, 0.2).unwrap();
        assert!((r.hosidf(1e-3, 1).unwrap().value.norm() - 1.0).abs() < 1e-6);
        let top = r.hosidf(1e7, 1).unwrap().value.norm();
        let dec = r.hosidf(1e6, 1).unwrap().value.norm();
        let slope = 20.0 * (top / dec).log10();
        assert!((slope + 20.0).abs() < 0.5, "{slope} dB/decade");
    }

    #[test]
    fn second_order_element_evaluates() {
        // two-state element with complex poles; the general path must stay real
        let r = ResetElement::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -400.0, -12.0]),
            DVector::from_vec(vec![0.0, 1.0]),
            RowDVector::from_vec(vec![400.0, 0.0]),
            0.0,
            vec![0.3, 0.3],
        )
        .unwrap();
        assert!(r.is_hurwitz());
        let th = r.theta_d(15.0).unwrap();
        assert!(th.iter().all(|x| x.is_finite()));
        assert!(r.hosidf(15.0, 3).unwrap().value.norm() > 0.0);
        let lin = r.with_gamma(1.0).unwrap();
        assert!(lin.theta_d(15.0).unwrap().iter().all(|&x| x == 0.0));
    }

    proptest! {
        #[test]
        fn identity_reset_matrix_is_linear(lw in -1.0f64..5.0, wa in 1.0f64..1e4) {
            let r = ResetElement::gfore(wa, 1.0).unwrap();
            let w = 10f64.powf(lw);
            let h = r.hosidf(w, 1).unwrap().value;
            let bl = r.base_linear_tf().eval(w).unwrap();
            prop_assert!((h - bl).norm() <= 1e-12 * bl.norm());
        }
    }
}
