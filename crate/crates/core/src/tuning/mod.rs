//! Controller presets, loop assembly and the noise/ω_x experiments.

mod experiment;

pub use experiment::{
    baseline_noise_std, compare_controllers, noise_free_output_power, noise_std_for_snr, paper_comparison_specs,
    run_point, snr_of, sweep_omega_x, ComparisonEntry, ComparisonReport, PointRun, Scenario, SweepPoint, SweepResult,
    SweepSettings,
};

use serde::{Deserialize, Serialize};

use crate::analysis::LoopTopology;
use crate::error::{invalid, Result};
use crate::lti::{hz_to_rad, make_notch, make_split_lead, PidParams, RationalTf};
use crate::reset::{gfore_corner_from_target, ResetElement};

/// Controller scalars, frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    /// Proportional gain; `None` places the first-order open loop at 0 dB
    /// at `omega_c_hz`.
    #[serde(default)]
    pub kp: Option<f64>,
    pub omega_c_hz: f64,
    pub omega_i_hz: f64,
    pub omega_d_hz: f64,
    pub omega_t_hz: f64,
    pub omega_f_hz: f64,
    pub omega_r_hz: f64,
    /// GFORE corner; `None` derives it from `omega_r_hz` and `gamma`.
    #[serde(default)]
    pub omega_alpha_hz: Option<f64>,
    pub gamma: f64,
}

impl ControllerParams {
    /// Linear PID with a low-pass at `ω_f`.
    pub fn paper_linear() -> Self {
        ControllerParams {
            kp: None,
            omega_c_hz: 150.0,
            omega_i_hz: 15.0,
            omega_d_hz: 50.0,
            omega_t_hz: 450.0,
            omega_f_hz: 3000.0,
            omega_r_hz: 150.0,
            omega_alpha_hz: None,
            gamma: 1.0,
        }
    }

    /// PID with a CgLp element (GFORE with `γ = 0.2` and a lead).
    pub fn paper_cglp() -> Self {
        ControllerParams {
            kp: None,
            omega_c_hz: 150.0,
            omega_i_hz: 50.0,
            omega_d_hz: 50.0,
            omega_t_hz: 450.0,
            omega_f_hz: 3000.0,
            omega_r_hz: 150.0,
            omega_alpha_hz: Some(114.5),
            gamma: 0.2,
        }
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("omega_c_hz", self.omega_c_hz),
            ("omega_i_hz", self.omega_i_hz),
            ("omega_d_hz", self.omega_d_hz),
            ("omega_t_hz", self.omega_t_hz),
            ("omega_f_hz", self.omega_f_hz),
            ("omega_r_hz", self.omega_r_hz),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if let Some(kp) = self.kp {
            if !(kp.is_finite() && kp > 0.0) {
                return Err(invalid(format!("kp must be > 0, got {kp}")));
            }
        }
        if let Some(wa) = self.omega_alpha_hz {
            if !(wa.is_finite() && wa > 0.0) {
                return Err(invalid(format!("omega_alpha_hz must be > 0, got {wa}")));
            }
        }
        if self.omega_d_hz >= self.omega_t_hz {
            return Err(invalid("omega_d_hz must be below omega_t_hz"));
        }
        if self.omega_r_hz >= self.omega_f_hz {
            return Err(invalid("omega_r_hz must be below omega_f_hz"));
        }
        Ok(())
    }

    fn pid(&self, kp: f64) -> Result<RationalTf> {
        PidParams {
            kp,
            omega_i: hz_to_rad(self.omega_i_hz),
            omega_d: hz_to_rad(self.omega_d_hz),
            omega_t: hz_to_rad(self.omega_t_hz),
        }
        .tf()
    }

    /// GFORE corner in Hz, derived when not given.
    pub fn omega_alpha_hz(&self) -> Result<f64> {
        match self.omega_alpha_hz {
            Some(wa) => Ok(wa),
            None => Ok(gfore_corner_from_target(self.omega_r_hz, self.gamma)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotchParams {
    pub omega_n_hz: f64,
    pub q1: f64,
    pub q2: f64,
}

impl NotchParams {
    /// 50 Hz, `Q1 = 1`, `Q2 = 0.4`.
    pub fn paper() -> Self {
        NotchParams {
            omega_n_hz: 50.0,
            q1: 1.0,
            q2: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    Linear,
    Cglp { omega_x_hz: f64 },
    FilteredCglp { omega_x_hz: f64, notch: NotchParams },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub name: String,
    pub variant: Variant,
    pub params: ControllerParams,
}

impl ControllerSpec {
    pub fn paper_linear() -> Self {
        ControllerSpec {
            name: "linear".into(),
            variant: Variant::Linear,
            params: ControllerParams::paper_linear(),
        }
    }

    /// The baseline CgLp with the whole lead after the reset element.
    pub fn paper_cglp() -> Self {
        let params = ControllerParams::paper_cglp();
        ControllerSpec {
            name: "cglp".into(),
            variant: Variant::Cglp {
                omega_x_hz: params.omega_r_hz,
            },
            params,
        }
    }

    pub fn with_variant(&self, name: &str, variant: Variant) -> Self {
        ControllerSpec {
            name: name.into(),
            variant,
            params: self.params.clone(),
        }
    }

    /// Looks up "paper-CL" or "paper-CNL".
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper-CL" => Some(Self::paper_linear()),
            "paper-CNL" => Some(Self::paper_cglp()),
            _ => None,
        }
    }
}

/// Assembles `C1`, `R` and `C2` for `spec` around `plant` and resolves `k_p`.
pub fn build_loop(spec: &ControllerSpec, plant: &RationalTf) -> Result<LoopTopology> {
    let p = &spec.params;
    p.validate()?;
    let wr = hz_to_rad(p.omega_r_hz);
    let wf = hz_to_rad(p.omega_f_hz);
    let pid = p.pid(1.0)?;
    let mut top = match spec.variant {
        Variant::Linear => LoopTopology::new(RationalTf::unity(), ResetElement::gfore(wf, 1.0)?, pid, plant.clone()),
        Variant::Cglp { omega_x_hz } => {
            let (l1, l2) = make_split_lead(wr, hz_to_rad(omega_x_hz), wf)?;
            let r = ResetElement::gfore(hz_to_rad(p.omega_alpha_hz()?), p.gamma)?;
            LoopTopology::new(l1, r, l2.series(&pid), plant.clone())
        }
        Variant::FilteredCglp { omega_x_hz, notch } => {
            let (l1, l2) = make_split_lead(wr, hz_to_rad(omega_x_hz), wf)?;
            let (n, n_inv) = make_notch(hz_to_rad(notch.omega_n_hz), notch.q1, notch.q2)?;
            let r = ResetElement::gfore(hz_to_rad(p.omega_alpha_hz()?), p.gamma)?;
            LoopTopology::new(l1.series(&n), r, RationalTf::chain([&l2, &n_inv, &pid]), plant.clone())
        }
    };
    let kp = match p.kp {
        Some(kp) => kp,
        None => top.normalize_kp(hz_to_rad(p.omega_c_hz))?,
    };
    top.c2 = top.c2.scaled(kp);
    Ok(top)
}

/// The `k_p` that [`build_loop`] uses for `spec`.
pub fn resolve_kp(spec: &ControllerSpec, plant: &RationalTf) -> Result<f64> {
    if let Some(kp) = spec.params.kp {
        return Ok(kp);
    }
    let unit = ControllerSpec {
        params: ControllerParams {
            kp: Some(1.0),
            ..spec.params.clone()
        },
        ..spec.clone()
    };
    build_loop(&unit, plant)?.normalize_kp(hz_to_rad(spec.params.omega_c_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::default_crossover_bracket;
    use crate::lti::{paper_plant, FrequencyGrid};
    use crate::CurveKind;

    #[test]
    fn linear_preset_crosses_at_150() {
        let top = build_loop(&ControllerSpec::paper_linear(), &paper_plant()).unwrap();
        assert!(top.reset.is_linear());
        let c = top.crossover_and_margin(default_crossover_bracket()).unwrap();
        assert!((c.omega_c / hz_to_rad(150.0) - 1.0).abs() < 1e-6);
        let kp = resolve_kp(&ControllerSpec::paper_linear(), &paper_plant()).unwrap();
        assert!((kp / 29.74 - 1.0).abs() < 0.01, "{kp}");
    }

    #[test]
    fn baseline_cglp_has_unity_c1() {
        let top = build_loop(&ControllerSpec::paper_cglp(), &paper_plant()).unwrap();
        assert_eq!(top.c1, RationalTf::unity());
        assert_eq!(top.reset.gammas(), &[0.2]);
        assert!((top.reset.a()[(0, 0)] + hz_to_rad(114.5)).abs() < 1e-9);
    }

    #[test]
    fn variants_share_first_order_behavior() {
        let base = ControllerSpec::paper_cglp();
        let plant = paper_plant();
        let grid = FrequencyGrid::log_space_hz(1.0, 10_000.0, 200).unwrap();
        let specs = [
            base.clone(),
            base.with_variant("x360", Variant::Cglp { omega_x_hz: 360.0 }),
            base.with_variant("xf", Variant::Cglp { omega_x_hz: 3000.0 }),
            base.with_variant(
                "filtered",
                Variant::FilteredCglp {
                    omega_x_hz: 360.0,
                    notch: NotchParams::paper(),
                },
            ),
        ];
        let reference = build_loop(&specs[0], &plant)
            .unwrap()
            .curve(&grid, 1, CurveKind::Sensitivity)
            .unwrap();
        for s in &specs[1..] {
            let c = build_loop(s, &plant)
                .unwrap()
                .curve(&grid, 1, CurveKind::Sensitivity)
                .unwrap();
            for (a, b) in c.values.iter().zip(&reference.values) {
                assert!((a.norm() / b.norm() - 1.0).abs() < 1e-8, "{}", s.name);
            }
        }
    }

    #[test]
    fn fixed_kp_is_used_verbatim() {
        let mut spec = ControllerSpec::paper_cglp();
        spec.params.kp = Some(29.85);
        assert_eq!(resolve_kp(&spec, &paper_plant()).unwrap(), 29.85);
        let free = resolve_kp(&ControllerSpec::paper_cglp(), &paper_plant()).unwrap();
        let a = build_loop(&spec, &paper_plant())
            .unwrap()
            .open_loop_hosidf(100.0, 1)
            .unwrap();
        let mut spec_free = spec.clone();
        spec_free.params.kp = None;
        let b = build_loop(&spec_free, &paper_plant())
            .unwrap()
            .open_loop_hosidf(100.0, 1)
            .unwrap();
        assert!((a / b * free / 29.85 - 1.0).norm() < 1e-12);
    }

    #[test]
    fn inconsistent_overrides_rejected() {
        let plant = paper_plant();
        let mut s = ControllerSpec::paper_cglp();
        s.params.omega_r_hz = 4000.0;
        assert!(build_loop(&s, &plant).is_err());
        let s = ControllerSpec::paper_cglp().with_variant("bad", Variant::Cglp { omega_x_hz: 100.0 });
        assert!(build_loop(&s, &plant).is_err());
        let mut s = ControllerSpec::paper_cglp();
        s.params.gamma = -1.0;
        assert!(build_loop(&s, &plant).is_err());
        let mut s = ControllerSpec::paper_linear();
        s.params.omega_d_hz = 500.0;
        assert!(build_loop(&s, &plant).is_err());
    }

    #[test]
    fn presets_by_name() {
        assert_eq!(ControllerSpec::preset("paper-CL"), Some(ControllerSpec::paper_linear()));
        assert_eq!(ControllerSpec::preset("paper-CNL"), Some(ControllerSpec::paper_cglp()));
        assert_eq!(ControllerSpec::preset("paper"), None);
    }
}
