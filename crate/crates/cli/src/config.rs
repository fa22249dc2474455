//! Experiment configuration: TOML schema, preset expansion and snapshots.

use std::path::{Path, PathBuf};

use cglp::lti::paper_plant;
use cglp::tuning::{paper_comparison_specs, SweepSettings};
use cglp::{ControllerParams, ControllerSpec, FrequencyGrid, RationalTf, Scenario, SignalDescriptor, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Top-level configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `paper`, `paper-CL` or `paper-CNL`; explicit sections override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantConfig>,
    #[serde(default, rename = "controller", skip_serializing_if = "Vec::is_empty")]
    pub controllers: Vec<ControllerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Either `preset = "paper"` or explicit ascending coefficients.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<f64>,
}

/// A controller: an optional preset with field overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ControllerParams>,
}

/// Scenario fields; missing ones take the default scenario's values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<SignalDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<SignalDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
    /// Sets the noise level from the baseline CgLp loop instead of `noise_std`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_harmonics")]
    pub harmonics: Vec<u32>,
    #[serde(default = "default_f_min")]
    pub f_min_hz: f64,
    #[serde(default = "default_f_max")]
    pub f_max_hz: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
}

fn default_harmonics() -> Vec<u32> {
    vec![1, 3, 5]
}

fn default_f_min() -> f64 {
    1.0
}

fn default_f_max() -> f64 {
    10_000.0
}

fn default_points() -> usize {
    1000
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            harmonics: default_harmonics(),
            f_min_hz: default_f_min(),
            f_max_hz: default_f_max(),
            grid_points: default_points(),
        }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    pub harmonics: Option<Vec<u32>>,
    pub out: Option<PathBuf>,
}

/// A fully expanded experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub plant: RationalTf,
    pub controllers: Vec<ControllerSpec>,
    pub scenario: Scenario,
    pub snr_db: Option<f64>,
    pub analysis: AnalysisConfig,
    pub sweep: SweepSettings,
    pub output_dir: PathBuf,
}

pub const PRESETS: [&str; 3] = ["paper", "paper-CL", "paper-CNL"];
const DEFAULT_OUT: &str = "cglp-out";
const PAPER_SNR_DB: f64 = 47.1;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn preset(name: &str) -> Self {
        ExperimentConfig {
            preset: Some(name.to_string()),
            ..Default::default()
        }
    }

    /// Expands presets, applies overrides and validates.
    pub fn resolve(&self, ov: &Overrides) -> Result<Experiment, CliError> {
        let bad = |m: String| CliError::Validation(m);
        let preset = self.preset.as_deref();
        if let Some(p) = preset {
            if !PRESETS.contains(&p) {
                return Err(bad(format!("unknown preset {p:?}; expected one of {PRESETS:?}")));
            }
        }

        let plant = match &self.plant {
            None if preset.is_some() => paper_plant(),
            None => return Err(bad("missing [plant] section".into())),
            Some(p) => resolve_plant(p)?,
        };

        let controllers = if self.controllers.is_empty() {
            match preset {
                Some("paper") => paper_comparison_specs(),
                Some("paper-CL") => vec![ControllerSpec::paper_linear()],
                Some("paper-CNL") => vec![ControllerSpec::paper_cglp()],
                _ => return Err(bad("no [[controller]] given".into())),
            }
        } else {
            self.controllers
                .iter()
                .enumerate()
                .map(|(i, c)| resolve_controller(i, c))
                .collect::<Result<_, _>>()?
        };
        let mut names: Vec<&str> = controllers.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(bad(format!("duplicate controller name {:?}", w[0])));
        }
        for c in &controllers {
            if c.name.is_empty()
                || !c
                    .name
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || "-_.@".contains(ch))
            {
                return Err(bad(format!(
                    "controller name {:?} must be non-empty [A-Za-z0-9-_.@]",
                    c.name
                )));
            }
        }

        let sc = self.scenario.clone().unwrap_or_default();
        let base = Scenario::paper();
        if sc.snr_db.is_some() && sc.noise_std.is_some() {
            return Err(bad("[scenario] sets both snr_db and noise_std".into()));
        }
        let snr_db = match preset {
            Some("paper") if sc.noise_std.is_none() => sc.snr_db.or(Some(PAPER_SNR_DB)),
            _ => sc.snr_db,
        };
        let scenario = Scenario {
            sample_rate: sc.sample_rate.unwrap_or(base.sample_rate),
            duration: sc.duration.unwrap_or(base.duration),
            analysis_fraction: sc.analysis_fraction.unwrap_or(base.analysis_fraction),
            reference: sc.reference.unwrap_or(base.reference),
            disturbance: sc.disturbance.unwrap_or(base.disturbance),
            noise_std: sc.noise_std.unwrap_or(0.0),
            seed: ov.seed.or(sc.seed).unwrap_or(base.seed),
        };
        scenario.validate().map_err(|e| bad(format!("[scenario]: {e}")))?;
        if !(scenario.sample_rate.is_finite() && scenario.sample_rate > 0.0) {
            return Err(bad(format!(
                "[scenario] sample_rate must be > 0, got {}",
                scenario.sample_rate
            )));
        }
        if !(scenario.duration.is_finite() && scenario.duration > 0.0) {
            return Err(bad(format!(
                "[scenario] duration must be > 0, got {}",
                scenario.duration
            )));
        }
        scenario
            .reference
            .validate()
            .and(scenario.disturbance.validate())
            .map_err(|e| bad(format!("[scenario]: {e}")))?;

        let mut analysis = self.analysis.clone().unwrap_or_default();
        if let Some(h) = &ov.harmonics {
            analysis.harmonics = h.clone();
        }
        let mut sweep = self.sweep.clone().unwrap_or_default();
        if let Some(n) = ov.grid_points {
            analysis.grid_points = n;
            sweep.grid_points = n;
        }
        if let Some(s) = ov.seed {
            sweep.base_seed = s;
        }
        if analysis.harmonics.is_empty() || analysis.harmonics.contains(&0) {
            return Err(bad(
                "[analysis] harmonics must be a non-empty list of orders >= 1".into()
            ));
        }
        FrequencyGrid::log_space_hz(analysis.f_min_hz, analysis.f_max_hz, analysis.grid_points)
            .map_err(|e| bad(format!("[analysis]: {e}")))?;

        Ok(Experiment {
            plant,
            controllers,
            scenario,
            snr_db,
            analysis,
            sweep,
            output_dir: ov
                .out
                .clone()
                .or_else(|| self.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        })
    }
}

fn resolve_plant(p: &PlantConfig) -> Result<RationalTf, CliError> {
    let bad = |m: String| CliError::Validation(format!("[plant]: {m}"));
    match (&p.preset, &p.numerator, &p.denominator) {
        (Some(name), None, None) if p.delay.is_none() => {
            if name == "paper" {
                Ok(paper_plant())
            } else {
                Err(bad(format!("unknown plant preset {name:?}; expected \"paper\"")))
            }
        }
        (None, Some(num), Some(den)) => {
            RationalTf::new(num.clone(), den.clone(), p.delay.unwrap_or(0.0)).map_err(|e| bad(e.to_string()))
        }
        _ => Err(bad("give either preset or numerator + denominator (+ delay)".into())),
    }
}

fn resolve_controller(i: usize, c: &ControllerEntry) -> Result<ControllerSpec, CliError> {
    let bad = |m: String| CliError::Validation(format!("[[controller]] #{}: {m}", i + 1));
    let base = match c.preset.as_deref() {
        Some(p) => ControllerSpec::preset(p).ok_or_else(|| bad(format!("unknown preset {p:?}")))?,
        None => {
            let (Some(variant), Some(params)) = (c.variant, c.params.clone()) else {
                return Err(bad("without a preset both variant and params are required".into()));
            };
            ControllerSpec {
                name: format!("controller{}", i + 1),
                variant,
                params,
            }
        }
    };
    Ok(ControllerSpec {
        name: c.name.clone().unwrap_or(base.name),
        variant: c.variant.unwrap_or(base.variant),
        params: c.params.clone().unwrap_or(base.params),
    })
}

impl Experiment {
    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid::log_space_hz(
            self.analysis.f_min_hz,
            self.analysis.f_max_hz,
            self.analysis.grid_points,
        )
        .expect("validated grid")
    }

    /// Fully expanded config that resolves back to this experiment.
    pub fn snapshot(&self) -> ExperimentConfig {
        let sc = &self.scenario;
        ExperimentConfig {
            preset: None,
            plant: Some(PlantConfig {
                preset: None,
                numerator: Some(self.plant.num().to_vec()),
                denominator: Some(self.plant.den().to_vec()),
                delay: Some(self.plant.delay()),
            }),
            controllers: self
                .controllers
                .iter()
                .map(|c| ControllerEntry {
                    preset: None,
                    name: Some(c.name.clone()),
                    variant: Some(c.variant),
                    params: Some(c.params.clone()),
                })
                .collect(),
            scenario: Some(ScenarioConfig {
                sample_rate: Some(sc.sample_rate),
                duration: Some(sc.duration),
                analysis_fraction: Some(sc.analysis_fraction),
                reference: Some(sc.reference.clone()),
                disturbance: Some(sc.disturbance.clone()),
                noise_std: if self.snr_db.is_some() {
                    None
                } else {
                    Some(sc.noise_std)
                },
                snr_db: self.snr_db,
                seed: Some(sc.seed),
            }),
            analysis: Some(self.analysis.clone()),
            sweep: Some(self.sweep.clone()),
            output_dir: None,
        }
    }

    pub fn snapshot_toml(&self) -> String {
        toml::to_string(&self.snapshot()).expect("config serializes")
    }

    /// SHA-256 of the snapshot text, hex encoded.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.snapshot_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_preset_expands_to_table_values() {
        let e = ExperimentConfig::preset("paper")
            .resolve(&Overrides::default())
            .unwrap();
        assert_eq!(e.plant, paper_plant());
        assert_eq!(e.controllers.len(), 5);
        assert_eq!(e.controllers[0].params.omega_i_hz, 15.0);
        assert_eq!(e.controllers[1].params.omega_i_hz, 50.0);
        assert_eq!(e.controllers[1].params.omega_alpha_hz, Some(114.5));
        assert_eq!(e.controllers[1].params.gamma, 0.2);
        assert_eq!(e.snr_db, Some(47.1));
        assert_eq!(
            e.scenario,
            Scenario {
                seed: 1,
                ..Scenario::paper()
            }
        );
    }

    #[test]
    fn single_controller_presets() {
        let cl = ExperimentConfig::preset("paper-CL")
            .resolve(&Overrides::default())
            .unwrap();
        assert_eq!(cl.controllers, vec![ControllerSpec::paper_linear()]);
        assert_eq!(cl.snr_db, None);
        let cnl = ExperimentConfig::preset("paper-CNL")
            .resolve(&Overrides::default())
            .unwrap();
        assert_eq!(cnl.controllers, vec![ControllerSpec::paper_cglp()]);
    }

    #[test]
    fn snapshot_round_trips() {
        let ov = Overrides {
            seed: Some(9),
            grid_points: Some(40),
            harmonics: Some(vec![1, 3]),
            out: Some("x".into()),
        };
        let e = ExperimentConfig::preset("paper").resolve(&ov).unwrap();
        let text = e.snapshot_toml();
        let back = ExperimentConfig::parse(&text).unwrap().resolve(&Overrides {
            out: Some("x".into()),
            ..Default::default()
        });
        assert_eq!(back.unwrap(), e);
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let err = ExperimentConfig::parse("preset = \"paper\"\n[scenario]\nduraton = 2.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duraton"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn explicit_config() {
        let text = r#"
            [plant]
            numerator = [1.0]
            denominator = [1.0, 0.01, 0.0001]
            delay = 0.0001

            [[controller]]
            preset = "paper-CNL"
            name = "split"
            variant = { kind = "cglp", omega_x_hz = 360.0 }

            [scenario]
            duration = 0.5
            noise_std = 1e-5
            disturbance = { kind = "sine", amplitude = 0.1, frequency_hz = 20.0 }
        "#;
        let e = ExperimentConfig::parse(text)
            .unwrap()
            .resolve(&Overrides::default())
            .unwrap();
        assert_eq!(e.controllers[0].name, "split");
        assert_eq!(e.controllers[0].variant, Variant::Cglp { omega_x_hz: 360.0 });
        assert_eq!(e.scenario.noise_std, 1e-5);
        assert_eq!(e.scenario.disturbance, SignalDescriptor::sine(0.1, 20.0));
    }

    #[test]
    fn validation_errors() {
        let cases = [
            "preset = \"nope\"",
            "[[controller]]\npreset = \"paper-CL\"",
            "preset = \"paper\"\n[plant]\npreset = \"paper\"\nnumerator = [1.0]",
            "preset = \"paper\"\n[scenario]\nsnr_db = 40.0\nnoise_std = 1.0",
            "preset = \"paper\"\n[analysis]\nharmonics = []",
            "preset = \"paper\"\n[scenario]\nduration = -1.0",
            "preset = \"paper\"\n[[controller]]\npreset = \"paper-CL\"\n[[controller]]\npreset = \"paper-CL\"",
        ];
        for c in cases {
            let r = ExperimentConfig::parse(c).and_then(|x| x.resolve(&Overrides::default()));
            assert!(matches!(r, Err(CliError::Validation(_))), "{c}");
        }
    }
}
