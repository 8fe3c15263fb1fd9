//! Experiment configuration (TOML) and the shipped presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::QuadrotorParams;
use crate::env::{EnvConfig, InitialStateSpec, ObservationSpec, RewardSpec, Target, TerminationSpec};
use crate::ppo::PpoConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Acrobatic,
    Baseline,
    Inspection,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Acrobatic, Preset::Baseline, Preset::Inspection];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Acrobatic => "acrobatic",
            Preset::Baseline => "baseline",
            Preset::Inspection => "inspection",
        }
    }

    /// Source text of the committed preset file.
    pub fn source(self) -> &'static str {
        match self {
            Preset::Acrobatic => include_str!("../presets/acrobatic.toml"),
            Preset::Baseline => include_str!("../presets/baseline.toml"),
            Preset::Inspection => include_str!("../presets/inspection.toml"),
        }
    }

    pub fn config(self) -> ExperimentConfig {
        ExperimentConfig::parse(self.source()).expect("shipped preset files are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "preset",
                    format!("unknown preset `{s}`; valid presets are acrobatic, baseline, inspection"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub control_frequency: f64,
    pub physics_substeps: u32,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            control_frequency: 100.0,
            physics_substeps: 5,
        }
    }
}

/// Top-level experiment description. Either `preset` or both inline
/// `reward` and `termination` tables must be present; inline tables take
/// precedence over the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<TerminationSpec>,
    #[serde(default)]
    pub quadrotor: QuadrotorParams,
    #[serde(default)]
    pub observation: ObservationSpec,
    #[serde(default)]
    pub initial_state: InitialStateSpec,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub ppo: PpoConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::config("<document>", e.to_string()))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    /// Label stored in checkpoints and reports.
    pub fn name(&self) -> String {
        self.preset.clone().unwrap_or_else(|| "custom".into())
    }

    pub fn preset_kind(&self) -> Result<Option<Preset>> {
        self.preset.as_deref().map(Preset::from_str).transpose()
    }

    pub fn reward_spec(&self) -> Result<RewardSpec> {
        match (&self.reward, self.preset_kind()?) {
            (Some(r), _) => Ok(r.clone()),
            (None, Some(p)) => Ok(p
                .config()
                .reward
                .expect("preset files define the reward inline")),
            (None, None) => Err(Error::config("reward", "no reward table and no preset")),
        }
    }

    pub fn termination_spec(&self) -> Result<TerminationSpec> {
        match (&self.termination, self.preset_kind()?) {
            (Some(t), _) => Ok(t.clone()),
            (None, Some(p)) => Ok(p
                .config()
                .termination
                .expect("preset files define termination inline")),
            (None, None) => Err(Error::config("termination", "no termination table and no preset")),
        }
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        let cfg = EnvConfig {
            params: self.quadrotor.clone(),
            reward: self.reward_spec()?,
            termination: self.termination_spec()?,
            observation: self.observation.clone(),
            initial_state: self.initial_state.clone(),
            target: Target::default(),
            control_frequency: self.simulation.control_frequency,
            physics_substeps: self.simulation.physics_substeps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        // Resolves the preset name and checks every nested table.
        self.env_config()?;
        self.ppo.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn presets_parse_and_resolve() {
        for p in Preset::ALL {
            let cfg = p.config();
            assert_eq!(cfg.preset.as_deref(), Some(p.name()));
            cfg.validate().unwrap();
            assert_eq!(cfg.env_config().unwrap().control_frequency, 100.0);
        }
        let insp = Preset::Inspection.config().termination_spec().unwrap();
        assert_eq!(insp.roll_max, Some(15f64.to_radians()));
        assert!(insp.geodesic_max.is_none());
    }

    #[test]
    fn preset_by_name_only() {
        let cfg = ExperimentConfig::parse("preset = \"acrobatic\"\n").unwrap();
        assert_eq!(
            cfg.reward_spec().unwrap(),
            Preset::Acrobatic.config().reward.unwrap()
        );
    }

    #[test]
    fn unknown_preset_lists_valid_names() {
        let err = ExperimentConfig::parse("preset = \"racing\"\n").unwrap_err().to_string();
        assert!(err.contains("acrobatic, baseline, inspection"), "{err}");
    }

    #[test]
    fn parse_error_names_field() {
        let err = ExperimentConfig::parse("preset = \"baseline\"\n[ppo]\nbatch_size = \"big\"\n")
            .unwrap_err();
        assert!(err.to_string().contains("batch_size"), "{err}");
        let err = ExperimentConfig::parse("preset = \"baseline\"\n[quadrotor]\nmass = -1.0\n")
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "quadrotor.mass"), "{err}");
    }

    #[test]
    fn round_trip_presets() {
        for p in Preset::ALL {
            let cfg = p.config();
            let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(cfg, again);
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            mass in 0.01f64..2.0,
            survival in -1.0f64..1.0,
            alpha in 0.0f64..=1.0,
            delta in 1e-3f64..500.0,
            lr in 1e-6f64..1e-2,
            seed in 0u64..(i64::MAX as u64),
        ) {
            let mut cfg = Preset::Baseline.config();
            cfg.quadrotor.mass = mass;
            let r = cfg.reward.as_mut().unwrap();
            r.survival = survival;
            r.position_xy.alpha = alpha;
            r.position_xy.beta = 1.0 - alpha;
            r.position_xy.delta_beta = Some(delta);
            cfg.ppo.learning_rate = lr;
            cfg.seeds = vec![seed];
            if cfg.validate().is_ok() {
                let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
                prop_assert_eq!(cfg, again);
            }
        }
    }
}
