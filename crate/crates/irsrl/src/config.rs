//! Flat JSON experiment configuration.
//!
//! A config file is a single JSON object. `preset` picks the defaults
//! (`paper` unless given); every other key overrides one field. Unknown
//! keys are rejected. Any key can also be overridden from the environment
//! as `IRSRL_<KEY>` (upper case), whose value is parsed as JSON and taken
//! as a plain string if that fails.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use irsrl_core::agent::{AgentConfig, CriticInput};
use irsrl_core::channel::{ChannelParams, Geometry};
use irsrl_core::env::{EnvConfig, PositionUnits, RewardUnits, StateVariant};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Paper,
    Desk,
}

/// Learner variant: state layout plus critic input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "base")]
    Base,
    #[serde(rename = "snr-state")]
    SnrState,
    #[serde(rename = "ff")]
    Ff,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Base, Variant::SnrState, Variant::Ff];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::SnrState => "snr-state",
            Variant::Ff => "ff",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant {s:?} (expected base, snr-state or ff)"))
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub variant: Variant,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub out_dir: String,

    pub irs_elements: usize,
    pub antennas: usize,
    pub window: usize,
    pub episode_len: usize,
    pub reward_units: RewardUnits,
    pub position_units: PositionUnits,

    pub pathloss_exponent: f64,
    pub multipath_std_db: f64,
    pub shadow_power_db2: f64,
    pub corr_distance: f64,
    pub corr_time: f64,
    pub phase_drift: f64,
    pub noise_var: f64,
    pub tx_power_dbm: f64,

    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub explore_sigma: f64,
    pub explore_decay: f64,
    pub warmup_steps: usize,
    pub updates_per_step: usize,
    pub fourier_var: f64,
    pub fourier_dim: usize,
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    pub shared_min_target: bool,
    pub reward_scale: f64,
    pub actor_preact_penalty: f64,
}

/// Reward multiplier used by both presets; see the README.
pub const DEFAULT_REWARD_SCALE: f64 = 0.01;

/// Actor pre-tanh penalty used by both presets; see the README.
pub const DEFAULT_ACTOR_PREACT_PENALTY: f64 = 0.01;

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let ch = ChannelParams::default();
        let ag = AgentConfig::default();
        let env = EnvConfig::default();
        let base = Self {
            preset,
            variant: Variant::Ff,
            seeds: (0..10).collect(),
            episodes: 50,
            out_dir: "runs".into(),
            irs_elements: env.irs_elements,
            antennas: env.antennas,
            window: env.window,
            episode_len: env.episode_len,
            reward_units: env.reward_units,
            position_units: env.position_units,
            pathloss_exponent: ch.pathloss_exponent,
            multipath_std_db: ch.multipath_std_db,
            shadow_power_db2: ch.shadow_power_db2,
            corr_distance: ch.corr_distance,
            corr_time: ch.corr_time,
            phase_drift: ch.phase_drift,
            noise_var: ch.noise_var,
            tx_power_dbm: ch.tx_power_dbm,
            gamma: ag.gamma,
            tau: ag.tau,
            batch_size: ag.batch_size,
            lr: ag.lr,
            explore_sigma: ag.explore_sigma,
            explore_decay: ag.explore_decay,
            warmup_steps: ag.warmup_steps,
            updates_per_step: ag.updates_per_step,
            fourier_var: ag.fourier_var,
            fourier_dim: ag.fourier_dim,
            hidden: ag.hidden,
            buffer_capacity: ag.buffer_capacity,
            shared_min_target: ag.shared_min_target,
            reward_scale: DEFAULT_REWARD_SCALE,
            actor_preact_penalty: DEFAULT_ACTOR_PREACT_PENALTY,
        };
        match preset {
            Preset::Paper => base,
            Preset::Desk => Self {
                irs_elements: 8,
                antennas: 3,
                window: 5,
                hidden: vec![128, 128, 128],
                fourier_dim: 64,
                episodes: 30,
                episode_len: 200,
                seeds: vec![0, 1, 2],
                ..base
            },
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            irs_elements: self.irs_elements,
            antennas: self.antennas,
            window: self.window,
            episode_len: self.episode_len,
            variant: match self.variant {
                Variant::SnrState => StateVariant::SnrState,
                Variant::Base | Variant::Ff => StateVariant::Base,
            },
            reward_units: self.reward_units,
            position_units: self.position_units,
            channel: ChannelParams {
                pathloss_exponent: self.pathloss_exponent,
                multipath_std_db: self.multipath_std_db,
                shadow_power_db2: self.shadow_power_db2,
                corr_distance: self.corr_distance,
                corr_time: self.corr_time,
                phase_drift: self.phase_drift,
                noise_var: self.noise_var,
                tx_power_dbm: self.tx_power_dbm,
            },
            geometry: Geometry::default(),
        }
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            gamma: self.gamma,
            tau: self.tau,
            batch_size: self.batch_size,
            lr: self.lr,
            explore_sigma: self.explore_sigma,
            explore_decay: self.explore_decay,
            warmup_steps: self.warmup_steps,
            updates_per_step: self.updates_per_step,
            critic_input: match self.variant {
                Variant::Ff => CriticInput::Fourier,
                Variant::Base | Variant::SnrState => CriticInput::Raw,
            },
            fourier_var: self.fourier_var,
            fourier_dim: self.fourier_dim,
            hidden: self.hidden.clone(),
            buffer_capacity: self.buffer_capacity,
            shared_min_target: self.shared_min_target,
            reward_scale: self.reward_scale,
            actor_preact_penalty: self.actor_preact_penalty,
        }
    }

    /// Checks every constraint; errors name the offending key.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::invalid("seeds", "must list at least one seed"));
        }
        if self.episodes == 0 {
            return Err(HarnessError::invalid("episodes", "must be >= 1"));
        }
        self.env_config().validate().map_err(HarnessError::from_core)?;
        self.agent_config().validate().map_err(HarnessError::from_core)?;
        Ok(())
    }

    /// Applies `overrides` (a JSON object) on top of this config.
    fn overlay(&self, overrides: &Map<String, Value>) -> Result<Self, HarnessError> {
        let Value::Object(mut merged) = serde_json::to_value(self).expect("config serializes") else {
            unreachable!("config serializes to an object")
        };
        for (k, v) in overrides {
            if !merged.contains_key(k) {
                return Err(HarnessError::UnknownKey(k.clone()));
            }
            // Type-check each key on its own so the error can name it.
            let mut probe = merged.clone();
            probe.insert(k.clone(), v.clone());
            serde_json::from_value::<Self>(Value::Object(probe))
                .map_err(|e| HarnessError::invalid(k, &e.to_string()))?;
            merged.insert(k.clone(), v.clone());
        }
        serde_json::from_value(Value::Object(merged)).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    /// Resolves a JSON object: preset defaults, then file keys, then
    /// environment overrides from `lookup`.
    pub fn resolve(
        object: &Map<String, Value>,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, HarnessError> {
        let keys: Vec<String> = {
            let Value::Object(m) = serde_json::to_value(Self::preset(Preset::Paper)).expect("config serializes")
            else {
                unreachable!()
            };
            m.keys().cloned().collect()
        };
        let mut merged = object.clone();
        for key in &keys {
            if let Some(raw) = lookup(&format!("IRSRL_{}", key.to_uppercase())) {
                let v = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
                merged.insert(key.clone(), v);
            }
        }
        let preset = match merged.get("preset") {
            None => Preset::Paper,
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| HarnessError::invalid("preset", "expected \"paper\" or \"desk\""))?,
        };
        let cfg = Self::preset(preset).overlay(&merged)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<Self, HarnessError> {
        let value: Value = serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(HarnessError::Parse("config must be a JSON object".into()));
        };
        Self::resolve(&map, lookup)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads and resolves a config file using the process environment.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    ExperimentConfig::from_json_str(&text, |k| std::env::var(k).ok())
}
