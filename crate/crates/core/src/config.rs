//! JSON experiment files.
//!
//! ```json
//! {
//!   "name": "experiment1",
//!   "env": { "distributions": [...7 laws...], "params": {"unit_profit": 2, "unit_cost": 5},
//!            "action_low": 0, "action_high": 100, "episode_length": 140 },
//!   "agent": { "gamma": 0.99, "tau": 0.005, "batch_size": 256 },
//!   "train": { "total_episodes": 300, "priming_end_timestep": 10000, "eval_start_timestep": 25000 },
//!   "seeds": [1, 2, 3],
//!   "output_dir": "runs/experiment1"
//! }
//! ```
//!
//! Omitted `agent` and `train` keys take the reference defaults; unknown keys
//! are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::Td3Hyper;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::replay::ReplayBuffer;
use crate::trainer::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfigFile {
    #[serde(default)]
    pub name: Option<String>,
    pub env: EnvConfig,
    #[serde(default)]
    pub agent: AgentSection,
    #[serde(default)]
    pub train: TrainSection,
    /// One run per seed.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSection {
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: usize,
    /// Exploration noise standard deviation as a fraction of the action range.
    pub noise_std_ratio: f64,
    /// Smoothing noise std in action units; defaults to the exploration std.
    pub target_noise_std: Option<f64>,
    /// Smoothing noise clip in action units; defaults to twice the smoothing std.
    pub target_noise_clip: Option<f64>,
    pub batch_size: usize,
    pub lr: f64,
    pub buffer_capacity: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Default for AgentSection {
    fn default() -> Self {
        let h = Td3Hyper::defaults_for(0.0, 1.0);
        Self {
            gamma: h.gamma,
            tau: h.tau,
            policy_delay: h.policy_delay,
            noise_std_ratio: Td3Hyper::NOISE_STD_RATIO,
            target_noise_std: None,
            target_noise_clip: None,
            batch_size: h.batch_size,
            lr: h.lr,
            buffer_capacity: ReplayBuffer::DEFAULT_CAPACITY,
            actor_hidden: h.actor_hidden,
            critic_hidden: h.critic_hidden,
        }
    }
}

impl AgentSection {
    pub fn resolve(&self, action_low: f64, action_high: f64) -> Td3Hyper {
        let exploration = self.noise_std_ratio * (action_high - action_low);
        let target_std = self.target_noise_std.unwrap_or(exploration);
        Td3Hyper {
            gamma: self.gamma,
            tau: self.tau,
            policy_delay: self.policy_delay,
            exploration_noise_std: exploration,
            target_noise_std: target_std,
            target_noise_clip: self.target_noise_clip.unwrap_or(2.0 * target_std),
            batch_size: self.batch_size,
            lr: self.lr,
            action_low,
            action_high,
            actor_hidden: self.actor_hidden.clone(),
            critic_hidden: self.critic_hidden.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub total_episodes: usize,
    pub priming_end_timestep: usize,
    pub eval_start_timestep: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            total_episodes: 300,
            priming_end_timestep: 10_000,
            eval_start_timestep: 25_000,
        }
    }
}

impl ExperimentConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parses and validates a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        self.train_config(self.seeds[0])?.validate()
    }

    /// Resolved run configuration for one seed.
    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        self.env.validate()?;
        Ok(TrainConfig {
            total_episodes: self.train.total_episodes,
            priming_end: self.train.priming_end_timestep,
            eval_start: self.train.eval_start_timestep,
            seed,
            buffer_capacity: self.agent.buffer_capacity,
            hyper: self
                .agent
                .resolve(self.env.action_low, self.env.action_high),
            env: self.env.clone(),
        })
    }

    pub fn train_configs(&self) -> Result<Vec<TrainConfig>> {
        self.seeds.iter().map(|&s| self.train_config(s)).collect()
    }
}
