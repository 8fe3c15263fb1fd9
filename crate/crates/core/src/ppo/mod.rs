//! Proximal policy optimization: parallel rollout collection, generalized
//! advantage estimation and clipped-surrogate updates.

mod buffer;
mod trainer;
mod update;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use buffer::{collect_rollout, compute_gae, gae, EnvWorker, EpisodeSummary, RolloutBuffer};
pub use trainer::{derive_seed, IterationLog, Trainer};
pub use update::{clipped_surrogate, normalize_advantages, ppo_update, UpdateStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Steps collected per environment per iteration.
    pub rollout_steps: usize,
    pub epochs: usize,
    pub clip_range: f64,
    pub n_envs: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub value_coefficient: f64,
    pub entropy_coefficient: f64,
    pub max_gradient_norm: f64,
    pub total_timesteps: u64,
    pub initial_log_std: f64,
    pub adam_epsilon: f64,
    /// Iterations between periodic checkpoints.
    pub checkpoint_interval: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 2e-4,
            rollout_steps: 4096,
            epochs: 12,
            clip_range: 0.15,
            n_envs: 4,
            gamma: 0.99,
            gae_lambda: 0.95,
            value_coefficient: 0.5,
            entropy_coefficient: 0.0,
            max_gradient_norm: 0.5,
            total_timesteps: 6_000_000,
            initial_log_std: -0.5,
            adam_epsilon: 1e-5,
            checkpoint_interval: 25,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |field: &str, msg: &str| Err(Error::config(format!("ppo.{field}"), msg));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.batch_size == 0 {
            return err("batch_size", "must be ≥ 1");
        }
        if self.rollout_steps == 0 || !self.rollout_steps.is_multiple_of(self.batch_size) {
            return err("rollout_steps", "must be a positive multiple of batch_size");
        }
        if self.epochs == 0 {
            return err("epochs", "must be ≥ 1");
        }
        if self.n_envs == 0 {
            return err("n_envs", "must be ≥ 1");
        }
        if !positive(self.learning_rate) {
            return err("learning_rate", "must be > 0");
        }
        if !(self.clip_range > 0.0 && self.clip_range < 1.0) {
            return err("clip_range", "must lie in (0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return err("gamma", "must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return err("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.value_coefficient.is_finite() && self.value_coefficient >= 0.0) {
            return err("value_coefficient", "must be ≥ 0");
        }
        if !(self.entropy_coefficient.is_finite() && self.entropy_coefficient >= 0.0) {
            return err("entropy_coefficient", "must be ≥ 0");
        }
        if !positive(self.max_gradient_norm) {
            return err("max_gradient_norm", "must be > 0");
        }
        if self.total_timesteps == 0 {
            return err("total_timesteps", "must be ≥ 1");
        }
        if !(self.initial_log_std.is_finite()
            && (crate::nn::LOG_STD_MIN..=crate::nn::LOG_STD_MAX).contains(&self.initial_log_std))
        {
            return err("initial_log_std", "must lie in [-20, 2]");
        }
        if !positive(self.adam_epsilon) {
            return err("adam_epsilon", "must be > 0");
        }
        if self.checkpoint_interval == 0 {
            return err("checkpoint_interval", "must be ≥ 1");
        }
        Ok(())
    }

    pub fn steps_per_iteration(&self) -> u64 {
        (self.n_envs * self.rollout_steps) as u64
    }

    pub fn iterations(&self) -> u64 {
        self.total_timesteps.div_ceil(self.steps_per_iteration())
    }
}
