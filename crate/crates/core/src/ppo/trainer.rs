use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{collect_rollout, compute_gae, EnvWorker};
use super::update::ppo_update;
use crate::config::ExperimentConfig;
use crate::nn::{Adam, Checkpoint, PolicyParameters};
use crate::{Error, Result};

const INIT_STREAM: u64 = u64::MAX;
const UPDATE_STREAM: u64 = u64::MAX - 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for sub-stream `stream` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// One row of the learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: u64,
    pub timesteps: u64,
    /// Episodes that finished during this iteration's rollout.
    pub episodes: usize,
    /// Mean undiscounted return of those episodes; empty when none finished.
    pub episode_mean_reward: Option<f64>,
    pub episode_mean_length: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub log_std_mean: f64,
}

/// Alternates rollout collection, advantage estimation and PPO updates.
pub struct Trainer {
    config: ExperimentConfig,
    seed: u64,
    policy: PolicyParameters,
    optimizer: Adam,
    workers: Vec<EnvWorker>,
    update_rng: ChaCha8Rng,
    iteration: u64,
    timesteps: u64,
}

impl Trainer {
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let ppo = &config.ppo;
        let policy = PolicyParameters::standard(derive_seed(seed, INIT_STREAM), ppo.initial_log_std)?;
        let optimizer = Adam::new(policy.num_parameters(), ppo.learning_rate, ppo.adam_epsilon);
        Self::assemble(config, seed, policy, optimizer, 0, 0)
    }

    /// Continues from a checkpoint. Environments restart from fresh episodes
    /// with streams derived from `seed` and the checkpoint's iteration.
    pub fn resume(config: &ExperimentConfig, checkpoint: Checkpoint, seed: u64) -> Result<Self> {
        config.validate()?;
        let fresh = PolicyParameters::standard(0, config.ppo.initial_log_std)?;
        if !fresh.same_architecture(&checkpoint.policy) {
            return Err(Error::Checkpoint("checkpoint network shape does not match the trainer".into()));
        }
        let mut optimizer = Adam::new(
            checkpoint.policy.num_parameters(),
            config.ppo.learning_rate,
            config.ppo.adam_epsilon,
        );
        if let Some(state) = checkpoint.optimizer {
            optimizer.state = state;
        }
        let run_seed = derive_seed(seed, checkpoint.iterations);
        Self::assemble(
            config,
            run_seed,
            checkpoint.policy,
            optimizer,
            checkpoint.iterations,
            checkpoint.timesteps,
        )
    }

    fn assemble(
        config: &ExperimentConfig,
        seed: u64,
        policy: PolicyParameters,
        optimizer: Adam,
        iteration: u64,
        timesteps: u64,
    ) -> Result<Self> {
        let env_config = Arc::new(config.env_config()?);
        let workers = (0..config.ppo.n_envs as u64)
            .map(|e| EnvWorker::new(env_config.clone(), derive_seed(seed, 2 * e), derive_seed(seed, 2 * e + 1)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            seed,
            policy,
            optimizer,
            workers,
            update_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, UPDATE_STREAM)),
            iteration,
            timesteps,
        })
    }

    pub fn policy(&self) -> &PolicyParameters {
        &self.policy
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn timesteps(&self) -> u64 {
        self.timesteps
    }

    pub fn total_iterations(&self) -> u64 {
        self.config.ppo.iterations()
    }

    pub fn is_finished(&self) -> bool {
        self.timesteps >= self.config.ppo.total_timesteps
    }

    /// Runs one iteration. On error the policy and optimizer are left as
    /// they were before the call.
    pub fn step(&mut self) -> Result<IterationLog> {
        let ppo = self.config.ppo.clone();
        let mut buffer = collect_rollout(&self.policy, &mut self.workers, ppo.rollout_steps)?;
        compute_gae(&mut buffer, ppo.gamma, ppo.gae_lambda);
        if buffer.advantages.iter().any(|a| !a.is_finite()) {
            return Err(Error::NumericalDivergence {
                reason: "non-finite advantage estimate".into(),
                state: None,
            });
        }

        let mut policy = self.policy.clone();
        let mut optimizer = self.optimizer.clone();
        let stats = ppo_update(&mut policy, &mut optimizer, &buffer, &ppo, &mut self.update_rng)?;
        if !policy.is_finite() {
            return Err(Error::NumericalDivergence {
                reason: "non-finite network parameters after update".into(),
                state: None,
            });
        }
        self.policy = policy;
        self.optimizer = optimizer;
        self.iteration += 1;
        self.timesteps += buffer.len() as u64;

        let episodes = buffer.episodes.len();
        let mean = |f: fn(&super::EpisodeSummary) -> f64| {
            (episodes > 0).then(|| buffer.episodes.iter().map(f).sum::<f64>() / episodes as f64)
        };
        Ok(IterationLog {
            iteration: self.iteration,
            timesteps: self.timesteps,
            episodes,
            episode_mean_reward: mean(|e| e.total_reward),
            episode_mean_length: mean(|e| e.length as f64),
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            clip_fraction: stats.clip_fraction,
            approx_kl: stats.approx_kl,
            log_std_mean: self.policy.log_std.iter().sum::<f64>() / self.policy.log_std.len() as f64,
        })
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        Ok(Checkpoint {
            label: self.config.name(),
            config: self.config.to_toml()?,
            timesteps: self.timesteps,
            iterations: self.iteration,
            policy: self.policy.clone(),
            optimizer: Some(self.optimizer.state.clone()),
        })
    }

    /// Trains until the timestep budget is spent.
    ///
    /// With an output directory, appends each iteration to
    /// `learning_curve.csv`, writes `latest.ckpt` every
    /// `checkpoint_interval` iterations and `final.ckpt` at the end. If an
    /// iteration fails, the last good parameters are saved as
    /// `latest.ckpt` before the error is returned.
    pub fn run(
        &mut self,
        out_dir: Option<&Path>,
        mut on_iteration: impl FnMut(&IterationLog),
    ) -> Result<Vec<IterationLog>> {
        let mut curve = match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                Some(csv::Writer::from_path(dir.join("learning_curve.csv"))?)
            }
            None => None,
        };
        let mut history = Vec::new();
        while !self.is_finished() {
            let log = match self.step() {
                Ok(log) => log,
                Err(e) => {
                    if let Some(dir) = out_dir {
                        self.checkpoint()?.save(&dir.join("latest.ckpt"))?;
                    }
                    return Err(e);
                }
            };
            if let Some(w) = curve.as_mut() {
                w.serialize(&log)?;
                w.flush().map_err(|e| Error::io("learning_curve.csv", e))?;
            }
            if let Some(dir) = out_dir {
                if self.iteration.is_multiple_of(self.config.ppo.checkpoint_interval as u64) {
                    self.checkpoint()?.save(&dir.join("latest.ckpt"))?;
                }
            }
            on_iteration(&log);
            history.push(log);
        }
        if let Some(dir) = out_dir {
            self.checkpoint()?.save(&dir.join("final.ckpt"))?;
        }
        Ok(history)
    }
}
