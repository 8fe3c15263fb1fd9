use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::{Action, EnvConfig, Environment, Observation, ACTION_DIM, OBS_DIM};
use crate::nn::PolicyParameters;
use crate::Result;

/// One finished episode observed during collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub env_index: usize,
    pub total_reward: f64,
    pub length: u64,
    /// `false` when the episode was truncated at the horizon.
    pub terminated: bool,
}

/// An environment plus the RNG used to sample its actions. Episodes carry
/// over between rollouts.
#[derive(Debug, Clone)]
pub struct EnvWorker {
    env: Environment,
    rng: ChaCha8Rng,
    obs: Observation,
    episode_reward: f64,
    episode_length: u64,
}

impl EnvWorker {
    pub fn new(config: Arc<EnvConfig>, env_seed: u64, policy_seed: u64) -> Result<Self> {
        let mut env = Environment::new(config, env_seed)?;
        let obs = env.reset(None);
        Ok(Self {
            env,
            rng: ChaCha8Rng::seed_from_u64(policy_seed),
            obs,
            episode_reward: 0.0,
            episode_length: 0,
        })
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    fn collect(&mut self, policy: &PolicyParameters, steps: usize, index: usize) -> Result<RolloutBuffer> {
        let mut b = RolloutBuffer::with_capacity(1, steps);
        for t in 0..steps {
            let obs = self.obs.0;
            let value = policy.value(&obs)?;
            let sample = policy.sample_action(&obs, &mut self.rng)?;
            let action: Action = sample.action.as_slice().try_into().expect("policy action dimension");
            let pre_tanh: [f64; ACTION_DIM] = sample.pre_tanh.as_slice().try_into().expect("policy action dimension");
            let out = self.env.step(&action)?;

            b.observations.push(obs);
            b.pre_tanh.push(pre_tanh);
            b.actions.push(action);
            b.log_probs.push(sample.log_prob);
            b.rewards.push(out.reward);
            b.values.push(value);
            b.terminated.push(out.terminated);
            b.truncated.push(out.truncated);
            self.episode_reward += out.reward;
            self.episode_length += 1;

            let next_value = if out.terminated {
                0.0
            } else if out.truncated || t + 1 == steps {
                policy.value(&out.observation.0)?
            } else {
                // Filled from the next step's value estimate below.
                f64::NAN
            };
            b.next_values.push(next_value);

            if out.terminated || out.truncated {
                b.episodes.push(EpisodeSummary {
                    env_index: index,
                    total_reward: self.episode_reward,
                    length: self.episode_length,
                    terminated: out.terminated,
                });
                self.episode_reward = 0.0;
                self.episode_length = 0;
                self.obs = self.env.reset(None);
            } else {
                self.obs = out.observation;
            }
        }
        for t in 0..steps.saturating_sub(1) {
            if b.next_values[t].is_nan() {
                b.next_values[t] = b.values[t + 1];
            }
        }
        Ok(b)
    }
}

/// Transitions from `n_envs` environments, stored environment-major:
/// step `t` of environment `e` is at index `e * steps + t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBuffer {
    pub n_envs: usize,
    pub steps: usize,
    pub observations: Vec<[f64; OBS_DIM]>,
    /// Gaussian samples before squashing; `actions = tanh(pre_tanh)`.
    pub pre_tanh: Vec<[f64; ACTION_DIM]>,
    pub actions: Vec<Action>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// `V(s_{t+1})`, with the pre-reset observation at truncation and zero
    /// at termination.
    pub next_values: Vec<f64>,
    pub terminated: Vec<bool>,
    pub truncated: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub episodes: Vec<EpisodeSummary>,
}

impl RolloutBuffer {
    fn with_capacity(n_envs: usize, steps: usize) -> Self {
        let n = n_envs * steps;
        Self {
            n_envs,
            steps,
            observations: Vec::with_capacity(n),
            pre_tanh: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            next_values: Vec::with_capacity(n),
            terminated: Vec::with_capacity(n),
            truncated: Vec::with_capacity(n),
            advantages: Vec::new(),
            returns: Vec::new(),
            episodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.n_envs * self.steps
    }

    fn append(&mut self, other: RolloutBuffer) {
        self.observations.extend(other.observations);
        self.pre_tanh.extend(other.pre_tanh);
        self.actions.extend(other.actions);
        self.log_probs.extend(other.log_probs);
        self.rewards.extend(other.rewards);
        self.values.extend(other.values);
        self.next_values.extend(other.next_values);
        self.terminated.extend(other.terminated);
        self.truncated.extend(other.truncated);
        self.episodes.extend(other.episodes);
    }
}

/// Runs `steps` transitions in every worker concurrently with a frozen
/// policy. Each worker owns its environment and RNG, so the result does not
/// depend on thread scheduling.
pub fn collect_rollout(
    policy: &PolicyParameters,
    workers: &mut [EnvWorker],
    steps: usize,
) -> Result<RolloutBuffer> {
    let segments = workers
        .par_iter_mut()
        .enumerate()
        .map(|(i, w)| w.collect(policy, steps, i))
        .collect::<Result<Vec<_>>>()?;
    let mut buffer = RolloutBuffer::with_capacity(workers.len(), steps);
    for s in segments {
        buffer.append(s);
    }
    Ok(buffer)
}

/// Fills `advantages` and `returns` for every environment segment.
pub fn compute_gae(buffer: &mut RolloutBuffer, gamma: f64, lambda: f64) {
    let mut advantages = Vec::with_capacity(buffer.len());
    for e in 0..buffer.n_envs {
        let r = e * buffer.steps..(e + 1) * buffer.steps;
        advantages.extend(gae(
            &buffer.rewards[r.clone()],
            &buffer.values[r.clone()],
            &buffer.next_values[r.clone()],
            &buffer.terminated[r.clone()],
            &buffer.truncated[r],
            gamma,
            lambda,
        ));
    }
    buffer.returns = advantages.iter().zip(&buffer.values).map(|(a, v)| a + v).collect();
    buffer.advantages = advantages;
}

/// Generalized advantage estimates for one contiguous trajectory segment.
///
/// `δ_t = r_t + γ·V(s_{t+1})·(1 − terminated_t) − V(s_t)` and
/// `A_t = δ_t + γλ·A_{t+1}`, restarting after every terminated or truncated
/// step.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    terminated: &[bool],
    truncated: &[bool],
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let bootstrap = if terminated[t] { 0.0 } else { next_values[t] };
        let delta = rewards[t] + gamma * bootstrap - values[t];
        let episode_end = terminated[t] || truncated[t];
        carry = delta + if episode_end { 0.0 } else { gamma * lambda * carry };
        adv[t] = carry;
    }
    adv
}
