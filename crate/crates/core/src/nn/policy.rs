//! Actor-critic parameters and the tanh-squashed diagonal Gaussian policy.
//!
//! The actor outputs the pre-squash mean `μ(o)`; a sample is
//! `a = tanh(u)`, `u ~ N(μ, diag(σ²))` with a state-independent `log σ`.
//! Its log-density includes the change-of-variables term
//! `−Σ log(1 − tanh²(u))`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::MlpParameters;
use crate::{Error, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParameters {
    pub actor: MlpParameters,
    pub critic: MlpParameters,
    pub log_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    /// Squashed action in `[−1, 1]`.
    pub action: Vec<f64>,
    /// Gaussian sample before squashing.
    pub pre_tanh: Vec<f64>,
    pub log_prob: f64,
}

impl PolicyParameters {
    /// Orthogonally initialized actor (output gain 0.01) and critic (output
    /// gain 1), hidden gains √2.
    pub fn new(
        obs_dim: usize,
        hidden: &[usize],
        action_dim: usize,
        initial_log_std: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(hidden);
        let mut critic_sizes = actor_sizes.clone();
        actor_sizes.push(action_dim);
        critic_sizes.push(1);
        let mut gains = vec![std::f64::consts::SQRT_2; hidden.len()];
        gains.push(0.01);
        let actor = MlpParameters::initialize(&actor_sizes, &gains, seed)?;
        *gains.last_mut().unwrap() = 1.0;
        let critic = MlpParameters::initialize(&critic_sizes, &gains, seed ^ 0x9E37_79B9_7F4A_7C15)?;
        let mut p = Self {
            actor,
            critic,
            log_std: vec![initial_log_std; action_dim],
        };
        p.clamp_log_std();
        Ok(p)
    }

    /// 17 → 64 → 64 → {4 | 1}.
    pub fn standard(seed: u64, initial_log_std: f64) -> Result<Self> {
        Self::new(
            crate::env::OBS_DIM,
            &[64, 64],
            crate::env::ACTION_DIM,
            initial_log_std,
            seed,
        )
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            actor: self.actor.zeros_like(),
            critic: self.critic.zeros_like(),
            log_std: vec![0.0; self.log_std.len()],
        }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.actor.output_dim() != self.log_std.len() {
            return Err(Error::Checkpoint(format!(
                "actor has {} outputs but log_std has {} entries",
                self.actor.output_dim(),
                self.log_std.len()
            )));
        }
        if self.critic.output_dim() != 1 || self.critic.input_dim() != self.actor.input_dim() {
            return Err(Error::Checkpoint("critic shape does not match actor".into()));
        }
        if !self.is_finite() {
            return Err(Error::Checkpoint("non-finite parameters".into()));
        }
        Ok(())
    }

    /// Same layer sizes for actor, critic and log-std.
    pub fn same_architecture(&self, other: &Self) -> bool {
        self.actor.layer_sizes() == other.actor.layer_sizes()
            && self.critic.layer_sizes() == other.critic.layer_sizes()
            && self.log_std.len() == other.log_std.len()
    }

    pub fn clamp_log_std(&mut self) {
        for v in &mut self.log_std {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }

    pub fn num_parameters(&self) -> usize {
        self.actor.num_parameters() + self.critic.num_parameters() + self.log_std.len()
    }

    /// Actor, then critic, then log-std.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.actor.to_flat();
        v.extend(self.critic.to_flat());
        v.extend_from_slice(&self.log_std);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let na = self.actor.num_parameters();
        let nc = self.critic.num_parameters();
        self.actor.set_flat(&flat[..na]);
        self.critic.set_flat(&flat[na..na + nc]);
        self.log_std.copy_from_slice(&flat[na + nc..]);
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(obs)?[0])
    }

    /// Pre-squash mean `μ(o)`.
    pub fn action_mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(obs)
    }

    /// `tanh(μ(o))`, used for evaluation.
    pub fn deterministic_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.action_mean(obs)?.into_iter().map(f64::tanh).collect())
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<PolicySample> {
        let mean = self.action_mean(obs)?;
        let pre_tanh: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| {
                let n: f64 = rng.sample(StandardNormal);
                m + ls.exp() * n
            })
            .collect();
        let log_prob = squashed_gaussian_log_prob(&mean, &self.log_std, &pre_tanh);
        Ok(PolicySample {
            action: pre_tanh.iter().map(|u| u.tanh()).collect(),
            pre_tanh,
            log_prob,
        })
    }
}

/// `log(1 − tanh²(u))`, stable for large `|u|`.
pub fn log_tanh_jacobian(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Log-density of `tanh(u)` where `u ~ N(mean, diag(exp(log_std)²))`.
pub fn squashed_gaussian_log_prob(mean: &[f64], log_std: &[f64], pre_tanh: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(pre_tanh)
        .map(|((m, ls), u)| {
            let z = (u - m) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LOG_TWO_PI - log_tanh_jacobian(*u)
        })
        .sum()
}

/// Gradients of [`squashed_gaussian_log_prob`] with respect to the mean
/// and the log standard deviation (the squashing term depends on neither).
pub fn log_prob_gradients(mean: &[f64], log_std: &[f64], pre_tanh: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(mean.len());
    let mut d_log_std = Vec::with_capacity(mean.len());
    for ((m, ls), u) in mean.iter().zip(log_std).zip(pre_tanh) {
        let inv_var = (-2.0 * ls).exp();
        let diff = u - m;
        d_mean.push(diff * inv_var);
        d_log_std.push(diff * diff * inv_var - 1.0);
    }
    (d_mean, d_log_std)
}

/// Differential entropy of the pre-squash Gaussian.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 + HALF_LOG_TWO_PI).sum()
}
