//! Multi-component hover reward.
//!
//! ```text
//! R = s + λ1·E(‖xy − xy*‖²) + λ2·E(|z − z*|²) + λ3·E(‖v‖²) + λ4·E(θ²) − λ5·‖a_t − a_{t−1}‖²
//! E(x²) = α·exp(−δα·x²) + β·exp(−δβ·x²),   α + β = 1
//! ```
//!
//! A single-bandwidth term is `α = 1, β = 0`. The wide component (small δα)
//! shapes the transient; the narrow one (large δβ) rewards steady-state
//! accuracy.

use serde::{Deserialize, Serialize};

use crate::dynamics::QuadrotorState;
use crate::quat_math::{error_quaternion_unchecked, geodesic_angle};
use crate::{Error, Result};

use super::Target;

/// One weighted (dual-)bandwidth exponential term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpTerm {
    pub weight: f64,
    pub alpha: f64,
    pub delta_alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_beta: Option<f64>,
}

impl ExpTerm {
    pub fn single(weight: f64, delta: f64) -> Self {
        Self {
            weight,
            alpha: 1.0,
            delta_alpha: delta,
            beta: 0.0,
            delta_beta: None,
        }
    }

    pub fn dual(weight: f64, alpha: f64, delta_alpha: f64, beta: f64, delta_beta: f64) -> Self {
        Self {
            weight,
            alpha,
            delta_alpha,
            beta,
            delta_beta: Some(delta_beta),
        }
    }

    /// Unweighted shape `α·exp(−δα·x²) + β·exp(−δβ·x²)`.
    pub fn shape(&self, error_squared: f64) -> f64 {
        let wide = self.alpha * (-self.delta_alpha * error_squared).exp();
        match self.delta_beta {
            Some(db) if self.beta != 0.0 => wide + self.beta * (-db * error_squared).exp(),
            _ => wide,
        }
    }

    pub fn value(&self, error_squared: f64) -> f64 {
        self.weight * self.shape(error_squared)
    }

    fn validate(&self, path: &str) -> Result<()> {
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(Error::config(format!("{path}.weight"), "must be ≥ 0"));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::config(format!("{path}.alpha"), "alpha and beta must be ≥ 0"));
        }
        if (self.alpha + self.beta - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                format!("{path}.alpha"),
                format!("alpha + beta must equal 1, got {}", self.alpha + self.beta),
            ));
        }
        if !(self.delta_alpha.is_finite() && self.delta_alpha > 0.0) {
            return Err(Error::config(format!("{path}.delta_alpha"), "must be > 0"));
        }
        match self.delta_beta {
            Some(d) if !(d.is_finite() && d > 0.0) => {
                Err(Error::config(format!("{path}.delta_beta"), "must be > 0"))
            }
            None if self.beta != 0.0 => Err(Error::config(
                format!("{path}.delta_beta"),
                "required when beta > 0",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    /// Constant per-step survival bonus.
    pub survival: f64,
    /// Horizontal position error term, on ‖xy − xy*‖².
    pub position_xy: ExpTerm,
    /// Altitude error term, on (z − z*)².
    pub position_z: ExpTerm,
    /// Linear velocity term, on ‖v‖².
    pub velocity: ExpTerm,
    /// Attitude term, on the squared geodesic angle.
    pub attitude: ExpTerm,
    /// Weight of the action-difference penalty ‖a_t − a_{t−1}‖².
    pub smoothness: f64,
}

impl RewardSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.survival.is_finite() {
            return Err(Error::config("reward.survival", "must be finite"));
        }
        self.position_xy.validate("reward.position_xy")?;
        self.position_z.validate("reward.position_z")?;
        self.velocity.validate("reward.velocity")?;
        self.attitude.validate("reward.attitude")?;
        if !(self.smoothness.is_finite() && self.smoothness >= 0.0) {
            return Err(Error::config("reward.smoothness", "must be ≥ 0"));
        }
        Ok(())
    }

    /// Largest attainable per-step reward (all errors zero, no action change).
    pub fn upper_bound(&self) -> f64 {
        self.survival
            + self.position_xy.weight
            + self.position_z.weight
            + self.velocity.weight
            + self.attitude.weight
    }

    /// Smallest attainable per-step reward: every shaped term vanishes and
    /// the action jumps across the full box (‖Δa‖² = 16).
    pub fn lower_bound(&self) -> f64 {
        self.survival - 16.0 * self.smoothness
    }
}

/// Per-component addends of one reward evaluation. The smoothness entry is
/// already negated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub survival: f64,
    pub position_xy: f64,
    pub position_z: f64,
    pub velocity: f64,
    pub attitude: f64,
    pub smoothness: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.survival
            + self.position_xy
            + self.position_z
            + self.velocity
            + self.attitude
            + self.smoothness
    }
}

/// Evaluates the reward on the true (noise-free) state.
pub fn compute_reward(
    state: &QuadrotorState,
    target: &Target,
    action: &[f64; 4],
    prev_action: &[f64; 4],
    spec: &RewardSpec,
) -> (f64, RewardBreakdown) {
    let e = state.position - target.position;
    let xy2 = e.x * e.x + e.y * e.y;
    let z2 = e.z * e.z;
    let v2 = state.velocity.norm_squared();
    let theta = geodesic_angle(&error_quaternion_unchecked(&state.attitude, &target.attitude));
    let da2: f64 = action
        .iter()
        .zip(prev_action)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();

    let breakdown = RewardBreakdown {
        survival: spec.survival,
        position_xy: spec.position_xy.value(xy2),
        position_z: spec.position_z.value(z2),
        velocity: spec.velocity.value(v2),
        attitude: spec.attitude.value(theta * theta),
        smoothness: -spec.smoothness * da2,
    };
    (breakdown.total(), breakdown)
}
