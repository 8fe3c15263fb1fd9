//! Hover-setpoint environment.
//!
//! One control step lasts `1 / control_frequency` seconds: the action is
//! mapped to motor speeds, the rigid body is integrated over
//! `physics_substeps` RK4 sub-steps with the command held, then the reward
//! (on the true state), the termination status and the noisy observation are
//! produced.

mod observation;
mod reward;
mod termination;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, MotorCommand, QuadrotorParams, QuadrotorState};
use crate::quat_math::Quaternion;
use crate::{Error, Result, Vec3};

pub use observation::{make_observation, Observation, ObservationSpec, ACTION_DIM, OBS_DIM};
pub use reward::{compute_reward, ExpTerm, RewardBreakdown, RewardSpec};
pub use termination::{check_termination, EpisodeStatus, TerminationReason, TerminationSpec};

pub type Action = [f64; ACTION_DIM];

/// Hover setpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub position: Vec3,
    pub attitude: Quaternion,
}

impl Default for Target {
    fn default() -> Self {
        Self {
            position: Vec3::new(0.0, 0.0, 1.0),
            attitude: Quaternion::IDENTITY,
        }
    }
}

/// Uniform initial-state distribution used at every reset. The vehicle
/// always starts at rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialStateSpec {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub z_range: [f64; 2],
    /// Roll and pitch are each drawn from `[−max, max]`, degrees.
    pub tilt_max_deg: f64,
    /// Yaw range, degrees, half-open.
    pub yaw_range_deg: [f64; 2],
}

impl Default for InitialStateSpec {
    fn default() -> Self {
        Self {
            x_range: [-2.0, 2.0],
            y_range: [-2.0, 2.0],
            z_range: [0.0, 2.0],
            tilt_max_deg: 15.0,
            yaw_range_deg: [-180.0, 180.0],
        }
    }
}

impl InitialStateSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("x_range", self.x_range),
            ("y_range", self.y_range),
            ("z_range", self.z_range),
            ("yaw_range_deg", self.yaw_range_deg),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return Err(Error::config(format!("initial_state.{name}"), "expected [lo, hi] with lo ≤ hi"));
            }
        }
        if !(self.tilt_max_deg.is_finite() && self.tilt_max_deg >= 0.0) {
            return Err(Error::config("initial_state.tilt_max_deg", "must be ≥ 0"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> QuadrotorState {
        let mut uniform = |r: [f64; 2]| {
            if r[0] == r[1] {
                r[0]
            } else {
                rng.random_range(r[0]..r[1])
            }
        };
        let x = uniform(self.x_range);
        let y = uniform(self.y_range);
        let z = uniform(self.z_range);
        let tilt = self.tilt_max_deg.to_radians();
        let roll = uniform([-tilt, tilt]);
        let pitch = uniform([-tilt, tilt]);
        let yaw = uniform([self.yaw_range_deg[0].to_radians(), self.yaw_range_deg[1].to_radians()]);
        QuadrotorState::at_rest(Vec3::new(x, y, z), Quaternion::from_euler(roll, pitch, yaw))
    }
}

/// Everything that defines an environment instance. Shared read-only
/// between parallel instances.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub params: QuadrotorParams,
    pub reward: RewardSpec,
    pub termination: TerminationSpec,
    pub observation: ObservationSpec,
    pub initial_state: InitialStateSpec,
    pub target: Target,
    pub control_frequency: f64,
    pub physics_substeps: u32,
}

impl EnvConfig {
    pub fn new(reward: RewardSpec, termination: TerminationSpec) -> Self {
        Self {
            params: QuadrotorParams::default(),
            reward,
            termination,
            observation: ObservationSpec::default(),
            initial_state: InitialStateSpec::default(),
            target: Target::default(),
            control_frequency: 100.0,
            physics_substeps: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.reward.validate()?;
        self.termination.validate()?;
        self.observation.validate()?;
        self.initial_state.validate()?;
        self.target.attitude.ensure_unit("target attitude")?;
        if !(self.control_frequency.is_finite() && self.control_frequency > 0.0) {
            return Err(Error::config("control_frequency", "must be > 0"));
        }
        if self.physics_substeps == 0 {
            return Err(Error::config("physics_substeps", "must be ≥ 1"));
        }
        Ok(())
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / self.control_frequency
    }
}

/// Maps normalized actions to motor speeds: `rpm = rpm_hover·(1 + a/2)`.
///
/// Actions are clamped to `[−1, 1]` and speeds to `[0, max_rpm]`.
pub fn action_to_rpm(action: &Action, params: &QuadrotorParams) -> MotorCommand {
    let hover = params.hover_rpm();
    MotorCommand {
        rpm: action.map(|a| (hover * (1.0 + 0.5 * a.clamp(-1.0, 1.0))).clamp(0.0, params.max_rpm)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    /// Failure: a bound in the termination spec was violated.
    pub terminated: bool,
    /// The episode horizon was reached.
    pub truncated: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub breakdown: RewardBreakdown,
    pub status: EpisodeStatus,
    pub rpm: [f64; 4],
    /// Time since reset after this step, s.
    pub time: f64,
}

/// Per-step trajectory record emitted when logging is enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: f64,
    pub state: QuadrotorState,
    pub action: Action,
    pub rpm: [f64; 4],
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub status: EpisodeStatus,
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: Arc<EnvConfig>,
    state: QuadrotorState,
    prev_action: Action,
    steps: u64,
    done: bool,
    rng: ChaCha8Rng,
    log: Option<Vec<StepRecord>>,
}

impl Environment {
    pub fn new(config: Arc<EnvConfig>, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            state: QuadrotorState::at_rest(config.target.position, config.target.attitude),
            config,
            prev_action: [0.0; ACTION_DIM],
            steps: 0,
            done: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
            log: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &QuadrotorState {
        &self.state
    }

    /// Overwrites the simulated state without touching the step counter.
    pub fn set_state(&mut self, state: QuadrotorState) {
        self.state = state;
    }

    pub fn previous_action(&self) -> &Action {
        &self.prev_action
    }

    pub fn elapsed(&self) -> f64 {
        self.steps as f64 / self.config.control_frequency
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn enable_logging(&mut self) {
        self.log = Some(Vec::new());
    }

    pub fn take_log(&mut self) -> Vec<StepRecord> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Starts a new episode from a state drawn from the initial-state
    /// distribution. `Some(seed)` reseeds the environment RNG first.
    pub fn reset(&mut self, seed: Option<u64>) -> Observation {
        if let Some(seed) = seed {
            self.rng = ChaCha8Rng::seed_from_u64(seed);
        }
        let state = self.config.initial_state.sample(&mut self.rng);
        self.reset_to(state)
    }

    /// Starts a new episode from the given state.
    pub fn reset_to(&mut self, state: QuadrotorState) -> Observation {
        self.state = state;
        self.prev_action = [0.0; ACTION_DIM];
        self.steps = 0;
        self.done = false;
        if let Some(log) = self.log.as_mut() {
            log.clear();
        }
        self.observe()
    }

    /// Noisy observation of the current state.
    pub fn observe(&mut self) -> Observation {
        make_observation(
            &self.state,
            &self.config.target,
            &self.prev_action,
            &self.config.observation,
            &mut self.rng,
        )
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage(
                "step called on a finished episode; call reset first".into(),
            ));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite action {action:?}")));
        }
        let action = action.map(|a| a.clamp(-1.0, 1.0));
        let cfg = &*self.config;
        let cmd = action_to_rpm(&action, &cfg.params);
        let (thrust, torque) = dynamics::motor_forces(&cmd, &cfg.params)?;
        let h = cfg.control_dt() / cfg.physics_substeps as f64;
        let mut state = self.state;
        for _ in 0..cfg.physics_substeps {
            state = dynamics::integrate_rk4(&state, &thrust, &torque, &cfg.params, h)?;
        }
        self.state = state;
        self.steps += 1;

        let (reward, breakdown) =
            compute_reward(&state, &cfg.target, &action, &self.prev_action, &cfg.reward);
        let time = self.elapsed();
        let status = check_termination(&state, &cfg.target, time, &cfg.termination);
        self.prev_action = action;
        self.done = status.is_done();

        if let Some(log) = self.log.as_mut() {
            log.push(StepRecord {
                time,
                state,
                action,
                rpm: cmd.rpm,
                reward,
                breakdown,
                status,
            });
        }

        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            terminated: matches!(status, EpisodeStatus::Terminated(_)),
            truncated: matches!(status, EpisodeStatus::Truncated),
            info: StepInfo {
                breakdown,
                status,
                rpm: cmd.rpm,
                time,
            },
        })
    }
}
