//! Evaluation trials: closed-loop episodes from random initial states and
//! the per-channel step-response report of each.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::response::{overshoot, settling_time, steady_state_error};
use crate::config::ExperimentConfig;
use crate::dynamics::QuadrotorState;
use crate::env::{Action, EnvConfig, Environment, EpisodeStatus, Observation, StepRecord};
use crate::nn::{Checkpoint, PolicyParameters};
use crate::ppo::derive_seed;
use crate::quat_math::wrap_angle;
use crate::{Error, Result};

/// Steps smaller than this are treated as degenerate; their percentages are
/// then taken relative to one unit (m or rad).
pub const DEGENERATE_STEP: f64 = 1e-9;

pub const CHANNELS: [&str; 4] = ["x", "y", "z", "yaw"];

/// Source of actions for an evaluation episode.
pub trait Controller {
    /// Called after the environment draws its initial state and before the
    /// first action.
    fn on_reset(&mut self, _env: &mut Environment) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, obs: &Observation, env: &mut Environment) -> Result<Action>;
}

/// Deterministic policy: `tanh` of the actor mean.
pub struct PolicyController<'a>(pub &'a PolicyParameters);

impl Controller for PolicyController<'_> {
    fn act(&mut self, obs: &Observation, _env: &mut Environment) -> Result<Action> {
        let a = self.0.deterministic_action(obs.as_slice())?;
        a.as_slice()
            .try_into()
            .map_err(|_| Error::InvalidInput(format!("policy produced {} actions", a.len())))
    }
}

/// Commands hover speed on every motor.
pub struct HoverController;

impl Controller for HoverController {
    fn act(&mut self, _obs: &Observation, _env: &mut Environment) -> Result<Action> {
        Ok([0.0; 4])
    }
}

/// Uniform random actions.
pub struct RandomController(pub ChaCha8Rng);

impl RandomController {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Controller for RandomController {
    fn act(&mut self, _obs: &Observation, _env: &mut Environment) -> Result<Action> {
        Ok(std::array::from_fn(|_| self.0.random_range(-1.0..=1.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub n_trials: usize,
    /// Episode length in seconds; replaces the configured horizon.
    pub horizon: f64,
    pub seed: u64,
    /// Settling band as a fraction of the step magnitude.
    pub band_fraction: f64,
    /// Averaging window for the steady-state error, s.
    pub steady_window: f64,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            n_trials: 100,
            horizon: 10.0,
            seed: 0,
            band_fraction: 0.02,
            steady_window: 1.0,
        }
    }
}

impl TrialOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidInput("at least one trial is required".into()));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid horizon {}", self.horizon)));
        }
        if !(self.band_fraction > 0.0 && self.steady_window > 0.0) {
            return Err(Error::InvalidInput("band and window must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    /// Seconds; `None` if the response never entered the band for good.
    pub settling_time: Option<f64>,
    /// Percent of the step magnitude.
    pub overshoot: f64,
    /// Percent of the step magnitude.
    pub steady_state_error: f64,
    /// Same error in m or rad.
    pub steady_state_error_abs: f64,
    pub initial: f64,
    pub target: f64,
    pub step_magnitude: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub initial_state: QuadrotorState,
    /// No failure termination before the horizon.
    pub success: bool,
    pub status: EpisodeStatus,
    pub duration: f64,
    pub total_reward: f64,
    pub x: ChannelMetrics,
    pub y: ChannelMetrics,
    pub z: ChannelMetrics,
    pub yaw: ChannelMetrics,
    /// File holding the trajectory, when written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
}

impl TrialReport {
    pub fn channel(&self, name: &str) -> &ChannelMetrics {
        match name {
            "x" => &self.x,
            "y" => &self.y,
            "z" => &self.z,
            "yaw" => &self.yaw,
            _ => panic!("unknown channel {name}"),
        }
    }

    pub fn channels(&self) -> [(&'static str, &ChannelMetrics); 4] {
        [("x", &self.x), ("y", &self.y), ("z", &self.z), ("yaw", &self.yaw)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub report: TrialReport,
    /// State the episode actually started from (after `on_reset`).
    pub start: QuadrotorState,
    pub records: Vec<StepRecord>,
}

fn channel_metrics(
    signal: &[f64],
    dt: f64,
    initial: f64,
    target: f64,
    options: &TrialOptions,
) -> Result<ChannelMetrics> {
    let magnitude = (target - initial).abs();
    let degenerate = magnitude < DEGENERATE_STEP;
    let scale = if degenerate { 1.0 } else { magnitude };
    let settling = settling_time(signal, dt, target, scale, options.band_fraction)?;
    let window = options.steady_window.min(signal.len() as f64 * dt);
    let abs = steady_state_error(signal, dt, target, window, None)?;
    Ok(ChannelMetrics {
        settling_time: settling,
        overshoot: if degenerate { 0.0 } else { overshoot(signal, initial, target) },
        steady_state_error: 100.0 * abs / scale,
        steady_state_error_abs: abs,
        initial,
        target,
        step_magnitude: magnitude,
        degenerate,
    })
}

/// Runs one episode and analyses it. Step magnitudes are measured from the
/// state drawn by the environment, signals from the state after
/// `on_reset`.
pub fn run_trial<C: Controller>(
    env_config: Arc<EnvConfig>,
    trial: usize,
    seed: u64,
    controller: &mut C,
    options: &TrialOptions,
) -> Result<Trial> {
    let mut env = Environment::new(env_config, seed)?;
    env.enable_logging();
    let mut obs = env.reset(None);
    let drawn = *env.state();
    controller.on_reset(&mut env)?;
    if *env.state() != drawn {
        obs = env.observe();
    }
    let start = *env.state();
    let mut status = EpisodeStatus::Running;
    let mut total_reward = 0.0;
    if options.horizon > 0.0 {
        while !env.is_done() {
            let action = controller.act(&obs, &mut env)?;
            let out = env.step(&action)?;
            obs = out.observation;
            status = out.info.status;
            total_reward += out.reward;
        }
    } else {
        status = EpisodeStatus::Truncated;
    }
    let records = env.take_log();
    let cfg = env.config();
    let dt = cfg.control_dt();
    let target = cfg.target;
    let (_, _, target_yaw) = target.attitude.to_euler();
    let states: Vec<&QuadrotorState> = std::iter::once(&start).chain(records.iter().map(|r| &r.state)).collect();
    let series = |f: &dyn Fn(&QuadrotorState) -> f64| states.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let yaw_error = |s: &QuadrotorState| wrap_angle(s.attitude.to_euler().2 - target_yaw);

    let report = TrialReport {
        trial,
        seed,
        initial_state: drawn,
        success: status == EpisodeStatus::Truncated,
        status,
        duration: records.len() as f64 * dt,
        total_reward,
        x: channel_metrics(&series(&|s| s.position.x), dt, drawn.position.x, target.position.x, options)?,
        y: channel_metrics(&series(&|s| s.position.y), dt, drawn.position.y, target.position.y, options)?,
        z: channel_metrics(&series(&|s| s.position.z), dt, drawn.position.z, target.position.z, options)?,
        yaw: channel_metrics(&series(&yaw_error), dt, yaw_error(&drawn), 0.0, options)?,
        trajectory: None,
    };
    Ok(Trial {
        report,
        start,
        records,
    })
}

/// Runs `options.n_trials` independent episodes in parallel. Trial `i`
/// uses environment seed `derive_seed(options.seed, i)`; results are in
/// trial order and do not depend on scheduling.
pub fn run_trials<C, F>(env_config: &EnvConfig, options: &TrialOptions, make_controller: F) -> Result<Vec<Trial>>
where
    C: Controller,
    F: Fn(usize) -> C + Sync,
{
    options.validate()?;
    let mut cfg = env_config.clone();
    cfg.termination.episode_horizon = if options.horizon > 0.0 { options.horizon } else { f64::MIN_POSITIVE };
    let cfg = Arc::new(cfg);
    (0..options.n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(options.seed, i as u64);
            run_trial(cfg.clone(), i, seed, &mut make_controller(i), options)
        })
        .collect()
}

/// Loads the experiment stored in a checkpoint and runs the deterministic
/// policy. `expected_label`, when given, must match the checkpoint's preset.
pub fn evaluate_checkpoint(
    checkpoint: &Checkpoint,
    expected_label: Option<&str>,
    options: &TrialOptions,
) -> Result<(ExperimentConfig, Vec<Trial>)> {
    if let Some(expected) = expected_label {
        if expected != checkpoint.label {
            return Err(Error::config(
                "preset",
                format!(
                    "checkpoint was trained with preset `{}`, not `{expected}`",
                    checkpoint.label
                ),
            ));
        }
    }
    let config = ExperimentConfig::parse(&checkpoint.config)?;
    let env_config = config.env_config()?;
    let policy = &checkpoint.policy;
    if policy.obs_dim() != crate::env::OBS_DIM || policy.action_dim() != crate::env::ACTION_DIM {
        return Err(Error::Checkpoint("policy dimensions do not match the environment".into()));
    }
    let trials = run_trials(&env_config, options, |_| PolicyController(policy))?;
    Ok((config, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;

    /// Puts the vehicle exactly on the setpoint at reset and hovers.
    struct Teleport;

    impl Controller for Teleport {
        fn on_reset(&mut self, env: &mut Environment) -> Result<()> {
            let t = env.config().target;
            env.set_state(QuadrotorState::at_rest(t.position, t.attitude));
            Ok(())
        }

        fn act(&mut self, _obs: &Observation, _env: &mut Environment) -> Result<Action> {
            Ok([0.0; 4])
        }
    }

    fn options(n: usize) -> TrialOptions {
        TrialOptions {
            n_trials: n,
            horizon: 2.0,
            seed: 3,
            ..TrialOptions::default()
        }
    }

    #[test]
    fn teleport_oracle_is_perfect() {
        let cfg = Preset::Baseline.config().env_config().unwrap();
        let trials = run_trials(&cfg, &options(4), |_| Teleport).unwrap();
        for t in &trials {
            let r = &t.report;
            assert!(r.success);
            assert!((r.duration - 2.0).abs() < 1e-12);
            for (_, c) in r.channels() {
                assert_eq!(c.settling_time, Some(0.0));
                assert!(c.overshoot.abs() < 1e-9);
                assert!(c.steady_state_error.abs() < 1e-9);
                assert!(!c.degenerate);
            }
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let cfg = Preset::Inspection.config().env_config().unwrap();
        let policy = PolicyParameters::standard(5, -0.5).unwrap();
        let a = run_trials(&cfg, &options(1), |_| PolicyController(&policy)).unwrap();
        let b = run_trials(&cfg, &options(1), |_| PolicyController(&policy)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_controller_fails_early() {
        let cfg = Preset::Inspection.config().env_config().unwrap();
        let trials = run_trials(&cfg, &options(5), |i| RandomController::new(i as u64)).unwrap();
        for t in trials {
            assert!(!t.report.success);
            assert!(matches!(t.report.status, EpisodeStatus::Terminated(_)));
            assert!(t.report.duration < 2.0);
        }
    }

    #[test]
    fn preset_mismatch_is_a_config_error() {
        let cfg = Preset::Baseline.config();
        let ck = Checkpoint {
            label: "baseline".into(),
            config: cfg.to_toml().unwrap(),
            timesteps: 0,
            iterations: 0,
            policy: PolicyParameters::standard(0, -0.5).unwrap(),
            optimizer: None,
        };
        let err = evaluate_checkpoint(&ck, Some("inspection"), &options(1)).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let (_, trials) = evaluate_checkpoint(&ck, Some("baseline"), &options(2)).unwrap();
        assert_eq!(trials.len(), 2);
    }

    #[test]
    fn zero_horizon_yields_initial_sample_only() {
        let cfg = Preset::Baseline.config().env_config().unwrap();
        let opts = TrialOptions {
            horizon: 0.0,
            ..options(1)
        };
        let t = run_trials(&cfg, &opts, |_| HoverController).unwrap();
        assert!(t[0].records.is_empty());
    }
}
