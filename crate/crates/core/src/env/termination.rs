use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::QuadrotorState;
use crate::quat_math::{error_quaternion_unchecked, geodesic_angle};
use crate::{Error, Result};

use super::Target;

/// Failure bounds and episode horizon. Attitude is bounded either by the
/// geodesic angle or by separate roll/pitch limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminationSpec {
    /// Minimum altitude, m.
    pub z_min: f64,
    /// Maximum position error norm, m.
    pub position_error_max: f64,
    /// Maximum geodesic attitude error, rad.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic_max: Option<f64>,
    /// Maximum |roll|, rad.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roll_max: Option<f64>,
    /// Maximum |pitch|, rad.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_max: Option<f64>,
    /// Maximum linear speed, m/s.
    pub speed_max: f64,
    /// Maximum angular rate magnitude, deg/s.
    pub angular_rate_max_deg: f64,
    /// Episode length before truncation, s.
    pub episode_horizon: f64,
}

impl TerminationSpec {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("termination.{name}"), format!("must be > 0, got {v}")))
            }
        };
        check("z_min", self.z_min)?;
        check("position_error_max", self.position_error_max)?;
        check("speed_max", self.speed_max)?;
        check("angular_rate_max_deg", self.angular_rate_max_deg)?;
        check("episode_horizon", self.episode_horizon)?;
        for (name, v) in [
            ("geodesic_max", self.geodesic_max),
            ("roll_max", self.roll_max),
            ("pitch_max", self.pitch_max),
        ] {
            if let Some(v) = v {
                check(name, v)?;
            }
        }
        let split = self.roll_max.is_some() || self.pitch_max.is_some();
        match (self.geodesic_max.is_some(), split) {
            (true, true) => Err(Error::config(
                "termination.geodesic_max",
                "use either geodesic_max or roll_max/pitch_max, not both",
            )),
            (false, false) => Err(Error::config(
                "termination.geodesic_max",
                "one attitude bound (geodesic_max or roll_max/pitch_max) is required",
            )),
            _ => Ok(()),
        }
    }

    pub fn angular_rate_max(&self) -> f64 {
        self.angular_rate_max_deg.to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Altitude,
    PositionError,
    Attitude,
    Roll,
    Pitch,
    Speed,
    AngularRate,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Altitude => "altitude",
            Self::PositionError => "position_error",
            Self::Attitude => "attitude",
            Self::Roll => "roll",
            Self::Pitch => "pitch",
            Self::Speed => "speed",
            Self::AngularRate => "angular_rate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum EpisodeStatus {
    Running,
    Terminated(TerminationReason),
    Truncated,
}

impl EpisodeStatus {
    pub fn is_done(&self) -> bool {
        !matches!(self, EpisodeStatus::Running)
    }
}

impl fmt::Display for EpisodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Running => f.write_str("running"),
            Self::Terminated(r) => write!(f, "terminated ({r})"),
            Self::Truncated => f.write_str("truncated"),
        }
    }
}

/// Failure bounds take precedence over the horizon, so an episode is never
/// both terminated and truncated.
pub fn check_termination(
    state: &QuadrotorState,
    target: &Target,
    elapsed: f64,
    spec: &TerminationSpec,
) -> EpisodeStatus {
    if let Some(reason) = violated_bound(state, target, spec) {
        EpisodeStatus::Terminated(reason)
    } else if elapsed >= spec.episode_horizon {
        EpisodeStatus::Truncated
    } else {
        EpisodeStatus::Running
    }
}

fn violated_bound(
    state: &QuadrotorState,
    target: &Target,
    spec: &TerminationSpec,
) -> Option<TerminationReason> {
    use TerminationReason::*;
    if state.position.z < spec.z_min {
        return Some(Altitude);
    }
    if (state.position - target.position).norm() > spec.position_error_max {
        return Some(PositionError);
    }
    if let Some(max) = spec.geodesic_max {
        let q_e = error_quaternion_unchecked(&state.attitude, &target.attitude);
        if geodesic_angle(&q_e) > max {
            return Some(Attitude);
        }
    }
    if spec.roll_max.is_some() || spec.pitch_max.is_some() {
        let (roll, pitch, _) = state.attitude.to_euler();
        if spec.roll_max.is_some_and(|m| roll.abs() > m) {
            return Some(Roll);
        }
        if spec.pitch_max.is_some_and(|m| pitch.abs() > m) {
            return Some(Pitch);
        }
    }
    if state.velocity.norm() > spec.speed_max {
        return Some(Speed);
    }
    if state.angular_velocity.norm() > spec.angular_rate_max() {
        return Some(AngularRate);
    }
    None
}
