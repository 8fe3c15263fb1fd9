use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::QuadrotorState;
use crate::quat_math::error_quaternion_unchecked;
use crate::{Error, Result};

use super::Target;

pub const OBS_DIM: usize = 17;
pub const ACTION_DIM: usize = 4;

/// Standard deviations of the zero-mean Gaussian noise added to each
/// observation block. The previous action is never perturbed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationSpec {
    pub sigma_position: f64,
    pub sigma_attitude: f64,
    pub sigma_velocity: f64,
    pub sigma_angular_velocity: f64,
}

impl Default for ObservationSpec {
    fn default() -> Self {
        Self {
            sigma_position: 1e-3,
            sigma_attitude: 2e-3,
            sigma_velocity: 1e-3,
            sigma_angular_velocity: 2e-3,
        }
    }
}

impl ObservationSpec {
    pub fn noiseless() -> Self {
        Self {
            sigma_position: 0.0,
            sigma_attitude: 0.0,
            sigma_velocity: 0.0,
            sigma_angular_velocity: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("sigma_position", self.sigma_position),
            ("sigma_attitude", self.sigma_attitude),
            ("sigma_velocity", self.sigma_velocity),
            ("sigma_angular_velocity", self.sigma_angular_velocity),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::config(format!("observation.{name}"), "must be ≥ 0"));
            }
        }
        Ok(())
    }
}

/// `[e_p (3), q_e (4), v (3), ω (3), a_prev (4)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
    pub fn position_error(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }
    pub fn attitude_error(&self) -> [f64; 4] {
        [self.0[3], self.0[4], self.0[5], self.0[6]]
    }
    pub fn velocity(&self) -> [f64; 3] {
        [self.0[7], self.0[8], self.0[9]]
    }
    pub fn angular_velocity(&self) -> [f64; 3] {
        [self.0[10], self.0[11], self.0[12]]
    }
    pub fn previous_action(&self) -> [f64; ACTION_DIM] {
        [self.0[13], self.0[14], self.0[15], self.0[16]]
    }
}

pub fn make_observation<R: Rng + ?Sized>(
    state: &QuadrotorState,
    target: &Target,
    prev_action: &[f64; ACTION_DIM],
    spec: &ObservationSpec,
    rng: &mut R,
) -> Observation {
    let mut noise = |sigma: f64| -> f64 {
        let n: f64 = rng.sample(StandardNormal);
        sigma * n
    };
    let e_p = state.position - target.position;
    let q_e = error_quaternion_unchecked(&state.attitude, &target.attitude).to_array();
    let v = state.velocity;
    let w = state.angular_velocity;

    let mut o = [0.0; OBS_DIM];
    for i in 0..3 {
        o[i] = e_p[i] + noise(spec.sigma_position);
    }
    for i in 0..4 {
        o[3 + i] = q_e[i] + noise(spec.sigma_attitude);
    }
    for i in 0..3 {
        o[7 + i] = v[i] + noise(spec.sigma_velocity);
    }
    for i in 0..3 {
        o[10 + i] = w[i] + noise(spec.sigma_angular_velocity);
    }
    for (i, a) in prev_action.iter().enumerate() {
        o[13 + i] = a.clamp(-1.0, 1.0);
    }
    Observation(o)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::quat_math::Quaternion;
    use crate::Vec3;

    #[test]
    fn noiseless_at_target() {
        let t = Target::default();
        let s = QuadrotorState::at_rest(t.position, Quaternion::IDENTITY);
        let a = [0.1, -0.2, 0.3, -0.4];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = make_observation(&s, &t, &a, &ObservationSpec::noiseless(), &mut rng);
        let mut expect = [0.0; OBS_DIM];
        expect[6] = 1.0;
        expect[13..].copy_from_slice(&a);
        assert_eq!(o.0, expect);
    }

    #[test]
    fn previous_action_is_bit_exact_under_noise() {
        let t = Target::default();
        let s = QuadrotorState::at_rest(Vec3::new(0.3, -1.0, 0.4), Quaternion::IDENTITY);
        let a = [0.123456789, -0.987654321, 1.0, -1.0];
        let spec = ObservationSpec {
            sigma_position: 1.0,
            sigma_attitude: 1.0,
            sigma_velocity: 1.0,
            sigma_angular_velocity: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let o = make_observation(&s, &t, &a, &spec, &mut rng);
            assert_eq!(o.previous_action(), a);
        }
    }

    #[test]
    fn position_noise_is_unbiased() {
        let t = Target::default();
        let s = QuadrotorState::at_rest(Vec3::new(0.5, -0.25, 1.75), Quaternion::IDENTITY);
        let spec = ObservationSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let o = make_observation(&s, &t, &[0.0; 4], &spec, &mut rng);
            for (acc, v) in sum.iter_mut().zip(o.position_error()) {
                *acc += v;
            }
        }
        let truth = s.position - t.position;
        let tol = 3.0 * spec.sigma_position / (n as f64).sqrt();
        for i in 0..3 {
            assert!((sum[i] / n as f64 - truth[i]).abs() < tol, "axis {i}");
        }
    }
}
