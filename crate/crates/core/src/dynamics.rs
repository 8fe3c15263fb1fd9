//! Rigid-body quadrotor model.
//!
//! ```text
//! p̈ = (1/m)·Im(q ⊗ (T_B, 0) ⊗ q*) − g·ẑ − (1/m)·D·ṗ
//! q̇ = ½·q ⊗ (ω_B, 0)
//! ω̇ = I⁻¹(τ_B − ω × Iω)
//! ```
//!
//! Body frame: x forward, y left, z up. Motors sit on the diagonals of the ×
//! frame at `(±d/√2, ±d/√2)`; each produces thrust `k_f·rpm²` along body z
//! and a reaction torque `k_m·rpm²` about z, signed by its spin direction:
//!
//! | motor | position    | spin | roll τx | pitch τy | yaw τz |
//! |-------|-------------|------|---------|----------|--------|
//! | 0     | front-left  | CCW  | +       | −        | −      |
//! | 1     | rear-left   | CW   | +       | +        | +      |
//! | 2     | rear-right  | CCW  | −       | +        | −      |
//! | 3     | front-right | CW   | −       | −        | +      |
//!
//! Roll and pitch torques use the moment arm `d/√2`; diagonal motors spin in
//! the same direction so equal speeds produce no net yaw.

use serde::{Deserialize, Serialize};

use crate::quat_math::Quaternion;
use crate::{Error, Result, Vec3};

/// Roll/pitch/yaw sign of each motor's contribution, rows indexed by motor.
pub const MIXING_SIGNS: [[f64; 3]; 4] = [
    [1.0, -1.0, -1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

/// Physical parameters. Defaults are the Crazyflie 2.1 values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadrotorParams {
    /// kg
    pub mass: f64,
    /// m, hub to rotor axis
    pub arm_length: f64,
    /// N per RPM²
    pub thrust_coefficient: f64,
    /// N·m per RPM²
    pub moment_coefficient: f64,
    /// m; informational, not used by the rigid-body model
    pub propeller_radius: f64,
    /// Diagonal of the body inertia matrix, kg·m²
    pub inertia: [f64; 3],
    /// Diagonal of the inertial-frame linear drag matrix, N·s/m
    pub drag: [f64; 3],
    /// m/s²
    pub gravity: f64,
    pub max_rpm: f64,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            mass: 0.033,
            arm_length: 39.73e-3,
            thrust_coefficient: 3.16e-10,
            moment_coefficient: 7.49e-12,
            propeller_radius: 23.1348e-3,
            inertia: [1.395e-5, 1.436e-5, 2.173e-5],
            drag: [0.0; 3],
            gravity: 9.81,
            max_rpm: 24_000.0,
        }
    }
}

impl QuadrotorParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("arm_length", self.arm_length),
            ("thrust_coefficient", self.thrust_coefficient),
            ("moment_coefficient", self.moment_coefficient),
            ("gravity", self.gravity),
            ("max_rpm", self.max_rpm),
            ("inertia[0]", self.inertia[0]),
            ("inertia[1]", self.inertia[1]),
            ("inertia[2]", self.inertia[2]),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("quadrotor.{name}"), format!("must be finite and > 0, got {v}")));
            }
        }
        for (i, d) in self.drag.iter().enumerate() {
            if !(d.is_finite() && *d >= 0.0) {
                return Err(Error::config(format!("quadrotor.drag[{i}]"), format!("must be ≥ 0, got {d}")));
            }
        }
        if !(self.propeller_radius.is_finite() && self.propeller_radius >= 0.0) {
            return Err(Error::config("quadrotor.propeller_radius", "must be ≥ 0"));
        }
        Ok(())
    }

    /// Per-motor speed whose combined thrust balances gravity: `√(gm / 4k_f)`.
    pub fn hover_rpm(&self) -> f64 {
        (self.gravity * self.mass / (4.0 * self.thrust_coefficient)).sqrt()
    }

    fn inertia_vec(&self) -> Vec3 {
        Vec3::from(self.inertia)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrotorState {
    /// Inertial-frame position, m.
    pub position: Vec3,
    /// Body-to-inertial attitude.
    pub attitude: Quaternion,
    /// Inertial-frame velocity, m/s.
    pub velocity: Vec3,
    /// Body-frame angular velocity, rad/s.
    pub angular_velocity: Vec3,
}

impl Default for QuadrotorState {
    fn default() -> Self {
        Self::at_rest(Vec3::zeros(), Quaternion::IDENTITY)
    }
}

impl QuadrotorState {
    pub fn at_rest(position: Vec3, attitude: Quaternion) -> Self {
        Self {
            position,
            attitude,
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
            && self.attitude.is_finite()
    }

    /// Total mechanical energy: kinetic (translational and rotational) plus
    /// gravitational potential with `z = 0` as reference.
    pub fn mechanical_energy(&self, params: &QuadrotorParams) -> f64 {
        let w = self.angular_velocity;
        let inertia = params.inertia_vec();
        0.5 * params.mass * self.velocity.norm_squared()
            + params.mass * params.gravity * self.position.z
            + 0.5 * w.dot(&inertia.component_mul(&w))
    }

    fn offset(&self, d: &StateDerivative, h: f64) -> Self {
        Self {
            position: self.position + d.position * h,
            attitude: self.attitude.add(&d.attitude.scale(h)),
            velocity: self.velocity + d.velocity * h,
            angular_velocity: self.angular_velocity + d.angular_velocity * h,
        }
    }
}

/// Per-motor speeds, ordered as in [`MIXING_SIGNS`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorCommand {
    pub rpm: [f64; 4],
}

impl MotorCommand {
    pub fn uniform(rpm: f64) -> Self {
        Self { rpm: [rpm; 4] }
    }

    pub fn validate(&self, params: &QuadrotorParams) -> Result<()> {
        for (i, r) in self.rpm.iter().enumerate() {
            if !(r.is_finite() && *r >= 0.0 && *r <= params.max_rpm) {
                return Err(Error::InvalidInput(format!(
                    "motor {i} rpm {r} outside [0, {}]",
                    params.max_rpm
                )));
            }
        }
        Ok(())
    }
}

/// Time derivative of every [`QuadrotorState`] field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub attitude: Quaternion,
    pub velocity: Vec3,
    pub angular_velocity: Vec3,
}

impl StateDerivative {
    fn weighted_sum(parts: [(&StateDerivative, f64); 4]) -> Self {
        let mut out = StateDerivative {
            position: Vec3::zeros(),
            attitude: Quaternion::new(0.0, 0.0, 0.0, 0.0),
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
        };
        for (d, w) in parts {
            out.position += d.position * w;
            out.attitude = out.attitude.add(&d.attitude.scale(w));
            out.velocity += d.velocity * w;
            out.angular_velocity += d.angular_velocity * w;
        }
        out
    }
}

/// Body-frame thrust and torque produced by a motor command.
pub fn motor_forces(cmd: &MotorCommand, params: &QuadrotorParams) -> Result<(Vec3, Vec3)> {
    cmd.validate(params)?;
    Ok(motor_forces_unchecked(cmd, params))
}

fn motor_forces_unchecked(cmd: &MotorCommand, params: &QuadrotorParams) -> (Vec3, Vec3) {
    let arm = params.arm_length / std::f64::consts::SQRT_2;
    let mut thrust = 0.0;
    let mut torque = Vec3::zeros();
    for (rpm, signs) in cmd.rpm.iter().zip(MIXING_SIGNS.iter()) {
        let w2 = rpm * rpm;
        let f = params.thrust_coefficient * w2;
        thrust += f;
        torque.x += signs[0] * arm * f;
        torque.y += signs[1] * arm * f;
        torque.z += signs[2] * params.moment_coefficient * w2;
    }
    (Vec3::new(0.0, 0.0, thrust), torque)
}

/// Evaluates the rigid-body equations of motion.
pub fn state_derivative(
    state: &QuadrotorState,
    thrust: &Vec3,
    torque: &Vec3,
    params: &QuadrotorParams,
) -> StateDerivative {
    let m = params.mass;
    let drag = Vec3::from(params.drag);
    let accel = state.attitude.rotate_unchecked(thrust) / m
        - Vec3::new(0.0, 0.0, params.gravity)
        - drag.component_mul(&state.velocity) / m;

    let w = state.angular_velocity;
    let q_dot = state.attitude.multiply(&Quaternion::from_vector(&w)).scale(0.5);

    let inertia = params.inertia_vec();
    let gyro = w.cross(&inertia.component_mul(&w));
    let w_dot = (torque - gyro).component_div(&inertia);

    StateDerivative {
        position: state.velocity,
        attitude: q_dot,
        velocity: accel,
        angular_velocity: w_dot,
    }
}

/// One classical RK4 step under constant body thrust and torque, followed by
/// attitude renormalization.
pub fn integrate_rk4(
    state: &QuadrotorState,
    thrust: &Vec3,
    torque: &Vec3,
    params: &QuadrotorParams,
    dt: f64,
) -> Result<QuadrotorState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    let f = |s: &QuadrotorState| state_derivative(s, thrust, torque, params);
    let k1 = f(state);
    let k2 = f(&state.offset(&k1, 0.5 * dt));
    let k3 = f(&state.offset(&k2, 0.5 * dt));
    let k4 = f(&state.offset(&k3, dt));
    let slope = StateDerivative::weighted_sum([(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)]);
    let mut next = state.offset(&slope, dt / 6.0);
    next.attitude = next.attitude.normalized();
    if !next.is_finite() {
        return Err(Error::NumericalDivergence {
            reason: "non-finite state after RK4 step".into(),
            state: Some(Box::new(next)),
        });
    }
    Ok(next)
}

/// Advances `state` by `dt` seconds holding `cmd` constant.
pub fn step(
    state: &QuadrotorState,
    cmd: &MotorCommand,
    params: &QuadrotorParams,
    dt: f64,
) -> Result<QuadrotorState> {
    let (thrust, torque) = motor_forces(cmd, params)?;
    integrate_rk4(state, &thrust, &torque, params, dt)
}
