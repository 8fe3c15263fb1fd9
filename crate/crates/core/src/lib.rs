//! Tunable-performance quadrotor hover control with reinforcement learning.
//!
//! The crate is organised bottom-up:
//!
//! - [`quat_math`]: quaternion algebra in `(x, y, z, w)` storage order.
//! - [`dynamics`]: rigid-body model of a Crazyflie-class quadrotor in ×
//!   configuration, integrated with fixed-step RK4.
//! - [`env`]: the hover-setpoint environment (noisy observations, RPM action
//!   mapping, dual-bandwidth exponential reward, termination/truncation).
//! - [`nn`]: small dense actor/critic networks with exact backpropagation and
//!   a tanh-squashed Gaussian policy head.
//! - [`ppo`]: rollout collection, GAE and clipped-surrogate PPO updates.
//! - [`metrics`]: step-response metrics and the randomized evaluation protocol.
//! - [`config`]: experiment configuration and the shipped policy presets.

pub mod config;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod ppo;
pub mod quat_math;

pub use error::{Error, Result};

/// Three-vector type used throughout the simulator.
pub type Vec3 = nalgebra::Vector3<f64>;
