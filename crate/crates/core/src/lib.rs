//! UAV trajectory and bandwidth control under a long-term propulsion-energy
//! constraint, solved by drift-plus-penalty reinforcement learning with a
//! denoising-diffusion actor.
//!
//! Module map:
//! - [`lyapunov`]: virtual queues, Lyapunov function, drift-plus-penalty.
//! - [`env`]: the data-collection environment and its reward.
//! - [`nn`]: dense networks, reverse-mode gradients, Adam, parameter blobs.
//! - [`diffusion`]: noise schedule and the reverse-chain actor.
//! - [`trainer`]: replay buffer and the DDPG-style training loop.
//! - [`baselines`]: myopic grid solver, static and random policies.
//! - [`policy`]: a common interface for evaluation rollouts.

pub mod baselines;
pub mod diffusion;
pub mod env;
pub mod error;
pub mod geometry;
pub mod lyapunov;
pub mod nn;
pub mod policy;
pub mod trainer;

pub use error::{Error, Result};
pub use geometry::Vec2;
