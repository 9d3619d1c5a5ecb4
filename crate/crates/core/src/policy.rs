//! Uniform interface over learned and baseline policies for evaluation
//! rollouts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{myopic_grid_solve, random_action, static_policy_action, ActionGrid};
use crate::env::{Action, Env, EnvState, Observation, SlotInfo};
use crate::error::{Error, Result};
use crate::nn::{Matrix, ParamTensor};
use crate::trainer::{ActMode, Actor};

/// A policy either emits a raw output (squashed by the environment) or a
/// physical action directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Raw(Vec<f64>),
    Action(Action),
}

pub trait Policy {
    fn name(&self) -> &str;
    fn decide(&mut self, env: &Env, state: &EnvState, obs: &Observation) -> Result<Decision>;
}

/// Selectable evaluation policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    GdmDdpg,
    MlpDdpg,
    Myopic,
    Static,
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::GdmDdpg,
        PolicyKind::MlpDdpg,
        PolicyKind::Myopic,
        PolicyKind::Static,
        PolicyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::GdmDdpg => "gdm-ddpg",
            PolicyKind::MlpDdpg => "mlp-ddpg",
            PolicyKind::Myopic => "myopic",
            PolicyKind::Static => "static",
            PolicyKind::Random => "random",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, PolicyKind::GdmDdpg | PolicyKind::MlpDdpg)
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "experiment.agent",
                    format!("unknown agent {s:?}; expected gdm-ddpg, mlp-ddpg, myopic, static or random"),
                )
            })
    }
}

/// Trained actor acting in evaluation mode (no exploration noise).
pub struct LearnedPolicy {
    actor: Actor,
    params: ParamTensor,
    rng: ChaCha8Rng,
}

impl LearnedPolicy {
    pub fn new(actor: Actor, params: ParamTensor, seed: u64) -> Self {
        Self {
            actor,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for LearnedPolicy {
    fn name(&self) -> &str {
        self.actor.kind().name()
    }

    fn decide(&mut self, _env: &Env, _state: &EnvState, obs: &Observation) -> Result<Decision> {
        let o = Matrix::from_vec(1, obs.0.len(), obs.0.clone())?;
        let (a, _) = self.actor.act(&self.params, &o, &mut self.rng, ActMode::Eval, false)?;
        Ok(Decision::Raw(a.into_vec()))
    }
}

pub struct MyopicPolicy {
    pub grid: ActionGrid,
}

impl Policy for MyopicPolicy {
    fn name(&self) -> &str {
        "myopic"
    }

    fn decide(&mut self, env: &Env, state: &EnvState, _obs: &Observation) -> Result<Decision> {
        Ok(Decision::Action(myopic_grid_solve(env, state, &self.grid)?))
    }
}

pub struct StaticPolicy;

impl Policy for StaticPolicy {
    fn name(&self) -> &str {
        "static"
    }

    fn decide(&mut self, env: &Env, state: &EnvState, _obs: &Observation) -> Result<Decision> {
        Ok(Decision::Action(static_policy_action(state, env.config())))
    }
}

pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample_raw(&mut self, dim: usize) -> Vec<f64> {
        random_action(&mut self.rng, dim)
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&mut self, env: &Env, _state: &EnvState, _obs: &Observation) -> Result<Decision> {
        Ok(Decision::Raw(self.sample_raw(env.config().action_dim())))
    }
}

/// Plays one full episode and returns the per-slot log.
pub fn run_episode(env: &Env, policy: &mut dyn Policy) -> Result<Vec<SlotInfo>> {
    let (mut state, mut obs) = env.reset();
    let mut slots = Vec::with_capacity(env.config().horizon);
    while !state.done {
        let out = match policy.decide(env, &state, &obs)? {
            Decision::Raw(raw) => env.step(&state, &raw)?,
            Decision::Action(a) => env.step_action(&state, &a)?,
        };
        slots.push(out.info);
        state = out.state;
        obs = out.observation;
    }
    Ok(slots)
}
