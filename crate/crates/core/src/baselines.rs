//! Comparison policies: a myopic per-slot grid solver, a straight-line
//! cruise policy, uniform random raw actions and the plain MLP actor used
//! by the conventional DDPG agent.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::{Action, Env, EnvConfig, EnvState};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::nn::{self, MlpSpec, ParamTensor};

/// Cruise speed of the static policy: close to the minimum-power speed of
/// the propulsion model.
pub const STATIC_CRUISE_SPEED: f64 = 10.0;

/// Finite action set searched by [`myopic_grid_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    actions: Vec<Action>,
}

impl ActionGrid {
    /// Cartesian product of headings (unit vectors) × speeds × splits.
    /// Every zero speed collapses to a single hover point. Velocities vary
    /// slowest, so lower indices favor lower speeds.
    pub fn new(headings: &[Vec2], speeds: &[f64], splits: &[Vec<f64>], cfg: &EnvConfig) -> Result<Self> {
        let mut velocities = Vec::new();
        let mut hover_added = false;
        for &s in speeds {
            if !(s.is_finite() && s >= 0.0 && s <= cfg.v_max) {
                return Err(Error::config("grid.speeds", format!("speed {s} outside [0, {}]", cfg.v_max)));
            }
            if s == 0.0 {
                if !hover_added {
                    velocities.push(Vec2::ZERO);
                    hover_added = true;
                }
                continue;
            }
            for h in headings {
                velocities.push(h.unit() * s);
            }
        }
        let mut actions = Vec::with_capacity(velocities.len() * splits.len());
        for &velocity in &velocities {
            for split in splits {
                let a = Action {
                    velocity,
                    bandwidth_ratios: split.clone(),
                };
                if !a.is_feasible(cfg) {
                    return Err(Error::config("grid.splits", format!("infeasible split {split:?}")));
                }
                actions.push(a);
            }
        }
        if actions.is_empty() {
            return Err(Error::config("grid", "action grid is empty"));
        }
        Ok(Self { actions })
    }

    /// Eight compass headings × {0, 10, 20, 25} m/s × bandwidth splits on
    /// the simplex lattice of [`split_lattice`] plus the uniform split.
    pub fn default_for(cfg: &EnvConfig) -> Result<Self> {
        let headings: Vec<Vec2> = (0..8)
            .map(|i| {
                let a = i as f64 * std::f64::consts::FRAC_PI_4;
                Vec2::new(a.cos(), a.sin())
            })
            .collect();
        let speeds: Vec<f64> = [0.0, 10.0, 20.0, 25.0]
            .into_iter()
            .filter(|&s| s <= cfg.v_max)
            .collect();
        let n = cfg.num_devices();
        let mut splits = split_lattice(n, MAX_SPLITS);
        let uniform = vec![1.0 / n as f64; n];
        if !splits.contains(&uniform) {
            splits.push(uniform);
        }
        Self::new(&headings, &speeds, &splits, cfg)
    }

    pub fn from_actions(actions: Vec<Action>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::config("grid", "action grid is empty"));
        }
        Ok(Self { actions })
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Upper bound on the number of lattice splits in the default grid.
pub const MAX_SPLITS: usize = 64;

/// All splits of `n` devices whose shares are multiples of `1/m`, for the
/// finest `m ≤ 4` giving at most `max` points (at least the one-hot
/// splits). The sum rate is concave in the split, so interior points
/// matter.
pub fn split_lattice(n: usize, max: usize) -> Vec<Vec<f64>> {
    fn compositions(n: usize, m: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == n {
            let used: usize = prefix.iter().sum();
            prefix.push(m - used);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        let used: usize = prefix.iter().sum();
        for k in 0..=m - used {
            prefix.push(k);
            compositions(n, m, prefix, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return Vec::new();
    }
    let mut best = Vec::new();
    for m in 1..=4 {
        let mut out = Vec::new();
        compositions(n, m, &mut Vec::with_capacity(n), &mut out);
        if m > 1 && out.len() > max {
            break;
        }
        best = out
            .into_iter()
            .map(|c| c.into_iter().map(|k| k as f64 / m as f64).collect())
            .collect();
    }
    best
}

/// The grid action minimizing this slot's realized drift-plus-penalty
/// (after the reachability clamp). Ties go to the lowest index.
pub fn myopic_grid_solve(env: &Env, state: &EnvState, grid: &ActionGrid) -> Result<Action> {
    let mut best: Option<(f64, &Action)> = None;
    for a in grid.actions() {
        let dpp = env.step_action(state, a)?.info.dpp;
        if best.is_none_or(|(b, _)| dpp < b) {
            best = Some((dpp, a));
        }
    }
    best.map(|(_, a)| a.clone())
        .ok_or_else(|| Error::config("grid", "action grid is empty"))
}

/// Straight-line cruise towards `dest` at 10 m/s with a uniform split.
/// The last hop is shortened so the UAV stops on the destination.
pub fn static_policy_action(state: &EnvState, cfg: &EnvConfig) -> Action {
    let to_dest = cfg.dest - state.position;
    let speed = STATIC_CRUISE_SPEED.min(cfg.v_max).min(to_dest.norm() / cfg.dt);
    let n = cfg.num_devices();
    Action {
        velocity: to_dest.unit() * speed,
        bandwidth_ratios: vec![1.0 / n as f64; n],
    }
}

/// I.i.d. standard-normal raw action.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Deterministic forward pass of a plain MLP actor.
pub fn mlp_actor_action(obs: &[f64], params: &ParamTensor, spec: &MlpSpec) -> Result<Vec<f64>> {
    if spec.input_dim() != obs.len() {
        return Err(Error::config(
            "trainer.actor_hidden",
            format!("actor expects {} inputs, observation has {}", spec.input_dim(), obs.len()),
        ));
    }
    Ok(nn::mlp_forward(params, spec, obs)?.0)
}
