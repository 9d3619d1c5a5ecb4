use lyapgdm_core::baselines::{myopic_grid_solve, random_action, static_policy_action, ActionGrid};
use lyapgdm_core::env::{propulsion_power, squash_raw_action, Action, Env, EnvConfig, EnvState};
use lyapgdm_core::lyapunov::VirtualQueueBank;
use lyapgdm_core::policy::{run_episode, StaticPolicy};
use lyapgdm_core::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(cfg: &EnvConfig, rng: &mut ChaCha8Rng) -> EnvState {
    EnvState {
        position: Vec2::new(rng.random_range(0.0..cfg.area_x), rng.random_range(0.0..cfg.area_y)),
        t: rng.random_range(0..cfg.horizon),
        queue: VirtualQueueBank::with_queues(vec![rng.random_range(0.0..5.0)], vec![cfg.energy_budget]).unwrap(),
        done: false,
    }
}

/// Drift-plus-penalty of one slot computed from scratch, including the
/// forced flight towards the destination when it would become unreachable.
fn slot_dpp(cfg: &EnvConfig, state: &EnvState, action: &Action) -> f64 {
    let remaining = (cfg.horizon - state.t - 1) as f64 * cfg.v_max * cfg.dt;
    let clip = |p: Vec2| Vec2::new(p.x.clamp(0.0, cfg.area_x), p.y.clamp(0.0, cfg.area_y));
    let mut v = action.velocity;
    if clip(state.position + v * cfg.dt).distance(cfg.dest) > remaining {
        let to = cfg.dest - state.position;
        let d = to.norm();
        v = if d > 0.0 { to * (cfg.v_max.min(d / cfg.dt) / d) } else { Vec2::ZERO };
    }
    let pos = clip(state.position + v * cfg.dt);
    let mut sum_rate = 0.0;
    for (dev, &b) in cfg.devices.iter().zip(&action.bandwidth_ratios) {
        if b > 0.0 {
            let gain = cfg.beta0 / ((pos - *dev).norm_sq() + cfg.altitude.powi(2));
            let w = b * cfg.bandwidth;
            sum_rate += w * (1.0 + cfg.tx_power * gain / (w * cfg.noise_psd)).log2() / 1e6;
        }
    }
    let energy = propulsion_power(v.norm()).unwrap() * cfg.dt;
    let q = state.queue.queues()[0];
    let q_next = (q + (energy - cfg.energy_budget) / cfg.energy_budget).max(0.0);
    0.5 * (q_next * q_next - q * q) - cfg.v_weight * sum_rate
}

#[test]
fn solver_agrees_with_enumeration() {
    let env = Env::new(EnvConfig::default()).unwrap();
    let cfg = env.config();
    let grid = ActionGrid::default_for(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let state = random_state(cfg, &mut rng);
        let scores: Vec<f64> = grid.actions().iter().map(|a| slot_dpp(cfg, &state, a)).collect();
        let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let chosen = myopic_grid_solve(&env, &state, &grid).unwrap();
        let idx = grid.actions().iter().position(|a| *a == chosen).unwrap();
        assert!(
            (scores[idx] - best).abs() <= 1e-9 * best.abs().max(1.0),
            "solver picked {} at {:?}, enumeration best {best}",
            scores[idx],
            state.position
        );
    }
}

#[test]
fn solver_dominates_random_actions() {
    let env = Env::new(EnvConfig::default()).unwrap();
    let cfg = env.config();
    let grid = ActionGrid::default_for(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let trials = 1000;
    let mut wins = 0;
    for _ in 0..trials {
        let state = random_state(cfg, &mut rng);
        let greedy = myopic_grid_solve(&env, &state, &grid).unwrap();
        let random = squash_raw_action(&random_action(&mut rng, cfg.action_dim()), cfg);
        let g = env.step_action(&state, &greedy).unwrap().info.dpp;
        let r = env.step_action(&state, &random).unwrap().info.dpp;
        if g <= r {
            wins += 1;
        }
    }
    assert!(wins * 100 >= trials * 95, "greedy won only {wins}/{trials}");
}

#[test]
fn static_cruise_stays_within_budget() {
    let env = Env::new(EnvConfig::default()).unwrap();
    let cfg = env.config();
    let slots = run_episode(&env, &mut StaticPolicy).unwrap();
    let cruise = propulsion_power(10.0).unwrap();
    assert!(cruise <= cfg.energy_budget);
    for s in slots.iter().filter(|s| (s.velocity.norm() - 10.0).abs() < 1e-9) {
        assert!(s.energy_j <= cfg.energy_budget);
    }
    assert!(slots.last().unwrap().position.distance(cfg.dest) < 1e-9);
    let first = static_policy_action(&env.reset().0, cfg);
    assert!((first.velocity.norm() - 10.0).abs() < 1e-12);
}

