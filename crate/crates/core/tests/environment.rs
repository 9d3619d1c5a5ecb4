use lyapgdm_core::baselines::random_action;
use lyapgdm_core::env::{propulsion_power, uplink_rates, Env, EnvConfig, SlotInfo};
use lyapgdm_core::lyapunov::virtual_queue_update;
use lyapgdm_core::Vec2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_episode(env: &Env, rng: &mut ChaCha8Rng, scale: f64) -> Vec<SlotInfo> {
    let (mut state, _) = env.reset();
    let mut slots = Vec::new();
    while !state.done {
        let raw: Vec<f64> = random_action(rng, env.config().action_dim())
            .into_iter()
            .map(|v| v * scale)
            .collect();
        let out = env.step(&state, &raw).unwrap();
        slots.push(out.info);
        state = out.state;
    }
    slots
}

#[test]
fn random_action_fuzz() {
    let env = Env::new(EnvConfig::default()).unwrap();
    let cfg = env.config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut steps = 0;
    for episode in 0..100 {
        let slots = random_episode(&env, &mut rng, 1.0 + episode as f64 * 0.05);
        assert_eq!(slots.len(), cfg.horizon);
        for s in &slots {
            assert!(cfg.contains(s.position), "left the area at {:?}", s.position);
            assert!(s.velocity.norm() <= cfg.v_max + 1e-9);
            let sum: f64 = s.bandwidth_ratios.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
            assert!(s.queue >= 0.0);
            assert!(s.reward.is_finite() && s.sum_rate_mbps >= 0.0);
        }
        let last = slots.last().unwrap();
        assert!(last.position.distance(cfg.dest) <= cfg.v_max * cfg.dt);
        steps += slots.len();
    }
    assert_eq!(steps, 10_000);
}

#[test]
fn queue_replays_through_the_update_law() {
    let env = Env::new(EnvConfig::default()).unwrap();
    let budget = env.config().energy_budget;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let slots = random_episode(&env, &mut rng, 0.5);
        let mut q = 0.0;
        for s in &slots {
            q = virtual_queue_update(q, s.energy_j, budget).unwrap();
            assert_eq!(q, s.queue);
        }
        let mean_energy = slots.iter().map(|s| s.energy_j).sum::<f64>() / slots.len() as f64;
        if mean_energy <= budget {
            assert!(slots.last().unwrap().queue <= q);
        }
    }
}

#[test]
fn trajectories_are_deterministic() {
    let env = Env::new(EnvConfig::default()).unwrap();
    let a = random_episode(&env, &mut ChaCha8Rng::seed_from_u64(3), 1.0);
    let b = random_episode(&env, &mut ChaCha8Rng::seed_from_u64(3), 1.0);
    assert_eq!(a, b);
}

#[test]
fn sum_rate_grows_with_bandwidth() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = EnvConfig::default();
    for _ in 0..200 {
        let raw = random_action(&mut rng, base.action_dim());
        let pos = Vec2::new(
            rand::Rng::random_range(&mut rng, 0.0..base.area_x),
            rand::Rng::random_range(&mut rng, 0.0..base.area_y),
        );
        let split = lyapgdm_core::env::squash_raw_action(&raw, &base).bandwidth_ratios;
        let mut prev = 0.0;
        for scale in [0.5, 1.0, 1.5, 2.0] {
            let cfg = EnvConfig {
                bandwidth: scale * 1e6,
                ..base.clone()
            };
            let total: f64 = uplink_rates(pos, &cfg, &split).iter().sum();
            assert!(total >= prev, "sum rate fell from {prev} to {total}");
            prev = total;
        }
    }
}

/// Shannon rate of a single device holding the whole band, written out
/// from first principles.
fn single_device_rate(d2: f64, cfg: &EnvConfig) -> f64 {
    let gain = cfg.beta0 / (d2 + cfg.altitude * cfg.altitude);
    let snr = cfg.tx_power * gain / (cfg.bandwidth * cfg.noise_psd);
    cfg.bandwidth * (1.0 + snr).log2()
}

proptest! {
    #[test]
    fn rate_matches_closed_form(x in 0.0..600.0f64, y in 0.0..450.0f64, dev in 0usize..3) {
        let cfg = EnvConfig::default();
        let mut split = vec![0.0; 3];
        split[dev] = 1.0;
        let rates = uplink_rates(Vec2::new(x, y), &cfg, &split);
        let expect = single_device_rate((Vec2::new(x, y) - cfg.devices[dev]).norm_sq(), &cfg);
        prop_assert!((rates[dev] - expect).abs() <= 1e-9 * expect);
        prop_assert_eq!(rates.iter().filter(|&&r| r > 0.0).count(), 1);
    }

    #[test]
    fn propulsion_is_positive_and_finite(v in 0.0..40.0f64) {
        let p = propulsion_power(v).unwrap();
        prop_assert!(p.is_finite() && p > 0.0);
    }
}
