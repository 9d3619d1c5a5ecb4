use lyapgdm_core::lyapunov::{
    drift_plus_penalty, lyapunov_drift, lyapunov_value, reward_from_dpp, virtual_queue_update, DppWeights,
    VirtualQueueBank,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn randomized_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..1_000_000 {
        let q = rng.random_range(0.0..20.0);
        let budget = rng.random_range(1.0..500.0);
        let consumed = rng.random_range(0.0..3.0 * budget);
        let q2 = virtual_queue_update(q, consumed, budget).unwrap();
        assert!(q2 >= 0.0);
        assert_eq!(q2, (q + (consumed - budget) / budget).max(0.0));

        let now = VirtualQueueBank::with_queues(vec![q], vec![budget]).unwrap();
        let next = now.update(&[consumed]).unwrap();
        let (l0, l1) = (lyapunov_value(&now), lyapunov_value(&next));
        assert!(l0 >= 0.0 && l1 >= 0.0);
        // rounding in (L' − L) + L scales with the larger operand
        let scale = l0.max(l1).max(f64::MIN_POSITIVE);
        assert!((lyapunov_drift(l1, l0) + l0 - l1).abs() <= 1e-12 * scale);

        let d = rng.random_range(-100.0..100.0);
        let p = rng.random_range(-100.0..100.0);
        let v = rng.random_range(0.0..5.0);
        let w = DppWeights::new(v).unwrap();
        assert_eq!(drift_plus_penalty(d, p, DppWeights::new(0.0).unwrap()), d);
        assert_eq!(drift_plus_penalty(d, 0.0, w), d);
        let scale = d.abs().max((v * p).abs()).max(f64::MIN_POSITIVE);
        assert!((drift_plus_penalty(d, p, w) - (d + v * p)).abs() <= 1e-12 * scale);
        let dpp = drift_plus_penalty(d, p, w);
        assert_eq!(reward_from_dpp(reward_from_dpp(dpp)), dpp);
    }
}

#[test]
fn value_grows_with_any_single_queue() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..10_000 {
        let n = rng.random_range(1..6);
        let qs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let i = rng.random_range(0..n);
        let mut bumped = qs.clone();
        bumped[i] += rng.random_range(1e-6..1.0);
        let budgets = vec![100.0; n];
        let a = lyapunov_value(&VirtualQueueBank::with_queues(qs, budgets.clone()).unwrap());
        let b = lyapunov_value(&VirtualQueueBank::with_queues(bumped, budgets).unwrap());
        assert!(b > a);
    }
}
