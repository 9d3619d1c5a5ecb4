use lyapgdm_core::diffusion::{forward_noise, sample_action, ChainNoise, DiffusionPolicy, NoiseSchedule};
use lyapgdm_core::nn::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn forward_noise_moments() {
    let schedule = NoiseSchedule::new(5, 0.1, 10.0).unwrap();
    let x0 = [1.5, -0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let draws = 100_000;
    for k in 1..=5 {
        let ab = schedule.alpha_bar(k);
        let (mut sum, mut sum_sq) = ([0.0; 2], [0.0; 2]);
        for _ in 0..draws {
            let eps: Vec<f64> = (0..2).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x = forward_noise(&x0, k, &schedule, &eps).unwrap();
            for i in 0..2 {
                sum[i] += x[i];
                sum_sq[i] += x[i] * x[i];
            }
        }
        for i in 0..2 {
            let mean = sum[i] / draws as f64;
            let var = sum_sq[i] / draws as f64 - mean * mean;
            let want_mean = ab.sqrt() * x0[i];
            let want_var = 1.0 - ab;
            let se_mean = (want_var / draws as f64).sqrt();
            // a Gaussian's sample variance has standard error σ²·√(2/n)
            let se_var = want_var * (2.0 / draws as f64).sqrt();
            assert!((mean - want_mean).abs() < 3.0 * se_mean, "k={k}: mean {mean} vs {want_mean}");
            assert!((var - want_var).abs() < 3.0 * se_var, "k={k}: var {var} vs {want_var}");
        }
    }
}

fn policy() -> DiffusionPolicy {
    let schedule = NoiseSchedule::new(5, 0.1, 10.0).unwrap();
    DiffusionPolicy::new(5, 8, &[32, 32], 16, schedule).unwrap()
}

#[test]
fn default_schedule_ends_near_noise() {
    assert!(NoiseSchedule::new(5, 0.1, 10.0).unwrap().alpha_bar(5) < 0.05);
}

#[test]
fn samples_are_spread_out() {
    let policy = policy();
    let params = policy.init_params(3);
    let obs = [0.1, -0.2, 0.3, 0.0, 0.5, -0.5, 0.2, 0.9];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let samples: Vec<Vec<f64>> = (0..1000)
        .map(|_| sample_action(&obs, &policy, &params, &mut rng, false).unwrap().0)
        .collect();
    for d in 0..5 {
        let mean = samples.iter().map(|s| s[d]).sum::<f64>() / 1000.0;
        let var = samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / 999.0;
        assert!(var.sqrt() > 1e-3, "coordinate {d} has std {}", var.sqrt());
    }
}

#[test]
fn recorded_samples_replay_exactly() {
    let policy = policy().with_clip(Some(3.0)).unwrap();
    let params = policy.init_params(9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let obs = [0.3; 8];
        let (x0, trace) = sample_action(&obs, &policy, &params, &mut rng, true).unwrap();
        let trace = trace.unwrap();
        assert_eq!(policy.replay(&params, &trace).unwrap().into_vec(), x0);
        assert!(x0.iter().all(|v| v.abs() <= 3.0 + 1e-12));
    }
}

#[test]
fn noise_off_is_deterministic_given_the_start() {
    let policy = policy();
    let params = policy.init_params(1);
    let obs = Matrix::from_vec(1, 8, vec![0.2; 8]).unwrap();
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, trace) = policy.sample_batch(&params, &obs, &mut rng, ChainNoise::Off, true).unwrap();
        let trace = trace.unwrap();
        assert!(trace.noises.iter().all(|z| z.data().iter().all(|&v| v == 0.0)));
        x
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}
