//! Conditional denoising-diffusion actor.
//!
//! Actions are generated by running the reverse chain `x_K → x_0` with a
//! noise-predicting denoiser conditioned on the observation and a
//! sinusoidal encoding of the step index. The chain is trained only through
//! the critic: the injected noises are recorded and held constant, so the
//! gradient of the critic with respect to `x_0` can be pushed back through
//! every denoising step into the denoiser parameters.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::nn::{self, Activation, Matrix, MlpSpec, ParamTensor, Tape};

/// Variance schedule of a K-step chain. Step indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
    posterior_vars: Vec<f64>,
}

impl NoiseSchedule {
    /// Variance-preserving discretization
    /// `β_k = 1 − exp(−β_min/K − (β_max−β_min)(2k−1)/(2K²))`.
    pub fn new(steps: usize, beta_min: f64, beta_max: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::config("diffusion.steps", "must be at least 1"));
        }
        if !(beta_min.is_finite() && beta_min > 0.0) {
            return Err(Error::config("diffusion.beta_min", format!("must be positive, got {beta_min}")));
        }
        if !(beta_max.is_finite() && beta_max > beta_min) {
            return Err(Error::config(
                "diffusion.beta_max",
                format!("must exceed beta_min ({beta_min}), got {beta_max}"),
            ));
        }
        let kf = steps as f64;
        let betas: Vec<f64> = (1..=steps)
            .map(|k| {
                let exponent = beta_min / kf + (beta_max - beta_min) * (2.0 * k as f64 - 1.0) / (2.0 * kf * kf);
                -(-exponent).exp_m1()
            })
            .collect();
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(steps);
        let mut running = 1.0;
        for a in &alphas {
            running *= a;
            alpha_bars.push(running);
        }
        let posterior_vars = (0..steps)
            .map(|i| {
                let prev = if i == 0 { 1.0 } else { alpha_bars[i - 1] };
                betas[i] * (1.0 - prev) / (1.0 - alpha_bars[i])
            })
            .collect();
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
            posterior_vars,
        })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.betas[k - 1]
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alphas[k - 1]
    }

    pub fn alpha_bar(&self, k: usize) -> f64 {
        self.alpha_bars[k - 1]
    }

    /// `β̃_k = β_k (1 − ᾱ_{k−1}) / (1 − ᾱ_k)` with `ᾱ_0 = 1`.
    pub fn posterior_var(&self, k: usize) -> f64 {
        self.posterior_vars[k - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    /// `(1/√α_k, β_k/√(1−ᾱ_k))`, the two coefficients of the mean update.
    fn mean_coefficients(&self, k: usize) -> (f64, f64) {
        (
            1.0 / self.alpha(k).sqrt(),
            self.beta(k) / (1.0 - self.alpha_bar(k)).sqrt(),
        )
    }

    /// Constants of the clipped update at step `k`:
    /// `(√ᾱ_k, √(1−ᾱ_k), a_k, b_k)` with
    /// `x_{k−1} = a_k·clip(x̂_0) + b_k·x_k + σ_k z_k` and
    /// `x̂_0 = (x_k − √(1−ᾱ_k) ε̂)/√ᾱ_k`.
    fn posterior_coefficients(&self, k: usize) -> (f64, f64, f64, f64) {
        let ab = self.alpha_bar(k);
        let ab_prev = if k == 1 { 1.0 } else { self.alpha_bar(k - 1) };
        (
            ab.sqrt(),
            (1.0 - ab).sqrt(),
            self.beta(k) * ab_prev.sqrt() / (1.0 - ab),
            (1.0 - ab_prev) * self.alpha(k).sqrt() / (1.0 - ab),
        )
    }
}

/// Sinusoidal step encoding: `pe[2i] = sin(k/10000^{2i/dim})`,
/// `pe[2i+1] = cos(k/10000^{2i/dim})`.
pub fn timestep_embedding(k: usize, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::config("diffusion.embed_dim", format!("must be a positive even number, got {dim}")));
    }
    let mut pe = Vec::with_capacity(dim);
    for i in 0..dim / 2 {
        let angle = k as f64 / 10000f64.powf(2.0 * i as f64 / dim as f64);
        pe.push(angle.sin());
        pe.push(angle.cos());
    }
    Ok(pe)
}

/// Closed-form forward marginal `x_k = √ᾱ_k x_0 + √(1−ᾱ_k) ε`.
pub fn forward_noise(x0: &[f64], k: usize, schedule: &NoiseSchedule, eps: &[f64]) -> Result<Vec<f64>> {
    if k == 0 || k > schedule.steps() {
        return Err(Error::Usage(format!("step {k} outside 1..={}", schedule.steps())));
    }
    if x0.len() != eps.len() {
        return Err(Error::Usage("x0 and noise lengths differ".into()));
    }
    let ab = schedule.alpha_bar(k);
    let (s, n) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| s * x + n * e).collect())
}

/// Recorded reverse chain for a batch of samples.
#[derive(Debug, Clone)]
pub struct SampleTrace {
    /// `states[k]` holds `x_k` for `k = 0..=K`.
    pub states: Vec<Matrix>,
    /// `noises[k-1]` holds the injected `z_k`; `z_1` is always zero.
    pub noises: Vec<Matrix>,
    /// `eps_hat[k-1]` holds the denoiser prediction at step `k`.
    pub eps_hat: Vec<Matrix>,
    pub observations: Matrix,
    tapes: Vec<Tape>,
}

impl SampleTrace {
    pub fn steps(&self) -> usize {
        self.noises.len()
    }

    pub fn action(&self) -> &Matrix {
        &self.states[0]
    }
}

/// Whether the chain injects posterior noise at intermediate steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainNoise {
    On,
    Off,
}

/// Architecture of a diffusion actor: the denoiser network layout, its
/// schedule and the step encodings. Parameters are held separately so
/// online and target copies share one policy description.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionPolicy {
    spec: MlpSpec,
    schedule: NoiseSchedule,
    action_dim: usize,
    obs_dim: usize,
    embeddings: Vec<Vec<f64>>,
    clip: Option<f64>,
}

impl DiffusionPolicy {
    /// Denoiser input is `[x_k, obs, emb(k)]`, output is the noise estimate.
    pub fn new(
        action_dim: usize,
        obs_dim: usize,
        hidden: &[usize],
        embed_dim: usize,
        schedule: NoiseSchedule,
    ) -> Result<Self> {
        let mut widths = vec![action_dim + obs_dim + embed_dim];
        widths.extend_from_slice(hidden);
        widths.push(action_dim);
        let spec = MlpSpec::new(widths, Activation::Silu, Activation::Identity)?;
        Self::with_spec(spec, action_dim, obs_dim, embed_dim, schedule)
    }

    /// Wraps an existing denoiser spec, checking its input width.
    pub fn with_spec(
        spec: MlpSpec,
        action_dim: usize,
        obs_dim: usize,
        embed_dim: usize,
        schedule: NoiseSchedule,
    ) -> Result<Self> {
        if spec.input_dim() != action_dim + obs_dim + embed_dim || spec.output_dim() != action_dim {
            return Err(Error::config(
                "diffusion.denoiser",
                format!(
                    "denoiser maps {} → {}, expected {} → {action_dim}",
                    spec.input_dim(),
                    spec.output_dim(),
                    action_dim + obs_dim + embed_dim
                ),
            ));
        }
        let embeddings = (1..=schedule.steps())
            .map(|k| timestep_embedding(k, embed_dim))
            .collect::<Result<_>>()?;
        Ok(Self {
            spec,
            schedule,
            action_dim,
            obs_dim,
            embeddings,
            clip: None,
        })
    }

    /// Clips the predicted clean action `x̂_0` to `[−bound, bound]` at every
    /// reverse step, which also bounds the final `x_0`. Without clipping
    /// the two update forms coincide.
    pub fn with_clip(mut self, bound: Option<f64>) -> Result<Self> {
        if let Some(b) = bound {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::config("trainer.action_bound", format!("must be positive, got {b}")));
            }
        }
        self.clip = bound;
        Ok(self)
    }

    pub fn clip(&self) -> Option<f64> {
        self.clip
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn init_params(&self, seed: u64) -> ParamTensor {
        nn::mlp_init(&self.spec, seed)
    }

    /// Draws `x_K` and the intermediate noises, then runs the chain.
    pub fn sample_batch<R: Rng + ?Sized>(
        &self,
        params: &ParamTensor,
        obs: &Matrix,
        rng: &mut R,
        noise: ChainNoise,
        record: bool,
    ) -> Result<(Matrix, Option<SampleTrace>)> {
        let batch = obs.rows();
        let k_steps = self.schedule.steps();
        let draw = |rng: &mut R| {
            let data = (0..batch * self.action_dim).map(|_| rng.sample(StandardNormal)).collect();
            Matrix::from_vec(batch, self.action_dim, data).expect("sized")
        };
        let x_k = draw(rng);
        let mut noises = vec![Matrix::zeros(batch, self.action_dim); k_steps];
        if noise == ChainNoise::On {
            for k in (2..=k_steps).rev() {
                noises[k - 1] = draw(rng);
            }
        }
        self.run_chain(params, obs, x_k, noises, record)
    }

    /// Deterministic reverse chain from explicit `x_K` and noises
    /// (`noises[k-1] = z_k`).
    pub fn run_chain(
        &self,
        params: &ParamTensor,
        obs: &Matrix,
        x_k: Matrix,
        noises: Vec<Matrix>,
        record: bool,
    ) -> Result<(Matrix, Option<SampleTrace>)> {
        let batch = obs.rows();
        let k_steps = self.schedule.steps();
        if obs.cols() != self.obs_dim {
            return Err(Error::config(
                "diffusion.denoiser",
                format!("observation width {} does not match {}", obs.cols(), self.obs_dim),
            ));
        }
        if x_k.rows() != batch || x_k.cols() != self.action_dim || noises.len() != k_steps {
            return Err(Error::Usage("chain noise does not match the batch".into()));
        }
        let mut states = Vec::with_capacity(if record { k_steps + 1 } else { 0 });
        let mut eps_hats = Vec::new();
        let mut tapes = Vec::new();
        let mut x = x_k;
        for k in (1..=k_steps).rev() {
            let input = self.denoiser_input(&x, obs, k);
            let (eps_hat, tape) = nn::forward_batch(params, &self.spec, &input)?;
            let sigma = if k > 1 { self.schedule.posterior_var(k).sqrt() } else { 0.0 };
            let z = &noises[k - 1];
            let mut next = Matrix::zeros(batch, self.action_dim);
            let lanes = next.data_mut().iter_mut().zip(x.data()).zip(eps_hat.data()).zip(z.data());
            match self.clip {
                None => {
                    let (c1, c2) = self.schedule.mean_coefficients(k);
                    for (((n, &xv), &e), &zv) in lanes {
                        *n = c1 * (xv - c2 * e) + sigma * zv;
                    }
                }
                Some(bound) => {
                    let (s0, s1, a, b) = self.schedule.posterior_coefficients(k);
                    for (((n, &xv), &e), &zv) in lanes {
                        let x0 = ((xv - s1 * e) / s0).clamp(-bound, bound);
                        *n = a * x0 + b * xv + sigma * zv;
                    }
                }
            }
            if record {
                states.push(x);
                eps_hats.push(eps_hat);
                tapes.push(tape);
            }
            x = next;
        }
        if !record {
            return Ok((x, None));
        }
        states.push(x.clone());
        // collected from x_K down to x_0; store by step index
        states.reverse();
        eps_hats.reverse();
        tapes.reverse();
        let trace = SampleTrace {
            states,
            noises,
            eps_hat: eps_hats,
            observations: obs.clone(),
            tapes,
        };
        Ok((x, Some(trace)))
    }

    /// Re-runs a recorded chain; the result is bit-identical to the
    /// recorded `x_0` when the parameters are unchanged.
    pub fn replay(&self, params: &ParamTensor, trace: &SampleTrace) -> Result<Matrix> {
        let x_k = trace.states.last().cloned().ok_or_else(|| Error::Usage("empty trace".into()))?;
        Ok(self
            .run_chain(params, &trace.observations, x_k, trace.noises.clone(), false)?
            .0)
    }

    fn denoiser_input(&self, x: &Matrix, obs: &Matrix, k: usize) -> Matrix {
        let emb = &self.embeddings[k - 1];
        let width = self.spec.input_dim();
        let mut data = Vec::with_capacity(x.rows() * width);
        for r in 0..x.rows() {
            data.extend_from_slice(x.row(r));
            data.extend_from_slice(obs.row(r));
            data.extend_from_slice(emb);
        }
        Matrix::from_vec(x.rows(), width, data).expect("sized")
    }

    /// Pushes `dL/dx_0` back through all K steps, accumulating denoiser
    /// parameter gradients. Returns `dL/dx_K`.
    pub fn backprop_through_chain(
        &self,
        params: &mut ParamTensor,
        trace: &SampleTrace,
        d_x0: &Matrix,
    ) -> Result<Matrix> {
        let k_steps = self.schedule.steps();
        if trace.steps() != k_steps || trace.tapes.len() != k_steps {
            return Err(Error::Usage(format!(
                "trace has {} steps, schedule has {k_steps}",
                trace.steps()
            )));
        }
        if d_x0.rows() != trace.action().rows() || d_x0.cols() != self.action_dim {
            return Err(Error::Usage("gradient shape does not match the trace".into()));
        }
        let mut g = d_x0.clone();
        for k in 1..=k_steps {
            // direct path x_k → x_{k−1}, and dL/dε̂_k
            let (direct, d_eps) = match self.clip {
                None => {
                    let (c1, c2) = self.schedule.mean_coefficients(k);
                    let mut d_eps = g.clone();
                    d_eps.data_mut().iter_mut().for_each(|v| *v *= -c1 * c2);
                    let mut direct = g;
                    direct.data_mut().iter_mut().for_each(|v| *v *= c1);
                    (direct, d_eps)
                }
                Some(bound) => {
                    let (s0, s1, a, b) = self.schedule.posterior_coefficients(k);
                    let mut d_eps = g.clone();
                    let mut direct = g;
                    let lanes = direct
                        .data_mut()
                        .iter_mut()
                        .zip(d_eps.data_mut())
                        .zip(trace.states[k].data())
                        .zip(trace.eps_hat[k - 1].data());
                    for (((dv, ev), &xv), &e) in lanes {
                        let x0 = (xv - s1 * e) / s0;
                        let d_x0 = if x0.abs() <= bound { a * *dv } else { 0.0 };
                        *ev = -s1 / s0 * d_x0;
                        *dv = b * *dv + d_x0 / s0;
                    }
                    (direct, d_eps)
                }
            };
            let d_input = nn::backward_batch(params, &self.spec, &trace.tapes[k - 1], &d_eps)?;
            g = direct;
            for r in 0..g.rows() {
                let through_net = &d_input.row(r)[..self.action_dim];
                for (gv, &dv) in g.row_mut(r).iter_mut().zip(through_net) {
                    *gv += dv;
                }
            }
        }
        Ok(g)
    }
}

/// Single-observation convenience wrapper around
/// [`DiffusionPolicy::sample_batch`].
pub fn sample_action<R: Rng + ?Sized>(
    obs: &[f64],
    policy: &DiffusionPolicy,
    params: &ParamTensor,
    rng: &mut R,
    record: bool,
) -> Result<(Vec<f64>, Option<SampleTrace>)> {
    let obs = Matrix::from_vec(1, obs.len(), obs.to_vec())?;
    let (x0, trace) = policy.sample_batch(params, &obs, rng, ChainNoise::On, record)?;
    Ok((x0.into_vec(), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule_examples() {
        let s = NoiseSchedule::new(5, 0.1, 10.0).unwrap();
        assert!((s.beta(1) - (1.0 - (-0.218f64).exp())).abs() < 1e-15);
        assert!((s.beta(1) - 0.1959).abs() < 1e-4);
        assert!((s.beta(5) - (1.0 - (-1.802f64).exp())).abs() < 1e-15);
        assert!((s.beta(5) - 0.8350).abs() < 1e-4);
        assert_eq!(s.alpha_bar(1), 1.0 - s.beta(1));
        assert_eq!(s.posterior_var(1), 0.0);
        assert!(s.alpha_bar(5) < 0.05);
        for k in 2..=5 {
            assert!(s.beta(k) > s.beta(k - 1));
            assert!(s.alpha_bar(k) < s.alpha_bar(k - 1));
            assert!(s.posterior_var(k) > 0.0 && s.posterior_var(k) < s.beta(k));
        }
        assert!(NoiseSchedule::new(0, 0.1, 10.0).is_err());
        assert!(NoiseSchedule::new(5, 0.0, 10.0).is_err());
        assert!(NoiseSchedule::new(5, 2.0, 1.0).is_err());
    }

    #[test]
    fn embedding_examples() {
        let e0 = timestep_embedding(0, 16).unwrap();
        for (i, v) in e0.iter().enumerate() {
            assert_eq!(*v, if i % 2 == 0 { 0.0 } else { 1.0 });
        }
        assert!((timestep_embedding(1, 16).unwrap()[0] - 0.8415).abs() < 1e-4);
        let all: Vec<_> = (0..=5).map(|k| timestep_embedding(k, 16).unwrap()).collect();
        for i in 0..all.len() {
            assert!(all[i].iter().all(|v| v.abs() <= 1.0));
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
        assert!(timestep_embedding(1, 7).is_err());
    }

    #[test]
    fn forward_noise_examples() {
        let s = NoiseSchedule::new(5, 0.1, 10.0).unwrap();
        let x0 = [1.0, -2.0];
        let out = forward_noise(&x0, 3, &s, &[0.0, 0.0]).unwrap();
        assert_eq!(out, vec![s.alpha_bar(3).sqrt(), -2.0 * s.alpha_bar(3).sqrt()]);
        let out = forward_noise(&[0.0, 0.0], 2, &s, &[0.5, 1.0]).unwrap();
        let n = (1.0 - s.alpha_bar(2)).sqrt();
        assert_eq!(out, vec![0.5 * n, n]);
        assert!(forward_noise(&x0, 0, &s, &[0.0, 0.0]).is_err());
        assert!(forward_noise(&x0, 6, &s, &[0.0, 0.0]).is_err());
    }

    fn small_policy(k: usize) -> DiffusionPolicy {
        DiffusionPolicy::new(4, 3, &[16, 16], 8, NoiseSchedule::new(k, 0.1, 10.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_denoiser_closed_form() {
        let policy = small_policy(5);
        let params = ParamTensor::zeros(policy.spec());
        let obs = Matrix::from_rows(&[[0.1, 0.2, 0.3], [-0.4, 0.0, 0.9]]).unwrap();
        let x_k = Matrix::from_rows(&[[1.0, -1.0, 0.5, 2.0], [0.3, 0.0, -0.7, 1.1]]).unwrap();
        let noises = vec![Matrix::zeros(2, 4); 5];
        let (x0, _) = policy.run_chain(&params, &obs, x_k.clone(), noises, false).unwrap();
        let scale: f64 = (1..=5).map(|k| policy.schedule().alpha(k).sqrt()).product();
        for (a, b) in x0.data().iter().zip(x_k.data()) {
            assert!((a - b / scale).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn single_step_chain() {
        let policy = small_policy(1);
        let params = policy.init_params(3);
        let obs = Matrix::from_rows(&[[0.1, 0.2, 0.3]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x0, trace) = policy.sample_batch(&params, &obs, &mut rng, ChainNoise::On, true).unwrap();
        let trace = trace.unwrap();
        let s = policy.schedule();
        let c2 = s.beta(1) / (1.0 - s.alpha_bar(1)).sqrt();
        for i in 0..4 {
            let expected = (trace.states[1].data()[i] - c2 * trace.eps_hat[0].data()[i]) / s.alpha(1).sqrt();
            assert!((x0.data()[i] - expected).abs() <= 1e-14 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_replayable() {
        let policy = small_policy(5);
        let params = policy.init_params(9);
        let obs = Matrix::from_rows(&[[0.5, -0.5, 0.25], [0.0, 1.0, 0.0]]).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            policy.sample_batch(&params, &obs, &mut rng, ChainNoise::On, true).unwrap()
        };
        let (a, trace) = run(42);
        let (b, _) = run(42);
        assert_eq!(a, b);
        let trace = trace.unwrap();
        assert_eq!(trace.states.len(), 6);
        assert_eq!(trace.states[0], a);
        assert_eq!(policy.replay(&params, &trace).unwrap(), a);
        assert!(trace.noises[0].data().iter().all(|&z| z == 0.0));
    }

    #[test]
    fn width_mismatch_is_config_error() {
        let policy = small_policy(2);
        let params = policy.init_params(0);
        let obs = Matrix::from_rows(&[[0.1, 0.2]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            policy.sample_batch(&params, &obs, &mut rng, ChainNoise::On, false),
            Err(Error::Config { .. })
        ));
        let bad = MlpSpec::new(vec![10, 8, 4], Activation::Silu, Activation::Identity).unwrap();
        assert!(DiffusionPolicy::with_spec(bad, 4, 3, 8, NoiseSchedule::new(2, 0.1, 10.0).unwrap()).is_err());
    }

    #[test]
    fn chain_backprop_trivial_cases() {
        let policy = small_policy(5);
        let obs = Matrix::from_rows(&[[0.1, 0.2, 0.3]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);

        let mut params = policy.init_params(1);
        let (_, trace) = policy.sample_batch(&params, &obs, &mut rng, ChainNoise::On, true).unwrap();
        let g = policy
            .backprop_through_chain(&mut params, &trace.unwrap(), &Matrix::zeros(1, 4))
            .unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
        assert!(params.grads().iter().all(|&v| v == 0.0));

        // A zero denoiser has no parameter influence beyond its output
        // bias, which passes gradient straight through; the input gradient
        // is the linear chain.
        let mut params = ParamTensor::zeros(policy.spec());
        let (_, trace) = policy.sample_batch(&params, &obs, &mut rng, ChainNoise::On, true).unwrap();
        let d = Matrix::from_rows(&[[1.0, -2.0, 0.5, 3.0]]).unwrap();
        let g = policy.backprop_through_chain(&mut params, &trace.unwrap(), &d).unwrap();
        let scale: f64 = (1..=5).map(|k| policy.schedule().alpha(k).sqrt()).product();
        for (a, b) in g.data().iter().zip(d.data()) {
            assert!((a - b / scale).abs() < 1e-12 * a.abs());
        }
        let n = params.len();
        let hidden_only = &params.grads()[..n - 4];
        assert!(hidden_only.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn clipped_chain_matches_plain_when_inactive() {
        let plain = small_policy(5);
        let clipped = small_policy(5).with_clip(Some(1e6)).unwrap();
        let params = plain.init_params(4);
        let obs = Matrix::from_rows(&[[0.3, -0.1, 0.8], [0.0, 0.5, -0.5]]).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(8);
        let mut b = ChaCha8Rng::seed_from_u64(8);
        let (x, _) = plain.sample_batch(&params, &obs, &mut a, ChainNoise::On, false).unwrap();
        let (y, _) = clipped.sample_batch(&params, &obs, &mut b, ChainNoise::On, false).unwrap();
        for (u, v) in x.data().iter().zip(y.data()) {
            assert!((u - v).abs() <= 1e-10 * u.abs().max(1.0));
        }
        assert!(small_policy(2).with_clip(Some(0.0)).is_err());
    }

    #[test]
    fn clipped_chain_is_bounded() {
        let policy = small_policy(5).with_clip(Some(1.5)).unwrap();
        let params = policy.init_params(6);
        let obs = Matrix::from_rows(&[[0.3, -0.1, 0.8]; 16]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, _) = policy.sample_batch(&params, &obs, &mut rng, ChainNoise::On, false).unwrap();
        assert!(x.data().iter().all(|v| v.abs() <= 1.5));
    }

    #[test]
    fn clipped_chain_gradient_matches_finite_differences() {
        let policy = small_policy(5).with_clip(Some(2.0)).unwrap();
        let mut params = policy.init_params(11);
        let obs = Matrix::from_rows(&[[0.2, -0.4, 0.6], [0.9, 0.1, -0.3]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (_, trace) = policy.sample_batch(&params, &obs, &mut rng, ChainNoise::On, true).unwrap();
        let trace = trace.unwrap();
        let w = [0.7, -1.3, 0.4, 1.1];
        let loss = |p: &ParamTensor| -> f64 {
            let x = policy.replay(p, &trace).unwrap();
            (0..x.rows()).map(|r| x.row(r).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()).sum()
        };
        let d = Matrix::from_rows(&[w, w]).unwrap();
        params.zero_grads();
        policy.backprop_through_chain(&mut params, &trace, &d).unwrap();
        let analytic = params.grads().to_vec();
        let h = 1e-6;
        let mut worst = 0.0f64;
        for i in (0..params.len()).step_by(7) {
            let mut p = params.clone();
            p.values_mut()[i] += h;
            let up = loss(&p);
            p.values_mut()[i] -= 2.0 * h;
            let down = loss(&p);
            let numeric = (up - down) / (2.0 * h);
            let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }
}
