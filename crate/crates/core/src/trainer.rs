//! DDPG-style actor-critic training with either a diffusion actor or a
//! plain MLP actor.
//!
//! One environment step feeds one transition into the replay buffer; once
//! the warmup is over every step is followed by `updates_per_step` rounds
//! of critic update, actor update and soft target updates.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::random_action;
use crate::diffusion::{ChainNoise, DiffusionPolicy, NoiseSchedule, SampleTrace};
use crate::env::{squash_features, squash_features_backward, Env, EnvConfig, Transition};
use crate::error::{Error, Result};
use crate::nn::{self, Activation, AdamState, Matrix, MlpSpec, ParamTensor, Tape};

/// Fixed-capacity ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("trainer.buffer_capacity", "must be at least 1"));
        }
        Ok(Self {
            items: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            cursor: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Slot the next push writes to.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// Appends, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Uniform indices with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if batch == 0 || self.items.len() < batch {
            return Err(Error::Usage(format!(
                "cannot draw a batch of {batch} from {} transitions",
                self.items.len()
            )));
        }
        Ok((0..batch).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        Ok(self
            .sample_indices(batch, rng)?
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

/// Which actor family drives the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "gdm-ddpg")]
    GdmDdpg,
    #[serde(rename = "mlp-ddpg")]
    MlpDdpg,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::GdmDdpg => "gdm-ddpg",
            AgentKind::MlpDdpg => "mlp-ddpg",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gdm-ddpg" => Ok(AgentKind::GdmDdpg),
            "mlp-ddpg" => Ok(AgentKind::MlpDdpg),
            other => Err(Error::config("experiment.agent", format!("unknown learned agent {other:?}"))),
        }
    }
}

/// How actions are presented to the critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticAction {
    /// Squashed, dimensionless action features.
    Squashed,
    /// The unbounded pre-squash policy output.
    Raw,
}

impl std::str::FromStr for CriticAction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squashed" => Ok(CriticAction::Squashed),
            "raw" => Ok(CriticAction::Raw),
            other => Err(Error::config("trainer.critic_action", format!("expected squashed or raw, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch: usize,
    /// Random-policy transitions collected before the first update.
    pub warmup: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub episodes: usize,
    pub updates_per_step: usize,
    pub seed: u64,
    pub buffer_capacity: usize,
    /// Global gradient-norm clip applied to both networks.
    pub grad_clip: f64,
    pub explore_sigma_start: f64,
    pub explore_sigma_end: f64,
    pub critic_hidden: Vec<usize>,
    /// Hidden widths of the plain MLP actor.
    pub actor_hidden: Vec<usize>,
    pub critic_action: CriticAction,
    /// Magnitude bound on raw actor outputs: the clip on the chain's
    /// predicted clean action, and the scale of the MLP actor's tanh head.
    pub action_bound: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            batch: 256,
            warmup: 1000,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            episodes: 1000,
            updates_per_step: 1,
            seed: 0,
            buffer_capacity: 100_000,
            grad_clip: 1.0,
            explore_sigma_start: 0.2,
            explore_sigma_end: 0.01,
            critic_hidden: vec![256, 256],
            actor_hidden: vec![256, 256],
            critic_action: CriticAction::Squashed,
            action_bound: 3.0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("trainer.tau", format!("must lie in (0, 1], got {}", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("trainer.gamma", format!("must lie in [0, 1], got {}", self.gamma)));
        }
        if self.batch == 0 {
            return Err(Error::config("trainer.batch", "must be at least 1"));
        }
        if self.buffer_capacity < self.batch {
            return Err(Error::config("trainer.buffer_capacity", "must hold at least one batch"));
        }
        for (key, lr) in [("trainer.actor_lr", self.actor_lr), ("trainer.critic_lr", self.critic_lr)] {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::config(key, format!("must be non-negative, got {lr}")));
            }
        }
        if self.grad_clip.is_nan() || self.grad_clip <= 0.0 {
            return Err(Error::config("trainer.grad_clip", "must be positive"));
        }
        for (key, s) in [
            ("trainer.explore_sigma_start", self.explore_sigma_start),
            ("trainer.explore_sigma_end", self.explore_sigma_end),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::config(key, format!("must be non-negative, got {s}")));
            }
        }
        if !(self.action_bound.is_finite() && self.action_bound > 0.0) {
            return Err(Error::config("trainer.action_bound", format!("must be positive, got {}", self.action_bound)));
        }
        if self.critic_hidden.is_empty() || self.critic_hidden.contains(&0) {
            return Err(Error::config("trainer.critic_hidden", "need at least one positive width"));
        }
        if self.actor_hidden.is_empty() || self.actor_hidden.contains(&0) {
            return Err(Error::config("trainer.actor_hidden", "need at least one positive width"));
        }
        Ok(())
    }

    /// Exploration noise scale for an episode, decaying linearly.
    pub fn explore_sigma(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.explore_sigma_start;
        }
        let frac = episode.min(self.episodes - 1) as f64 / (self.episodes - 1) as f64;
        self.explore_sigma_start + (self.explore_sigma_end - self.explore_sigma_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub embed_dim: usize,
    pub hidden: Vec<usize>,
    /// Keep injected chain noise when evaluating a trained policy.
    pub eval_chain_noise: bool,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            steps: 5,
            beta_min: 0.1,
            beta_max: 10.0,
            embed_dim: 16,
            hidden: vec![128, 128, 128],
            eval_chain_noise: true,
        }
    }
}

impl DiffusionConfig {
    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::new(self.steps, self.beta_min, self.beta_max)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        if self.embed_dim == 0 || !self.embed_dim.is_multiple_of(2) {
            return Err(Error::config("diffusion.embed_dim", "must be a positive even number"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("diffusion.hidden", "need at least one positive width"));
        }
        Ok(())
    }
}

/// Whether the actor is acting for data collection or evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Train,
    Eval,
}

/// Actor architecture; parameters are held by [`AgentNets`].
#[derive(Debug, Clone, PartialEq)]
pub enum Actor {
    Diffusion {
        policy: DiffusionPolicy,
        eval_chain_noise: bool,
    },
    /// Tanh-headed MLP whose output is scaled by `bound`.
    Mlp { spec: MlpSpec, bound: f64 },
}

/// Recorded actor forward pass.
#[derive(Debug)]
pub enum ActorTrace {
    Chain(SampleTrace),
    Mlp(Tape),
}

impl Actor {
    pub fn new(kind: AgentKind, env: &EnvConfig, trainer: &TrainerConfig, diffusion: &DiffusionConfig) -> Result<Self> {
        let (obs_dim, action_dim) = (env.obs_dim(), env.action_dim());
        Ok(match kind {
            AgentKind::GdmDdpg => Actor::Diffusion {
                policy: DiffusionPolicy::new(
                    action_dim,
                    obs_dim,
                    &diffusion.hidden,
                    diffusion.embed_dim,
                    diffusion.schedule()?,
                )?
                .with_clip(Some(trainer.action_bound))?,
                eval_chain_noise: diffusion.eval_chain_noise,
            },
            AgentKind::MlpDdpg => {
                let mut widths = vec![obs_dim];
                widths.extend_from_slice(&trainer.actor_hidden);
                widths.push(action_dim);
                Actor::Mlp {
                    spec: MlpSpec::new(widths, Activation::Relu, Activation::Tanh)?,
                    bound: trainer.action_bound,
                }
            }
        })
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Actor::Diffusion { .. } => AgentKind::GdmDdpg,
            Actor::Mlp { .. } => AgentKind::MlpDdpg,
        }
    }

    pub fn spec(&self) -> &MlpSpec {
        match self {
            Actor::Diffusion { policy, .. } => policy.spec(),
            Actor::Mlp { spec, .. } => spec,
        }
    }

    /// Raw actions for a batch of observations.
    pub fn act<R: Rng + ?Sized>(
        &self,
        params: &ParamTensor,
        obs: &Matrix,
        rng: &mut R,
        mode: ActMode,
        record: bool,
    ) -> Result<(Matrix, Option<ActorTrace>)> {
        match self {
            Actor::Diffusion {
                policy,
                eval_chain_noise,
            } => {
                let noise = if mode == ActMode::Train || *eval_chain_noise {
                    ChainNoise::On
                } else {
                    ChainNoise::Off
                };
                let (a, trace) = policy.sample_batch(params, obs, rng, noise, record)?;
                Ok((a, trace.map(ActorTrace::Chain)))
            }
            Actor::Mlp { spec, bound } => {
                let (mut a, tape) = nn::forward_batch(params, spec, obs)?;
                a.data_mut().iter_mut().for_each(|v| *v *= bound);
                Ok((a, record.then_some(ActorTrace::Mlp(tape))))
            }
        }
    }

    /// Accumulates actor parameter gradients for `dL/d(raw action)`.
    pub fn backward(&self, params: &mut ParamTensor, trace: &ActorTrace, d_action: &Matrix) -> Result<()> {
        match (self, trace) {
            (Actor::Diffusion { policy, .. }, ActorTrace::Chain(t)) => {
                policy.backprop_through_chain(params, t, d_action)?;
            }
            (Actor::Mlp { spec, bound }, ActorTrace::Mlp(tape)) => {
                let mut d = d_action.clone();
                d.data_mut().iter_mut().for_each(|v| *v *= bound);
                nn::backward_batch(params, spec, tape, &d)?;
            }
            _ => return Err(Error::Usage("actor trace does not match the actor kind".into())),
        }
        Ok(())
    }
}

/// Online and target networks with their optimizers.
#[derive(Debug, Clone)]
pub struct AgentNets {
    pub actor: Actor,
    pub critic_spec: MlpSpec,
    pub critic_action: CriticAction,
    pub actor_params: ParamTensor,
    pub critic_params: ParamTensor,
    pub target_actor: ParamTensor,
    pub target_critic: ParamTensor,
    pub actor_adam: AdamState,
    pub critic_adam: AdamState,
}

impl AgentNets {
    pub fn new(actor: Actor, env: &EnvConfig, cfg: &TrainerConfig, seed: u64) -> Result<Self> {
        let mut widths = vec![env.obs_dim() + env.action_dim()];
        widths.extend_from_slice(&cfg.critic_hidden);
        widths.push(1);
        let critic_spec = MlpSpec::new(widths, Activation::Relu, Activation::Identity)?;
        let actor_params = nn::mlp_init(actor.spec(), seed);
        let critic_params = nn::mlp_init(&critic_spec, seed.wrapping_add(1));
        Ok(Self {
            target_actor: actor_params.clone(),
            target_critic: critic_params.clone(),
            actor_adam: AdamState::new(actor_params.len(), cfg.actor_lr),
            critic_adam: AdamState::new(critic_params.len(), cfg.critic_lr),
            actor,
            critic_spec,
            critic_action: cfg.critic_action,
            actor_params,
            critic_params,
        })
    }

    fn critic_input(&self, obs: &Matrix, actions: &Matrix) -> Matrix {
        let feats = match self.critic_action {
            CriticAction::Raw => actions.clone(),
            CriticAction::Squashed => {
                let mut f = Matrix::zeros(actions.rows(), actions.cols());
                for r in 0..actions.rows() {
                    f.row_mut(r).copy_from_slice(&squash_features(actions.row(r)));
                }
                f
            }
        };
        Matrix::hconcat(&[obs, &feats]).expect("same batch")
    }

    /// Maps `dQ/d(critic action features)` back to the raw action.
    fn critic_action_backward(&self, actions: &Matrix, d_feats: &Matrix) -> Matrix {
        match self.critic_action {
            CriticAction::Raw => d_feats.clone(),
            CriticAction::Squashed => {
                let mut g = Matrix::zeros(actions.rows(), actions.cols());
                for r in 0..actions.rows() {
                    g.row_mut(r)
                        .copy_from_slice(&squash_features_backward(actions.row(r), d_feats.row(r)));
                }
                g
            }
        }
    }

    /// Online critic value of raw actions.
    pub fn q_values(&self, obs: &Matrix, actions: &Matrix) -> Result<Vec<f64>> {
        let (q, _) = nn::forward_batch(&self.critic_params, &self.critic_spec, &self.critic_input(obs, actions))?;
        Ok(q.into_vec())
    }

    pub fn save(&self, dir: &Path, manifest: &CheckpointManifest) -> Result<()> {
        let io = |e: std::io::Error| Error::Format(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let nets = [
            ("actor.bin", &self.actor_params, self.actor.spec()),
            ("critic.bin", &self.critic_params, &self.critic_spec),
            ("target_actor.bin", &self.target_actor, self.actor.spec()),
            ("target_critic.bin", &self.target_critic, &self.critic_spec),
        ];
        for (name, params, spec) in nets {
            let f = File::create(dir.join(name)).map_err(io)?;
            nn::save_params(BufWriter::new(f), params, spec, manifest.seed).map_err(io)?;
        }
        let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join("manifest.json"), json + "\n").map_err(io)?;
        Ok(())
    }

    /// Restores networks saved by [`AgentNets::save`] into an agent with
    /// the same architecture. Optimizer moments start fresh.
    pub fn load(&mut self, dir: &Path) -> Result<CheckpointManifest> {
        let io = |e: std::io::Error| Error::Format(format!("{}: {e}", dir.display()));
        let manifest: CheckpointManifest = serde_json::from_slice(&fs::read(dir.join("manifest.json")).map_err(io)?)
            .map_err(|e| Error::Format(format!("bad manifest: {e}")))?;
        if manifest.agent != self.actor.kind() {
            return Err(Error::Format(format!(
                "checkpoint holds a {} agent, expected {}",
                manifest.agent.name(),
                self.actor.kind().name()
            )));
        }
        let actor_spec = self.actor.spec().clone();
        let critic_spec = self.critic_spec.clone();
        let slots = [
            ("actor.bin", &mut self.actor_params, &actor_spec),
            ("critic.bin", &mut self.critic_params, &critic_spec),
            ("target_actor.bin", &mut self.target_actor, &actor_spec),
            ("target_critic.bin", &mut self.target_critic, &critic_spec),
        ];
        for (name, params, spec) in slots {
            let f = File::open(dir.join(name)).map_err(io)?;
            let (header, loaded) = nn::load_params(BufReader::new(f))?;
            if &header.spec != spec {
                return Err(Error::Format(format!("{name} does not match the configured architecture")));
            }
            params.copy_from(&loaded)?;
        }
        Ok(manifest)
    }
}

/// Sidecar describing a checkpoint directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub agent: AgentKind,
    pub episode: usize,
    pub seed: u64,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub files: Vec<String>,
}

impl CheckpointManifest {
    pub fn new(agent: AgentKind, episode: usize, seed: u64, env: &EnvConfig) -> Self {
        Self {
            agent,
            episode,
            seed,
            obs_dim: env.obs_dim(),
            action_dim: env.action_dim(),
            files: ["actor.bin", "critic.bin", "target_actor.bin", "target_critic.bin"]
                .map(String::from)
                .to_vec(),
        }
    }
}

fn batch_matrices(batch: &[&Transition]) -> (Matrix, Matrix, Matrix) {
    let obs = Matrix::from_rows(&batch.iter().map(|t| t.obs.as_slice()).collect::<Vec<_>>()).expect("uniform obs");
    let act = Matrix::from_rows(&batch.iter().map(|t| t.action_raw.as_slice()).collect::<Vec<_>>())
        .expect("uniform actions");
    let next =
        Matrix::from_rows(&batch.iter().map(|t| t.obs_next.as_slice()).collect::<Vec<_>>()).expect("uniform obs");
    (obs, act, next)
}

/// TD regression of the online critic towards
/// `y = r + γ(1−done)·Q_target(s', π_target(s'))`. Returns the loss before
/// the Adam step.
pub fn critic_update<R: Rng + ?Sized>(
    nets: &mut AgentNets,
    batch: &[&Transition],
    cfg: &TrainerConfig,
    rng: &mut R,
) -> Result<f64> {
    let (obs, act, next) = batch_matrices(batch);
    let n = batch.len();
    let bootstrap = if cfg.gamma > 0.0 && batch.iter().any(|t| !t.done) {
        let (next_act, _) = nets.actor.act(&nets.target_actor, &next, rng, ActMode::Train, false)?;
        let (q_next, _) = nn::forward_batch(&nets.target_critic, &nets.critic_spec, &nets.critic_input(&next, &next_act))?;
        q_next.into_vec()
    } else {
        vec![0.0; n]
    };
    let targets: Vec<f64> = batch
        .iter()
        .zip(&bootstrap)
        .map(|(t, q)| t.reward + if t.done { 0.0 } else { cfg.gamma * q })
        .collect();

    let input = nets.critic_input(&obs, &act);
    let (q, tape) = nn::forward_batch(&nets.critic_params, &nets.critic_spec, &input)?;
    let mut loss = 0.0;
    let mut d_q = Matrix::zeros(n, 1);
    for (i, (qv, y)) in q.data().iter().zip(&targets).enumerate() {
        let err = qv - y;
        loss += err * err;
        d_q.data_mut()[i] = 2.0 * err / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::Domain(format!("critic loss became non-finite ({loss})")));
    }
    nets.critic_params.zero_grads();
    nn::backward_batch(&mut nets.critic_params, &nets.critic_spec, &tape, &d_q)?;
    nets.critic_params.clip_grad_norm(cfg.grad_clip);
    nn::adam_step(&mut nets.critic_params, &mut nets.critic_adam)?;
    nets.critic_params.zero_grads();
    Ok(loss)
}

/// Accumulates `∇θ [−mean Q(s, π_θ(s))]` into the actor gradients and
/// returns the loss. The critic is read-only here.
pub fn actor_gradient<R: Rng + ?Sized>(nets: &mut AgentNets, obs: &Matrix, rng: &mut R) -> Result<f64> {
    let n = obs.rows();
    let (actions, trace) = nets.actor.act(&nets.actor_params, obs, rng, ActMode::Train, true)?;
    let trace = trace.expect("recorded");
    let input = nets.critic_input(obs, &actions);
    let (q, tape) = nn::forward_batch(&nets.critic_params, &nets.critic_spec, &input)?;
    let loss = -q.data().iter().sum::<f64>() / n as f64;
    let d_q = Matrix::from_vec(n, 1, vec![-1.0 / n as f64; n])?;
    let d_input = nn::input_gradient_batch(&nets.critic_params, &nets.critic_spec, &tape, &d_q)?;
    let d_feats = d_input.columns(obs.cols(), obs.cols() + actions.cols());
    let d_action = nets.critic_action_backward(&actions, &d_feats);
    nets.actor.backward(&mut nets.actor_params, &trace, &d_action)?;
    Ok(loss)
}

/// Policy-gradient step through the critic (and through the reverse chain
/// for the diffusion actor). Returns the loss before the step.
pub fn actor_update<R: Rng + ?Sized>(
    nets: &mut AgentNets,
    batch: &[&Transition],
    cfg: &TrainerConfig,
    rng: &mut R,
) -> Result<f64> {
    let (obs, _, _) = batch_matrices(batch);
    nets.actor_params.zero_grads();
    let loss = actor_gradient(nets, &obs, rng)?;
    if !loss.is_finite() {
        return Err(Error::Domain(format!("actor loss became non-finite ({loss})")));
    }
    nets.actor_params.clip_grad_norm(cfg.grad_clip);
    nn::adam_step(&mut nets.actor_params, &mut nets.actor_adam)?;
    nets.actor_params.zero_grads();
    Ok(loss)
}

/// `θ' ← τθ + (1−τ)θ'`.
pub fn soft_update(target: &mut ParamTensor, online: &ParamTensor, tau: f64) -> Result<()> {
    target.soft_update_from(online, tau)
}

/// Per-episode training summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub reward_mean: f64,
    pub dpp_mean: f64,
    pub rate_mean_mbps: f64,
    pub energy_mean_j: f64,
    pub queue_final: f64,
    /// Mean over the episode's updates; zero when none ran.
    pub actor_loss: f64,
    pub critic_loss: f64,
    /// Environment steps taken so far, this episode included.
    pub steps: usize,
    pub wall_ms: u64,
}

/// Everything needed to start a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSetup {
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    pub diffusion: DiffusionConfig,
    pub agent: AgentKind,
}

impl TrainSetup {
    pub fn new(agent: AgentKind) -> Self {
        Self {
            env: EnvConfig::default(),
            trainer: TrainerConfig::default(),
            diffusion: DiffusionConfig::default(),
            agent,
        }
    }

    pub fn build_agent(&self) -> Result<AgentNets> {
        let actor = Actor::new(self.agent, &self.env, &self.trainer, &self.diffusion)?;
        AgentNets::new(actor, &self.env, &self.trainer, self.trainer.seed)
    }
}

/// Result of [`train_run`].
#[derive(Debug)]
pub struct TrainOutcome {
    pub nets: AgentNets,
    pub metrics: Vec<EpisodeMetrics>,
}

/// Runs the full training loop, calling `on_episode` after every episode.
/// Everything except `wall_ms` is a deterministic function of the setup.
pub fn train_run<F>(setup: &TrainSetup, mut on_episode: F) -> Result<TrainOutcome>
where
    F: FnMut(&EpisodeMetrics, &AgentNets) -> Result<()>,
{
    setup.trainer.validate()?;
    setup.diffusion.validate()?;
    let cfg = &setup.trainer;
    let env = Env::new(setup.env.clone())?;
    let mut nets = setup.build_agent()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
    let action_dim = setup.env.action_dim();
    let mut total_steps = 0usize;
    let mut metrics = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let started = Instant::now();
        let sigma = cfg.explore_sigma(episode);
        let (mut state, mut obs) = env.reset();
        let (mut reward_sum, mut dpp_sum, mut rate_sum, mut energy_sum) = (0.0, 0.0, 0.0, 0.0);
        let (mut actor_loss_sum, mut critic_loss_sum, mut updates) = (0.0, 0.0, 0usize);
        let mut slots = 0usize;

        while !state.done {
            let raw = if total_steps < cfg.warmup {
                random_action(&mut rng, action_dim)
            } else {
                let o = Matrix::from_vec(1, obs.0.len(), obs.0.clone())?;
                let (a, _) = nets.actor.act(&nets.actor_params, &o, &mut rng, ActMode::Train, false)?;
                let mut a = a.into_vec();
                if sigma > 0.0 {
                    for v in &mut a {
                        *v += sigma * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                a
            };
            let out = env.step(&state, &raw)?;
            reward_sum += out.reward;
            dpp_sum += out.info.dpp;
            rate_sum += out.info.sum_rate_mbps;
            energy_sum += out.info.energy_j;
            buffer.push(Transition {
                obs: obs.0,
                action_raw: raw,
                reward: out.reward,
                obs_next: out.observation.0.clone(),
                done: out.done,
            });
            state = out.state;
            obs = out.observation;
            total_steps += 1;
            slots += 1;

            if total_steps >= cfg.warmup && buffer.len() >= cfg.batch {
                for _ in 0..cfg.updates_per_step {
                    let idx = buffer.sample_indices(cfg.batch, &mut rng)?;
                    let batch: Vec<&Transition> = idx.iter().map(|&i| buffer.get(i).unwrap()).collect();
                    critic_loss_sum += critic_update(&mut nets, &batch, cfg, &mut rng)?;
                    actor_loss_sum += actor_update(&mut nets, &batch, cfg, &mut rng)?;
                    soft_update(&mut nets.target_critic, &nets.critic_params, cfg.tau)?;
                    soft_update(&mut nets.target_actor, &nets.actor_params, cfg.tau)?;
                    updates += 1;
                }
            }
        }

        let per_slot = 1.0 / slots as f64;
        let mean_or_zero = |s: f64| if updates > 0 { s / updates as f64 } else { 0.0 };
        let m = EpisodeMetrics {
            episode,
            reward_mean: reward_sum * per_slot,
            dpp_mean: dpp_sum * per_slot,
            rate_mean_mbps: rate_sum * per_slot,
            energy_mean_j: energy_sum * per_slot,
            queue_final: state.queue.queues()[0],
            actor_loss: mean_or_zero(actor_loss_sum),
            critic_loss: mean_or_zero(critic_loss_sum),
            steps: total_steps,
            wall_ms: started.elapsed().as_millis() as u64,
        };
        on_episode(&m, &nets)?;
        metrics.push(m);
    }
    Ok(TrainOutcome { nets, metrics })
}
