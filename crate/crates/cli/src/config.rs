//! Sectioned `key = value` run configuration.
//!
//! ```text
//! # comment
//! [env]
//! bandwidth = 2e6
//! devices = 100,150; 300,350; 500,100
//! [trainer]
//! critic_hidden = 256,256
//! ```
//!
//! Missing keys keep their defaults, unknown keys are rejected, and every
//! error names the offending `section.key`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use lyapgdm_core::env::EnvConfig;
use lyapgdm_core::policy::PolicyKind;
use lyapgdm_core::trainer::{CriticAction, DiffusionConfig, TrainerConfig};
use lyapgdm_core::Vec2;

use crate::error::{HarnessError, Result};

pub const SEED_ENV_VAR: &str = "LYAPGDM_SEED";

/// Whether a sweep re-evaluates a fixed policy or retrains per value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Eval,
    Train,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Eval => "eval",
            SweepMode::Train => "train",
        }
    }
}

impl FromStr for SweepMode {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eval" => Ok(SweepMode::Eval),
            "train" => Ok(SweepMode::Train),
            other => Err(HarnessError::config(
                "experiment.sweep_mode",
                format!("expected eval or train, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub agent: PolicyKind,
    pub out: PathBuf,
    pub eval_episodes: usize,
    /// Checkpoint directory for evaluating learned agents; defaults to the
    /// final checkpoint under `out`.
    pub checkpoint: Option<PathBuf>,
    pub sweep_param: Option<String>,
    pub sweep_values: Vec<f64>,
    pub sweep_mode: SweepMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            agent: PolicyKind::GdmDdpg,
            out: PathBuf::from("runs/default"),
            eval_episodes: 20,
            checkpoint: None,
            sweep_param: None,
            sweep_values: Vec::new(),
            sweep_mode: SweepMode::Eval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub env: EnvConfig,
    /// When nonzero, this many devices are placed uniformly at random
    /// (seeded by `device_seed`) instead of using `env.devices`.
    pub random_devices: usize,
    pub device_seed: u64,
    pub trainer: TrainerConfig,
    pub diffusion: DiffusionConfig,
    pub experiment: ExperimentConfig,
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "env.area_x",
    "env.area_y",
    "env.start",
    "env.dest",
    "env.altitude",
    "env.v_max",
    "env.horizon",
    "env.dt",
    "env.bandwidth",
    "env.tx_power",
    "env.energy_budget",
    "env.devices",
    "env.random_devices",
    "env.device_seed",
    "env.beta0",
    "env.noise_psd",
    "env.v",
    "trainer.gamma",
    "trainer.tau",
    "trainer.batch",
    "trainer.warmup",
    "trainer.actor_lr",
    "trainer.critic_lr",
    "trainer.episodes",
    "trainer.updates_per_step",
    "trainer.seed",
    "trainer.buffer_capacity",
    "trainer.grad_clip",
    "trainer.explore_sigma_start",
    "trainer.explore_sigma_end",
    "trainer.critic_hidden",
    "trainer.actor_hidden",
    "trainer.critic_action",
    "trainer.action_bound",
    "diffusion.steps",
    "diffusion.beta_min",
    "diffusion.beta_max",
    "diffusion.embed_dim",
    "diffusion.hidden",
    "diffusion.eval_chain_noise",
    "experiment.agent",
    "experiment.out",
    "experiment.eval_episodes",
    "experiment.checkpoint",
    "experiment.sweep_param",
    "experiment.sweep_values",
    "experiment.sweep_mode",
];

fn bad(key: &str, value: &str, what: &str) -> HarnessError {
    HarnessError::config(key, format!("expected {what}, got {value:?}"))
}

fn real(key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(bad(key, v, "a finite number")),
    }
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| bad(key, v, "a non-negative integer"))
}

fn seed(key: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| bad(key, v, "an unsigned 64-bit integer"))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    v.parse().map_err(|_| bad(key, v, "true or false"))
}

fn reals(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| real(key, p.trim())).collect()
}

fn widths(key: &str, v: &str) -> Result<Vec<usize>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| count(key, p.trim())).collect()
}

fn point(key: &str, v: &str) -> Result<Vec2> {
    match reals(key, v)?.as_slice() {
        [x, y] => Ok(Vec2::new(*x, *y)),
        _ => Err(bad(key, v, "a point \"x,y\"")),
    }
}

fn points(key: &str, v: &str) -> Result<Vec<Vec2>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(';').map(|p| point(key, p.trim())).collect()
}

fn optional(v: &str) -> Option<String> {
    (!v.is_empty()).then(|| v.to_string())
}

fn fmt_reals(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn fmt_widths(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_point(p: Vec2) -> String {
    format!("{:?},{:?}", p.x, p.y)
}

impl RunConfig {
    /// Sets one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let env = &mut self.env;
        let tr = &mut self.trainer;
        let df = &mut self.diffusion;
        let ex = &mut self.experiment;
        match key {
            "env.area_x" => env.area_x = real(key, v)?,
            "env.area_y" => env.area_y = real(key, v)?,
            "env.start" => env.start = point(key, v)?,
            "env.dest" => env.dest = point(key, v)?,
            "env.altitude" => env.altitude = real(key, v)?,
            "env.v_max" => env.v_max = real(key, v)?,
            "env.horizon" => env.horizon = count(key, v)?,
            "env.dt" => env.dt = real(key, v)?,
            "env.bandwidth" => env.bandwidth = real(key, v)?,
            "env.tx_power" => env.tx_power = real(key, v)?,
            "env.energy_budget" => env.energy_budget = real(key, v)?,
            "env.devices" => env.devices = points(key, v)?,
            "env.random_devices" => self.random_devices = count(key, v)?,
            "env.device_seed" => self.device_seed = seed(key, v)?,
            "env.beta0" => env.beta0 = real(key, v)?,
            "env.noise_psd" => env.noise_psd = real(key, v)?,
            "env.v" => env.v_weight = real(key, v)?,
            "trainer.gamma" => tr.gamma = real(key, v)?,
            "trainer.tau" => tr.tau = real(key, v)?,
            "trainer.batch" => tr.batch = count(key, v)?,
            "trainer.warmup" => tr.warmup = count(key, v)?,
            "trainer.actor_lr" => tr.actor_lr = real(key, v)?,
            "trainer.critic_lr" => tr.critic_lr = real(key, v)?,
            "trainer.episodes" => tr.episodes = count(key, v)?,
            "trainer.updates_per_step" => tr.updates_per_step = count(key, v)?,
            "trainer.seed" => tr.seed = seed(key, v)?,
            "trainer.buffer_capacity" => tr.buffer_capacity = count(key, v)?,
            "trainer.grad_clip" => tr.grad_clip = real(key, v)?,
            "trainer.explore_sigma_start" => tr.explore_sigma_start = real(key, v)?,
            "trainer.explore_sigma_end" => tr.explore_sigma_end = real(key, v)?,
            "trainer.critic_hidden" => tr.critic_hidden = widths(key, v)?,
            "trainer.actor_hidden" => tr.actor_hidden = widths(key, v)?,
            "trainer.critic_action" => tr.critic_action = CriticAction::from_str(v)?,
            "trainer.action_bound" => tr.action_bound = real(key, v)?,
            "diffusion.steps" => df.steps = count(key, v)?,
            "diffusion.beta_min" => df.beta_min = real(key, v)?,
            "diffusion.beta_max" => df.beta_max = real(key, v)?,
            "diffusion.embed_dim" => df.embed_dim = count(key, v)?,
            "diffusion.hidden" => df.hidden = widths(key, v)?,
            "diffusion.eval_chain_noise" => df.eval_chain_noise = flag(key, v)?,
            "experiment.agent" => ex.agent = PolicyKind::from_str(v)?,
            "experiment.out" => {
                if v.is_empty() {
                    return Err(bad(key, v, "a directory"));
                }
                ex.out = PathBuf::from(v);
            }
            "experiment.eval_episodes" => ex.eval_episodes = count(key, v)?,
            "experiment.checkpoint" => ex.checkpoint = optional(v).map(PathBuf::from),
            "experiment.sweep_param" => ex.sweep_param = optional(v),
            "experiment.sweep_values" => ex.sweep_values = reals(key, v)?,
            "experiment.sweep_mode" => ex.sweep_mode = SweepMode::from_str(v)?,
            other => return Err(HarnessError::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Checks every section against its invariants and materializes a
    /// random device layout.
    pub fn finalize(&mut self) -> Result<()> {
        if self.random_devices > 0 {
            self.env = self.env.clone().with_random_devices(self.random_devices, self.device_seed);
        }
        self.env.validate()?;
        self.trainer.validate()?;
        self.diffusion.validate()?;
        if self.experiment.eval_episodes == 0 {
            return Err(HarnessError::config("experiment.eval_episodes", "must be at least 1"));
        }
        if let Some(p) = &self.experiment.sweep_param {
            if !KEYS.contains(&p.as_str()) || p.starts_with("experiment.") {
                return Err(HarnessError::config(
                    "experiment.sweep_param",
                    format!("{p:?} is not a sweepable key"),
                ));
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_config(&c.serialize())` reproduces `c`.
    pub fn serialize(&self) -> String {
        let env = &self.env;
        let tr = &self.trainer;
        let df = &self.diffusion;
        let ex = &self.experiment;
        let devices = env.devices.iter().map(|&d| fmt_point(d)).collect::<Vec<_>>().join("; ");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("[env]\narea_x", format!("{:?}", env.area_x));
        put("area_y", format!("{:?}", env.area_y));
        put("start", fmt_point(env.start));
        put("dest", fmt_point(env.dest));
        put("altitude", format!("{:?}", env.altitude));
        put("v_max", format!("{:?}", env.v_max));
        put("horizon", env.horizon.to_string());
        put("dt", format!("{:?}", env.dt));
        put("bandwidth", format!("{:?}", env.bandwidth));
        put("tx_power", format!("{:?}", env.tx_power));
        put("energy_budget", format!("{:?}", env.energy_budget));
        put("devices", devices);
        put("random_devices", self.random_devices.to_string());
        put("device_seed", self.device_seed.to_string());
        put("beta0", format!("{:?}", env.beta0));
        put("noise_psd", format!("{:?}", env.noise_psd));
        put("v", format!("{:?}", env.v_weight));
        put("\n[trainer]\ngamma", format!("{:?}", tr.gamma));
        put("tau", format!("{:?}", tr.tau));
        put("batch", tr.batch.to_string());
        put("warmup", tr.warmup.to_string());
        put("actor_lr", format!("{:?}", tr.actor_lr));
        put("critic_lr", format!("{:?}", tr.critic_lr));
        put("episodes", tr.episodes.to_string());
        put("updates_per_step", tr.updates_per_step.to_string());
        put("seed", tr.seed.to_string());
        put("buffer_capacity", tr.buffer_capacity.to_string());
        put("grad_clip", format!("{:?}", tr.grad_clip));
        put("explore_sigma_start", format!("{:?}", tr.explore_sigma_start));
        put("explore_sigma_end", format!("{:?}", tr.explore_sigma_end));
        put("critic_hidden", fmt_widths(&tr.critic_hidden));
        put("actor_hidden", fmt_widths(&tr.actor_hidden));
        put(
            "critic_action",
            match tr.critic_action {
                CriticAction::Squashed => "squashed",
                CriticAction::Raw => "raw",
            }
            .into(),
        );
        put("action_bound", format!("{:?}", tr.action_bound));
        put("\n[diffusion]\nsteps", df.steps.to_string());
        put("beta_min", format!("{:?}", df.beta_min));
        put("beta_max", format!("{:?}", df.beta_max));
        put("embed_dim", df.embed_dim.to_string());
        put("hidden", fmt_widths(&df.hidden));
        put("eval_chain_noise", df.eval_chain_noise.to_string());
        put("\n[experiment]\nagent", ex.agent.name().into());
        put("out", ex.out.display().to_string());
        put("eval_episodes", ex.eval_episodes.to_string());
        put(
            "checkpoint",
            ex.checkpoint.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        put("sweep_param", ex.sweep_param.clone().unwrap_or_default());
        put("sweep_values", fmt_reals(&ex.sweep_values));
        put("sweep_mode", ex.sweep_mode.name().into());
        s
    }
}

/// Keys assigned by a document, in order, with their raw values.
fn parse_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut section: Option<String> = None;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !matches!(name, "env" | "trainer" | "diffusion" | "experiment") {
                return Err(HarnessError::config(name, format!("line {}: unknown section", n + 1)));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(HarnessError::config(
                line,
                format!("line {}: expected `key = value`", n + 1),
            ));
        };
        let k = k.trim();
        let key = match &section {
            Some(s) if !k.contains('.') => format!("{s}.{k}"),
            Some(s) => return Err(HarnessError::config(format!("{s}.{k}"), "unknown key")),
            None => k.to_string(),
        };
        pairs.push((key, v.trim().to_string()));
    }
    Ok(pairs)
}

/// Defaults, then the document, validated.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    resolve(text, &[], None, None)
}

/// Builds a run configuration from a document plus command-line input.
///
/// Seed precedence: `cli_seed`, then a `trainer.seed` set by the document or
/// an override, then `env_seed` (the raw `LYAPGDM_SEED` value), then the
/// default.
pub fn resolve(
    text: &str,
    overrides: &[(String, String)],
    cli_seed: Option<u64>,
    env_seed: Option<&str>,
) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seed_given = false;
    let pairs = parse_lines(text)?;
    for (k, v) in pairs.iter().chain(overrides) {
        cfg.set(k, v)?;
        seed_given |= k == "trainer.seed";
    }
    if let (false, Some(raw)) = (seed_given, env_seed) {
        cfg.trainer.seed = seed(SEED_ENV_VAR, raw.trim())?;
    }
    if let Some(s) = cli_seed {
        cfg.trainer.seed = s;
    }
    cfg.finalize()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lyapgdm_core::Error;
    use proptest::prelude::*;

    fn key_of(e: HarnessError) -> String {
        match e {
            HarnessError::Core(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn empty_document_is_default() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.env.horizon, 100);
        assert_eq!(cfg.env.bandwidth, 1e6);
        assert_eq!(cfg.env.energy_budget, 140.0);
        assert_eq!(cfg.env.dest, Vec2::new(600.0, 0.0));
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(parse_config("[env]\nv_max = -1").unwrap_err()), "env.v_max");
        assert_eq!(key_of(parse_config("[env]\nwarp = 9").unwrap_err()), "env.warp");
        assert_eq!(key_of(parse_config("[trainer]\nbatch = many").unwrap_err()), "trainer.batch");
        assert_eq!(key_of(parse_config("[diffusion]\nembed_dim = 7").unwrap_err()), "diffusion.embed_dim");
        assert_eq!(key_of(parse_config("[env]\nbandwidth = inf").unwrap_err()), "env.bandwidth");
        assert_eq!(key_of(parse_config("[env]\ndest = 600").unwrap_err()), "env.dest");
        assert_eq!(key_of(parse_config("[experiment]\nagent = ppo").unwrap_err()), "experiment.agent");
        assert_eq!(key_of(parse_config("[optim]\n").unwrap_err()), "optim");
        assert_eq!(
            key_of(parse_config("[experiment]\nsweep_param = env.nonsense").unwrap_err()),
            "experiment.sweep_param"
        );
    }

    #[test]
    fn overrides_beat_the_document() {
        let overrides = vec![("env.bandwidth".to_string(), "2e6".to_string())];
        let cfg = resolve("[env]\nbandwidth = 1e6\n", &overrides, None, None).unwrap();
        assert_eq!(cfg.env.bandwidth, 2e6);
        let bad = vec![("env.nope".to_string(), "1".to_string())];
        assert_eq!(key_of(resolve("", &bad, None, None).unwrap_err()), "env.nope");
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve("", &[], None, None).unwrap().trainer.seed, 0);
        assert_eq!(resolve("", &[], None, Some("17")).unwrap().trainer.seed, 17);
        assert_eq!(resolve("[trainer]\nseed = 5", &[], None, Some("17")).unwrap().trainer.seed, 5);
        assert_eq!(resolve("[trainer]\nseed = 5", &[], Some(9), Some("17")).unwrap().trainer.seed, 9);
        let ov = vec![("trainer.seed".to_string(), "3".to_string())];
        assert_eq!(resolve("", &ov, None, Some("17")).unwrap().trainer.seed, 3);
        assert_eq!(key_of(resolve("", &[], None, Some("x")).unwrap_err()), SEED_ENV_VAR);
    }

    #[test]
    fn random_layout_is_seeded() {
        let a = parse_config("[env]\nrandom_devices = 5\ndevice_seed = 4").unwrap();
        let b = parse_config("[env]\ndevice_seed = 4\nrandom_devices = 5").unwrap();
        assert_eq!(a.env.devices.len(), 5);
        assert_eq!(a, b);
        assert_eq!(parse_config(&a.serialize()).unwrap(), a);
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (50.0f64..1000.0, 50.0f64..1000.0, 0.0f64..1.0, 1.0f64..300.0, 5.0f64..40.0),
            (1usize..200, 0.1f64..2.0, 1e5f64..1e7, 1e-3f64..1.0, 50.0f64..300.0),
            proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..5),
            (0.0f64..1.0, 1e-3f64..1.0, 1usize..512, 0usize..5000, any::<u64>()),
            proptest::collection::vec(1usize..300, 1..4),
            (1usize..10, 0.01f64..1.0, 1.0f64..20.0, 1usize..16, any::<bool>()),
            (0usize..5, proptest::collection::vec(1e4f64..1e7, 0..5), any::<bool>(), 0.5f64..5.0),
        )
            .prop_map(|(geo, radio, devs, tr, hidden, df, ex)| {
                let mut c = RunConfig::default();
                let (ax, ay, frac, alt, vmax) = geo;
                c.env.area_x = ax;
                c.env.area_y = ay;
                c.env.dest = Vec2::new(ax * frac, 0.0);
                c.env.altitude = alt;
                c.env.v_max = vmax;
                let (horizon, dt, bw, p, budget) = radio;
                c.env.horizon = horizon;
                c.env.dt = dt;
                // keep the destination reachable
                c.env.dest = Vec2::new((ax * frac).min(horizon as f64 * dt * vmax), 0.0);
                c.env.bandwidth = bw;
                c.env.tx_power = p;
                c.env.energy_budget = budget;
                c.env.devices = devs.iter().map(|&(u, v)| Vec2::new(u * ax, v * ay)).collect();
                let (gamma, tau, batch, warmup, seed) = tr;
                c.trainer.gamma = gamma;
                c.trainer.tau = tau;
                c.trainer.batch = batch;
                c.trainer.buffer_capacity = batch.max(1000);
                c.trainer.warmup = warmup;
                c.trainer.seed = seed;
                c.trainer.critic_hidden = hidden.clone();
                let (steps, bmin, bmax, half_embed, noise) = df;
                c.diffusion.steps = steps;
                c.diffusion.beta_min = bmin;
                c.diffusion.beta_max = bmax;
                c.diffusion.embed_dim = 2 * half_embed;
                c.diffusion.hidden = hidden;
                c.diffusion.eval_chain_noise = noise;
                let (agent, values, train, bound) = ex;
                c.experiment.agent = PolicyKind::ALL[agent];
                c.experiment.sweep_values = values;
                c.experiment.sweep_param = train.then(|| "env.bandwidth".to_string());
                c.experiment.sweep_mode = if train { SweepMode::Train } else { SweepMode::Eval };
                c.experiment.checkpoint = train.then(|| PathBuf::from("runs/x/checkpoints/final"));
                c.trainer.action_bound = bound;
                c.trainer.critic_action = if train { CriticAction::Raw } else { CriticAction::Squashed };
                c
            })
    }

    proptest! {
        #[test]
        fn serialize_round_trips(cfg in arb_config()) {
            let text = cfg.serialize();
            prop_assert_eq!(parse_config(&text).unwrap(), cfg);
        }
    }
}
