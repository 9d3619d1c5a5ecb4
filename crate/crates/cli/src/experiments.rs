//! Training, evaluation and sweep runs writing into an output directory.
//!
//! Layout of `out`:
//! - `config.txt`: the resolved configuration
//! - `metrics.csv`: one row per training episode
//! - `checkpoints/episode-NNNNN/`, `checkpoints/final/`
//! - `trace.csv`: per-slot evaluation trace with a summary footer
//! - `sweep.csv`: one summary row per swept value

use std::fs;
use std::path::{Path, PathBuf};

use lyapgdm_core::baselines::ActionGrid;
use lyapgdm_core::env::Env;
use lyapgdm_core::policy::{run_episode, LearnedPolicy, MyopicPolicy, Policy, PolicyKind, RandomPolicy, StaticPolicy};
use lyapgdm_core::trainer::{train_run, AgentKind, CheckpointManifest, EpisodeMetrics, TrainSetup};

use crate::config::{RunConfig, SweepMode};
use crate::error::{HarnessError, Result};
use crate::records::{self, EvalSummary, SweepRow, TraceRow};

pub const CHECKPOINT_EVERY: usize = 100;

fn learned_kind(kind: PolicyKind) -> Result<AgentKind> {
    match kind {
        PolicyKind::GdmDdpg => Ok(AgentKind::GdmDdpg),
        PolicyKind::MlpDdpg => Ok(AgentKind::MlpDdpg),
        other => Err(HarnessError::config(
            "experiment.agent",
            format!("{} is not a trainable agent", other.name()),
        )),
    }
}

pub fn train_setup(cfg: &RunConfig, agent: AgentKind) -> TrainSetup {
    TrainSetup {
        env: cfg.env.clone(),
        trainer: cfg.trainer.clone(),
        diffusion: cfg.diffusion.clone(),
        agent,
    }
}

pub fn final_checkpoint(out: &Path) -> PathBuf {
    out.join("checkpoints").join("final")
}

fn write_config(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.experiment.out;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let path = out.join("config.txt");
    fs::write(&path, cfg.serialize()).map_err(|e| HarnessError::io(&path, e))
}

/// Trains the configured learned agent. Metrics are also flushed at every
/// intermediate checkpoint.
pub fn run_train(cfg: &RunConfig) -> Result<Vec<EpisodeMetrics>> {
    let agent = learned_kind(cfg.experiment.agent)?;
    let setup = train_setup(cfg, agent);
    let out = cfg.experiment.out.clone();
    write_config(cfg)?;
    let metrics_path = out.join("metrics.csv");
    let mut rows: Vec<EpisodeMetrics> = Vec::with_capacity(cfg.trainer.episodes);
    let episodes = cfg.trainer.episodes;
    let seed = cfg.trainer.seed;
    let manifest = |episode: usize| CheckpointManifest::new(agent, episode, seed, &setup.env);
    let outcome = train_run(&setup, |m, nets| {
        rows.push(m.clone());
        let done = m.episode + 1;
        if done % CHECKPOINT_EVERY == 0 && done < episodes {
            let dir = out.join("checkpoints").join(format!("episode-{done:05}"));
            nets.save(&dir, &manifest(done))?;
            records::write_metrics(&metrics_path, &rows)
                .map_err(|e| lyapgdm_core::Error::Format(e.to_string()))?;
        }
        Ok(())
    })?;
    records::write_metrics(&metrics_path, &outcome.metrics)?;
    outcome.nets.save(&final_checkpoint(&out), &manifest(episodes))?;
    Ok(outcome.metrics)
}

/// Builds the evaluation policy; learned agents are restored from
/// `checkpoint`.
pub fn build_policy(cfg: &RunConfig, kind: PolicyKind, checkpoint: &Path) -> Result<Box<dyn Policy>> {
    let seed = cfg.trainer.seed;
    Ok(match kind {
        PolicyKind::GdmDdpg | PolicyKind::MlpDdpg => {
            if !checkpoint.join("manifest.json").is_file() {
                return Err(HarnessError::Usage(format!(
                    "no checkpoint at {} (train first or set experiment.checkpoint)",
                    checkpoint.display()
                )));
            }
            let mut nets = train_setup(cfg, learned_kind(kind)?).build_agent()?;
            nets.load(checkpoint)?;
            Box::new(LearnedPolicy::new(nets.actor.clone(), nets.actor_params.clone(), seed))
        }
        PolicyKind::Myopic => Box::new(MyopicPolicy {
            grid: ActionGrid::default_for(&cfg.env)?,
        }),
        PolicyKind::Static => Box::new(StaticPolicy),
        PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
    })
}

/// Plays `experiment.eval_episodes` episodes and summarizes them.
pub fn evaluate(cfg: &RunConfig, policy: &mut dyn Policy) -> Result<(Vec<TraceRow>, EvalSummary)> {
    let env = Env::new(cfg.env.clone())?;
    let episodes = cfg.experiment.eval_episodes;
    let mut rows = Vec::with_capacity(episodes * cfg.env.horizon);
    let mut finals = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let slots = run_episode(&env, policy)?;
        finals.push(slots.last().map_or(0.0, |s| s.queue));
        rows.extend(slots.iter().map(|s| TraceRow::from_slot(episode, s)));
    }
    let n = rows.len().max(1) as f64;
    let summary = EvalSummary {
        agent: policy.name().to_string(),
        episodes,
        mean_rate_mbps: rows.iter().map(|r| r.rate_mbps).sum::<f64>() / n,
        mean_energy_j: rows.iter().map(|r| r.energy_j).sum::<f64>() / n,
        final_queue: finals.iter().sum::<f64>() / episodes as f64,
        max_final_queue: finals.iter().cloned().fold(0.0, f64::max),
        reward_mean: rows.iter().map(|r| r.reward).sum::<f64>() / n,
    };
    Ok((rows, summary))
}

fn checkpoint_dir(cfg: &RunConfig) -> PathBuf {
    cfg.experiment
        .checkpoint
        .clone()
        .unwrap_or_else(|| final_checkpoint(&cfg.experiment.out))
}

/// Evaluates the configured agent and writes `trace.csv`.
pub fn run_eval(cfg: &RunConfig) -> Result<EvalSummary> {
    let mut policy = build_policy(cfg, cfg.experiment.agent, &checkpoint_dir(cfg))?;
    let (rows, summary) = evaluate(cfg, policy.as_mut())?;
    write_config(cfg)?;
    records::write_trace(&cfg.experiment.out.join("trace.csv"), &rows, &summary, &cfg.env)?;
    Ok(summary)
}

/// Integral values print without a fraction so they also fit integer keys.
fn value_text(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// One summary per value of `experiment.sweep_param`. In eval mode a
/// learned agent reuses a single checkpoint; in train mode each value is
/// trained from scratch under `out/value-NN/`.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let ex = &cfg.experiment;
    let param = ex
        .sweep_param
        .clone()
        .ok_or_else(|| HarnessError::config("experiment.sweep_param", "no parameter to sweep"))?;
    if ex.sweep_values.is_empty() {
        return Err(HarnessError::config("experiment.sweep_values", "no values to sweep"));
    }
    let mut rows = Vec::with_capacity(ex.sweep_values.len());
    for (i, &value) in ex.sweep_values.iter().enumerate() {
        let mut point = cfg.clone();
        point.set(&param, &value_text(value))?;
        point.experiment.out = ex.out.join(format!("value-{i:02}"));
        point.finalize()?;
        if ex.sweep_mode == SweepMode::Train && ex.agent.is_learned() {
            point.experiment.checkpoint = None;
            run_train(&point)?;
        } else if ex.agent.is_learned() {
            point.experiment.checkpoint = Some(checkpoint_dir(cfg));
        }
        let summary = run_eval(&point)?;
        rows.push(SweepRow {
            param: param.clone(),
            value,
            summary,
        });
    }
    records::write_sweep(&ex.out.join("sweep.csv"), &rows)?;
    Ok(rows)
}
