//! Command-line front end.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{self, RunConfig, SEED_ENV_VAR};
use crate::error::{HarnessError, Result};
use crate::experiments;
use crate::plot::{self, PlotKind};

const SECTIONS: [&str; 4] = ["env.", "trainer.", "diffusion.", "experiment."];

#[derive(Debug, Parser)]
#[command(
    name = "lyapgdm",
    version,
    about = "Train and evaluate drift-plus-penalty UAV controllers",
    after_help = "Any config key can be overridden as a flag, e.g. `--env.bandwidth 2e6`.\n\
                  The seed falls back to $LYAPGDM_SEED when neither --seed nor the config sets it."
)]
pub struct Cli {
    /// Sectioned key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// gdm-ddpg, mlp-ddpg, myopic, static or random.
    #[arg(long, global = true)]
    pub agent: Option<String>,
    /// Output directory (the SVG file for `plot`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a learned agent; writes metrics.csv and checkpoints.
    Train,
    /// Roll out a policy; writes trace.csv with a summary footer.
    Eval {
        /// Checkpoint directory for learned agents.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate (or retrain) once per value of one config key.
    Sweep {
        /// Dotted config key, e.g. env.bandwidth.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long)]
        values: Option<String>,
        /// eval or train.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Render CSVs as an SVG line chart.
    Plot {
        /// training-curve, rate-vs-bandwidth or energy-vs-time.
        #[arg(long)]
        kind: String,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

/// Dotted-key overrides in command-line order.
pub type Overrides = Vec<(String, String)>;

/// Removes `--section.key value` and `--section.key=value` pairs from
/// `args`, returning the remaining arguments and the overrides in order.
pub fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--").filter(|f| SECTIONS.iter().any(|s| f.starts_with(s))) else {
            rest.push(arg);
            continue;
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| HarnessError::config(flag, "override is missing its value"))?;
                (flag.to_string(), v)
            }
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

/// Resolves the run configuration from the file, flags, overrides and the
/// seed environment variable.
pub fn load_config(cli: &Cli, overrides: &[(String, String)], env_seed: Option<&str>) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?,
        None => String::new(),
    };
    let mut all = Vec::new();
    if let Some(agent) = &cli.agent {
        all.push(("experiment.agent".to_string(), agent.clone()));
    }
    if let Some(out) = &cli.out {
        all.push(("experiment.out".to_string(), out.display().to_string()));
    }
    match &cli.command {
        Command::Eval { checkpoint } => {
            if let Some(c) = checkpoint {
                all.push(("experiment.checkpoint".into(), c.display().to_string()));
            }
        }
        Command::Sweep {
            param,
            values,
            mode,
            checkpoint,
        } => {
            let pairs = [
                ("experiment.sweep_param", param.clone()),
                ("experiment.sweep_values", values.clone()),
                ("experiment.sweep_mode", mode.clone()),
                ("experiment.checkpoint", checkpoint.as_ref().map(|c| c.display().to_string())),
            ];
            all.extend(pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        }
        Command::Train | Command::Plot { .. } => {}
    }
    all.extend_from_slice(overrides);
    config::resolve(&text, &all, cli.seed, env_seed)
}

/// Runs one invocation; `args` excludes the program name. Returns the
/// process exit code.
pub fn run(args: Vec<String>) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(Failure::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(Failure::Harness(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum Failure {
    Clap(clap::Error),
    Harness(HarnessError),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Harness(e)
    }
}

fn dispatch(args: Vec<String>) -> std::result::Result<(), Failure> {
    let (rest, overrides) = split_overrides(args)?;
    let cli = Cli::try_parse_from(std::iter::once("lyapgdm".to_string()).chain(rest)).map_err(Failure::Clap)?;
    if let Command::Plot { kind, inputs } = &cli.command {
        let kind: PlotKind = kind.parse()?;
        let out = cli
            .out
            .clone()
            .ok_or_else(|| HarnessError::Usage("plot needs --out <file.svg>".into()))?;
        let paths: Vec<&std::path::Path> = inputs.iter().map(|p| p.as_path()).collect();
        plot::emit_plot(&paths, kind, &out)?;
        println!("wrote {}", out.display());
        return Ok(());
    }
    let env_seed = std::env::var(SEED_ENV_VAR).ok();
    let cfg = load_config(&cli, &overrides, env_seed.as_deref())?;
    let out = cfg.experiment.out.display().to_string();
    match cli.command {
        Command::Train => {
            let metrics = experiments::run_train(&cfg)?;
            let last = metrics.last();
            println!(
                "trained {} for {} episodes (seed {}); final reward {:.4}; wrote {out}/metrics.csv",
                cfg.experiment.agent.name(),
                metrics.len(),
                cfg.trainer.seed,
                last.map_or(f64::NAN, |m| m.reward_mean)
            );
        }
        Command::Eval { .. } => {
            let s = experiments::run_eval(&cfg)?;
            println!(
                "{}: rate {:.4} Mbps, energy {:.3} J, final queue {:.4}, reward {:.4}; wrote {out}/trace.csv",
                s.agent, s.mean_rate_mbps, s.mean_energy_j, s.final_queue, s.reward_mean
            );
        }
        Command::Sweep { .. } => {
            for r in experiments::run_sweep(&cfg)? {
                println!("{} = {}: rate {:.4} Mbps", r.param, r.value, r.summary.mean_rate_mbps);
            }
            println!("wrote {out}/sweep.csv");
        }
        Command::Plot { .. } => unreachable!("handled above"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overrides_are_split_out() {
        let (rest, ov) = split_overrides(strings(&[
            "train",
            "--env.bandwidth",
            "2e6",
            "--seed",
            "3",
            "--trainer.episodes=2",
        ]))
        .unwrap();
        assert_eq!(rest, strings(&["train", "--seed", "3"]));
        assert_eq!(
            ov,
            vec![
                ("env.bandwidth".to_string(), "2e6".to_string()),
                ("trainer.episodes".to_string(), "2".to_string())
            ]
        );
        assert!(split_overrides(strings(&["train", "--env.v_max"])).is_err());
    }

    #[test]
    fn flags_feed_the_config() {
        let (rest, ov) = split_overrides(strings(&[
            "sweep",
            "--agent",
            "myopic",
            "--param",
            "env.bandwidth",
            "--values",
            "5e5,1e6",
            "--env.v",
            "0.25",
        ]))
        .unwrap();
        let cli = Cli::try_parse_from(std::iter::once("lyapgdm".to_string()).chain(rest)).unwrap();
        let cfg = load_config(&cli, &ov, Some("11")).unwrap();
        assert_eq!(cfg.experiment.agent.name(), "myopic");
        assert_eq!(cfg.experiment.sweep_values, vec![5e5, 1e6]);
        assert_eq!(cfg.env.v_weight, 0.25);
        assert_eq!(cfg.trainer.seed, 11);
    }
}
