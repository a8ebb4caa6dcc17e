use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use eegnet_cli::commands;
use eegnet_cli::config::ExperimentConfig;
use eegnet_cli::{exit_code, CliError};
use eegnet_core::stats::FdrMethod;

#[derive(Parser)]
#[command(
    name = "eegnet",
    version,
    about = "Train and evaluate compact EEG convolutional networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run folds on a single thread.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Worker threads for parallel folds (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured model on every fold.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also save the best snapshot of every fold.
        #[arg(long)]
        save_models: bool,
    },
    /// Train all twelve kernel configurations and rank them.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Train the five regularization variants.
    Ablation {
        #[command(flatten)]
        common: Common,
    },
    /// Test metric against training-set size.
    LearnCurve {
        #[command(flatten)]
        common: Common,
    },
    /// Paired sign-rank tests between two result bundles.
    Compare {
        /// Reference bundle (file or directory).
        reference: PathBuf,
        /// Bundle whose runs are tested against the reference.
        model: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        q: f64,
        /// Use the step-up variant valid under arbitrary dependence.
        #[arg(long)]
        dependent: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the configured synthetic dataset as epoch files and a manifest.
    GenSynth {
        #[command(flatten)]
        common: Common,
    },
    /// Describe an epoch file, model file, bundle, manifest or config.
    Inspect { path: PathBuf },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = match (&common.out, &cfg.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) if o.is_relative() => common.config.parent().unwrap_or(Path::new(".")).join(o),
        (None, Some(o)) => o.clone(),
        (None, None) => {
            return Err(CliError::Config(vec!["output_dir: required (or pass --out)".into()]).into());
        }
    };
    cfg.output_dir = Some(out.clone());
    Ok((cfg, out))
}

fn dispatch(cli: Cli) -> Result<()> {
    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run { common, save_models } => {
            let (cfg, out) = load(&common)?;
            let b = commands::cmd_run(&cfg, &out, save_models)?;
            println!("{}", b.fingerprint);
        }
        Command::Sweep { common } => {
            let (cfg, out) = load(&common)?;
            let (b, _) = commands::cmd_sweep(&cfg, &out)?;
            println!("{}", b.fingerprint);
        }
        Command::Ablation { common } => {
            let (cfg, out) = load(&common)?;
            let b = commands::cmd_ablation(&cfg, &out)?;
            println!("{}", b.fingerprint);
        }
        Command::LearnCurve { common } => {
            let (cfg, out) = load(&common)?;
            let b = commands::cmd_learning_curve(&cfg, &out)?;
            println!("{}", b.fingerprint);
        }
        Command::Compare {
            reference,
            model,
            q,
            dependent,
            out,
        } => {
            if !(q > 0.0 && q < 1.0) {
                return Err(CliError::Config(vec![format!("q: {q} outside (0, 1)")]).into());
            }
            let method = if dependent {
                FdrMethod::Dependent
            } else {
                FdrMethod::Independent
            };
            let rows = commands::cmd_compare(&reference, &model, q, method, &out)?;
            for r in rows {
                println!(
                    "{} vs {}: p {:.4} adjusted {:.4}{}",
                    r.model,
                    r.reference,
                    r.p,
                    r.p_adjusted,
                    if r.rejected { " *" } else { "" }
                );
            }
        }
        Command::GenSynth { common } => {
            let (cfg, out) = load(&common)?;
            let manifest = commands::cmd_gen_synth(&cfg, &out)?;
            println!("{}", manifest.display());
        }
        Command::Inspect { path } => print!("{}", commands::inspect(&path)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
