use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csi_predict::commands::{cmd_generate, cmd_sweep, cmd_train, cmd_verify};
use csi_predict::config::ExperimentConfig;
use csi_predict::sweep::Figure;
use csi_predict::verify::{all_passed, VerifyOptions};

/// Effective-SINR CSI prediction experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Global seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and its manifest.
    Generate,
    /// Fit every configured predictor.
    Train,
    /// Run the sweep behind one results figure.
    Sweep {
        /// Figure key, e.g. fd_tcsi or tdd_throughput.
        #[arg(long)]
        figure: String,
    },
    /// Run the oracle suite.
    Verify {
        /// Negative control: corrupt the CQI table first.
        #[arg(long, hide = true)]
        corrupt_cqi_table: bool,
        /// Negative control: perturb analytic gradients.
        #[arg(long, hide = true)]
        gradient_bug: bool,
    },
}

fn run(cli: Cli) -> csi_predict::Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.unwrap_or_else(|| cfg.out_dir.clone());
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| csi_predict::Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Generate => {
            let m = cmd_generate(&cfg, &out)?;
            println!(
                "{}: {} / {} / {} windows",
                out.display(),
                m.train_windows,
                m.val_windows,
                m.test_windows
            );
        }
        Command::Train => {
            for d in cmd_train(&cfg, &out)? {
                println!("{}", d.display());
            }
        }
        Command::Sweep { figure } => {
            let figure: Figure = figure.parse()?;
            for p in cmd_sweep(&cfg, figure, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Verify {
            corrupt_cqi_table,
            gradient_bug,
        } => {
            let checks = cmd_verify(
                &cfg,
                VerifyOptions {
                    corrupt_cqi_table,
                    gradient_bug,
                    ..VerifyOptions::default()
                },
            )?;
            for c in &checks {
                println!("{c}");
            }
            return Ok(all_passed(&checks));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, csi_predict::Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
