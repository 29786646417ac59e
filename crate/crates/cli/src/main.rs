use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use edgemoe_core::baselines::PolicyKind;
use edgemoe_core::harness::{self, load_config, RunConfig};
use edgemoe_core::Error;

#[derive(Parser)]
#[command(name = "edgemoe", version, about = "Train and evaluate edge-expert selection for MoE offloading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent; writes metrics.csv and checkpoint.moesac.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint against the reference policies; writes eval.csv.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate consecutive seeds starting at the config seed.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a metrics CSV (and optionally an eval CSV) into plot-ready tables.
    PlotData {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default configuration as TOML.
    DefaultConfig,
}

fn config_with(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig, Error> {
    let mut cfg = load_config(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let cfg = config_with(&config, seed, out)?;
            let outcome = harness::train(&cfg, &cfg.out_dir)?;
            let last = outcome.records.last().expect("at least one epoch");
            println!(
                "trained {} epochs; final epoch mean reward {:.4} (upper {:.4}, benchmark {:.4}, random {:.4})",
                outcome.records.len(),
                last.mean_reward,
                last.ref_upper,
                last.ref_benchmark,
                last.ref_random
            );
            println!("metrics: {}", outcome.metrics_path.display());
            println!("checkpoint: {}", outcome.checkpoint_path.display());
        }
        Command::Eval { checkpoint, config, out } => {
            let cfg = config_with(&config, None, out)?;
            let report = harness::evaluate_checkpoint(&checkpoint, &cfg, &cfg.out_dir)?;
            println!("policy        mean_reward  final_reward");
            for s in &report.stats {
                println!("{:<12} {:>12.4} {:>13.4}", s.policy, s.mean_reward, s.final_reward);
            }
            println!("report: {}", cfg.out_dir.join(harness::EVAL_FILE).display());
        }
        Command::Sweep { config, seeds, jobs, out } => {
            let cfg = config_with(&config, None, out)?;
            let results = harness::sweep(&cfg, seeds, jobs, &cfg.out_dir)?;
            for r in &results {
                println!(
                    "seed {}: sac {:.4} random {:.4} benchmark {:.4} upper {:.4} oracle {:.4}",
                    r.seed,
                    r.eval.mean(PolicyKind::Sac),
                    r.eval.mean(PolicyKind::Random),
                    r.eval.mean(PolicyKind::Benchmark),
                    r.eval.mean(PolicyKind::UpperBound),
                    r.eval.mean(PolicyKind::Oracle)
                );
            }
            println!("summary: {}", cfg.out_dir.join(harness::SWEEP_FILE).display());
        }
        Command::PlotData { metrics, eval, out } => {
            let files = harness::emit_plot_data(&metrics, eval.as_deref(), &out)?;
            println!("curve: {}", files.curve.display());
            println!("bars: {}", files.bars.display());
        }
        Command::DefaultConfig => print!("{}", RunConfig::default().to_toml_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
