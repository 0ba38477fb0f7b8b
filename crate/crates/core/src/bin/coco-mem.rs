use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coco_mem::harness::{planned_bounds, run_experiment, run_seeds, summarize, ExperimentConfig, Instance};
use coco_mem::Error;

#[derive(Parser)]
#[command(name = "coco-mem", version, about = "Constrained online learning with memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed and write per-seed CSV files and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the configured seeds with 0..n.
        #[arg(long)]
        seeds: Option<u64>,
        /// Worker threads.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Run every seed and check bounds and intermediate inequalities.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the bound right-hand sides for the configuration.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf, seeds: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(n) = seeds {
        cfg.seeds = (0..n).collect();
        cfg.validate()?;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            parallel,
        } => load(&config, seeds).and_then(|cfg| {
            let dir = std::env::var_os("COCO_MEM_OUT")
                .map(PathBuf::from)
                .or(out)
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::Config("no output directory: pass --out or set COCO_MEM_OUT".into()))?;
            let summary = run_experiment(&cfg, &dir, parallel)?;
            for f in &summary.failed_seeds {
                eprintln!("seed {} failed: {}", f.seed, f.error);
            }
            println!(
                "wrote {} seed(s) to {}",
                summary.completed_seeds.len(),
                dir.display()
            );
            Ok(if summary.failed_seeds.is_empty() { 0 } else { 2 })
        }),
        Command::Verify { config } => load(&config, None).and_then(|cfg| {
            let (runs, failed) = run_seeds(&cfg, None, true)?;
            let summary = summarize(&cfg, &runs, failed);
            for s in &summary.per_seed {
                for c in &s.checks {
                    let status = if c.holds { "ok" } else { "FAILED" };
                    println!("seed {:>4}  {:<40} {status}  lhs={} rhs={}", s.seed, c.name, c.lhs, c.rhs);
                }
                if let Some(e) = &s.bound_error {
                    println!("seed {:>4}  bounds not applicable: {e}", s.seed);
                }
            }
            for f in &summary.failed_seeds {
                eprintln!("seed {} failed: {}", f.seed, f.error);
            }
            Ok(if !summary.failed_seeds.is_empty() {
                2
            } else if summary.checks_hold() {
                0
            } else {
                3
            })
        }),
        Command::Bounds { config } => load(&config, None).and_then(|cfg| {
            let instance = Instance::generate(&cfg, cfg.seeds[0])?;
            match planned_bounds(&cfg, &instance) {
                Ok(report) => println!("{}", serde_json::to_string_pretty(&report)?),
                Err(Error::Precondition(msg)) => {
                    println!("{}", serde_json::json!({ "precondition_failed": msg }));
                }
                Err(e) => return Err(e),
            }
            Ok(0)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
