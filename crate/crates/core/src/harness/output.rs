use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::environments::GENERATOR;
use crate::error::{Error, Result};
use crate::metrics::{BoundReport, InequalityCheck};

use super::config::ExperimentConfig;
use super::run::{run_seed, SeedRun, Stat};

pub const CSV_HEADER: &str =
    "t,x,f_mem,g_mem,g_plus_recorded,V_t,eta_or_mu,eps_f,eps_g,eps_Z,regret_static_cum,regret_perround_cum,ccv_cum";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedSeed {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub t: usize,
    pub regret_over_t: Option<Stat>,
    pub ccv_over_t: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_regret: Option<f64>,
    pub final_ccv: f64,
    pub epochs: usize,
    pub benchmark_total: Option<f64>,
    pub bound: Option<BoundReport>,
    pub bound_error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<InequalityCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub generator: &'static str,
    pub completed_seeds: Vec<u64>,
    pub failed_seeds: Vec<FailedSeed>,
    pub checkpoints: Vec<CheckpointSummary>,
    pub per_seed: Vec<SeedSummary>,
}

impl Summary {
    /// Every recorded inequality holds.
    pub fn checks_hold(&self) -> bool {
        self.per_seed.iter().flat_map(|s| &s.checks).all(|c| c.holds)
    }
}

/// Runs every seed, on `parallel` threads when given. Results keep the
/// configured seed order.
pub fn run_seeds(
    cfg: &ExperimentConfig,
    parallel: Option<usize>,
    with_checks: bool,
) -> Result<(Vec<SeedRun>, Vec<FailedSeed>)> {
    let go = || -> Vec<(u64, Result<SeedRun>)> {
        cfg.seeds
            .par_iter()
            .map(|&seed| (seed, run_seed(cfg, seed, with_checks)))
            .collect()
    };
    let results = match parallel {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {k} worker threads: {e}")))?
            .install(go),
        None => go(),
    };
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(run) => runs.push(run),
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => failed.push(FailedSeed {
                seed,
                error: e.to_string(),
            }),
        }
    }
    Ok((runs, failed))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Per-round CSV of one seed, starting at the first scored round.
pub fn seed_csv(run: &SeedRun) -> String {
    let mut out = String::with_capacity(128 * (run.series.rounds.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let first = run.benchmark.first_round;
    let records = run.trace.records.iter().filter(|r| r.t >= first);
    for (k, r) in records.enumerate() {
        let s = &run.series;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.x,
            r.f_mem,
            r.g_mem,
            r.dual_increment,
            r.dual,
            r.step,
            r.eps_f,
            r.eps_g,
            r.eps_z,
            opt(s.static_cum[k]),
            opt(s.per_round_cum[k]),
            s.ccv_cum[k],
        )
        .expect("writing to a string cannot fail");
    }
    out
}

pub fn summarize(cfg: &ExperimentConfig, runs: &[SeedRun], failed: Vec<FailedSeed>) -> Summary {
    let checkpoints = cfg
        .resolved_checkpoints()
        .into_iter()
        .map(|t| {
            let regrets: Vec<f64> = runs.iter().filter_map(|r| r.series.static_at(t)).map(|v| v / t as f64).collect();
            let ccvs: Vec<f64> = runs.iter().filter_map(|r| r.series.ccv_at(t)).map(|v| v / t as f64).collect();
            CheckpointSummary {
                t,
                regret_over_t: Stat::of(&regrets),
                ccv_over_t: Stat::of(&ccvs),
            }
        })
        .collect();
    let per_seed = runs
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            final_regret: r.series.final_static(),
            final_ccv: r.series.final_ccv(),
            epochs: r.epochs,
            benchmark_total: r.benchmark.best.as_ref().map(|b| b.total),
            bound: r.bound.as_ref().ok().cloned(),
            bound_error: r.bound.as_ref().err().cloned(),
            checks: r.checks.clone(),
        })
        .collect();
    Summary {
        config: cfg.clone(),
        generator: GENERATOR,
        completed_seeds: runs.iter().map(|r| r.seed).collect(),
        failed_seeds: failed,
        checkpoints,
        per_seed,
    }
}

/// Writes `seed_<seed>.csv` for every completed seed and `summary.json`.
pub fn write_outputs(dir: &Path, runs: &[SeedRun], summary: &Summary) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for run in runs {
        std::fs::write(dir.join(format!("seed_{}.csv", run.seed)), seed_csv(run))?;
    }
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;
    Ok(())
}

/// Runs the experiment and writes its outputs to `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path, parallel: Option<usize>) -> Result<Summary> {
    let (runs, failed) = run_seeds(cfg, parallel, false)?;
    let summary = summarize(cfg, &runs, failed);
    write_outputs(dir, &runs, &summary)?;
    Ok(summary)
}
