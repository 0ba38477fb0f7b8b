//! Runs a shipped configuration through the harness and writes per-seed CSV
//! files and `summary.json` to a temporary directory.
//!
//! ```text
//! cargo run --release --example harness_run -- crates/core/configs/separable_perfect.json
//! ```

use std::path::PathBuf;

use coco_mem::harness::{run_experiment, ExperimentConfig};

fn main() -> coco_mem::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/appendix_a_stochastic.json")
    });
    let cfg = ExperimentConfig::load(&path)?;
    let out = std::env::temp_dir().join("coco-mem-example");
    let summary = run_experiment(&cfg, &out, None)?;

    println!("{} seed(s) written to {}", summary.completed_seeds.len(), out.display());
    for c in &summary.checkpoints {
        if let (Some(r), Some(v)) = (&c.regret_over_t, &c.ccv_over_t) {
            println!(
                "t = {:>5}: R/t = {:.4} ± {:.4}, V/t = {:.4} ± {:.4}",
                c.t, r.mean, r.std, v.mean, v.std
            );
        }
    }
    Ok(())
}
