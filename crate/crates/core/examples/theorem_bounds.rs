//! Regret and violation bounds next to measured values for the quadratic
//! penalty with the constant λ the theorems prescribe.

use coco_mem::harness::{run_seed, ExperimentConfig};

fn main() -> coco_mem::Result<()> {
    println!(
        "{:>6} {:>3} {:>7} {:>12} {:>12} {:>12} {:>12}",
        "T", "m", "variant", "regret", "bound", "CCV", "bound"
    );
    for horizon in [500, 2000, 8000] {
        for memory in [1, 3] {
            for variant in ["coco_m2", "coco_m"] {
                let cfg = ExperimentConfig::from_json(&format!(
                    r#"{{
                        "algorithm": "penalty_ogd",
                        "variant": "{variant}",
                        "horizon": {horizon},
                        "memory": {memory},
                        "environment": {{"kind": "appendix_a"}},
                        "penalty": {{"kind": "quadratic", "lambda": {{"mode": "fixed_theorem"}}}},
                        "seeds": [0]
                    }}"#
                ))?;
                let run = run_seed(&cfg, 0, false)?;
                let report = run.bound.map_err(coco_mem::Error::Precondition)?;
                println!(
                    "{horizon:>6} {memory:>3} {variant:>7} {:>12.1} {:>12.3e} {:>12.1} {:>12.3e}",
                    report.measured_regret.unwrap_or(f64::NAN),
                    report.regret_rhs,
                    report.measured_ccv.unwrap_or(f64::NAN),
                    report.ccv_rhs,
                );
            }
        }
    }
    Ok(())
}
