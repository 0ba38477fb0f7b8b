//! The optimistic learner on a separable instance under three predictors.
//! Perfect hints remove the learner's need to adapt; zero hints fall back
//! to a plain FTRL step; noisy hints sit in between.

use std::sync::Arc;

use coco_mem::environments::{PredictorKind, SeparableInstance, SeparableParams};
use coco_mem::metrics::{regret_series, separable_series, BenchmarkClass};
use coco_mem::optimistic::{OdafLearner, OdafSettings, SliceSource};
use coco_mem::penalty::Penalty;
use coco_mem::trace::RunTrace;

fn main() -> coco_mem::Result<()> {
    let params = SeparableParams::default();
    let inst = Arc::new(SeparableInstance::generate(params.clone(), 3)?);
    let bench = separable_series(&inst, BenchmarkClass::SliceWise)?;

    println!("{:<14} {:>10} {:>10} {:>10} {:>10}", "predictor", "regret", "CCV", "E_f", "E_g");
    for (label, kind) in [
        ("perfect", PredictorKind::Perfect),
        ("zero", PredictorKind::Zero),
        ("noisy 0.05", PredictorKind::Noisy { scale: 0.05 }),
        ("noisy 0.5", PredictorKind::Noisy { scale: 0.5 }),
    ] {
        let predictor = kind.build(inst.clone(), 11)?;
        let mut learner = OdafLearner::new(OdafSettings {
            variant: params.variant,
            set: inst.feasible_set().clone(),
            memory: params.memory,
            horizon: params.horizon,
            penalty: Penalty::exponential(0.05)?,
            alpha: None,
        })?;
        let mut trace = RunTrace::new(params.variant, params.memory);
        for t in 1..=params.horizon {
            trace.records.push(learner.round(&inst.round_slices(t), &*predictor)?);
        }
        let series = regret_series(&trace, &bench)?;
        let (_, e_f, e_g) = learner.error_totals();
        println!(
            "{:<14} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            label,
            series.final_static().unwrap_or(f64::NAN),
            series.final_ccv(),
            e_f,
            e_g,
        );
    }
    Ok(())
}
