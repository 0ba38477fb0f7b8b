//! Penalty-based OGD on the moving-target tracking instance with a
//! `1/√t` penalty schedule, reporting time-averaged regret and violation.
//!
//! ```text
//! cargo run --release --example appendix_a
//! ```

use coco_mem::domain::ProblemVariant;
use coco_mem::environments::{AdversaryMode, AppendixAInstance, AppendixAParams, MemoryEnvironment};
use coco_mem::metrics::{appendix_a_series, regret_series};
use coco_mem::ogd::OgdLearner;
use coco_mem::penalty::{LambdaSchedule, PenaltyKind};
use coco_mem::trace::RunTrace;

fn main() -> coco_mem::Result<()> {
    for mode in [AdversaryMode::Stochastic, AdversaryMode::AdversarialMixture] {
        let params = AppendixAParams {
            mode,
            ..AppendixAParams::default()
        };
        let inst = AppendixAInstance::generate(params.clone(), 0)?;
        let mut learner = OgdLearner::new(
            inst.set().clone(),
            ProblemVariant::CocoM2,
            PenaltyKind::Quadratic,
            LambdaSchedule::InvSqrtRound,
            params.memory,
        )?;
        let mut trace = RunTrace::new(ProblemVariant::CocoM2, params.memory);
        for t in inst.rounds() {
            let rec = learner.round(&*inst.loss(t), &*inst.constraint(t))?;
            trace.records.push(rec);
        }
        let series = regret_series(&trace, &appendix_a_series(&inst))?;

        println!("{mode:?}, m = {}, T = {}", params.memory, params.horizon);
        println!("{:>6} {:>10} {:>10}", "t", "R_t/t", "V_t/t");
        for t in [400, 1000, 2000, 3000, 4000] {
            let r = series.static_at(t).unwrap_or(f64::NAN);
            let v = series.ccv_at(t).unwrap_or(f64::NAN);
            println!("{t:>6} {:>10.4} {:>10.4}", r / t as f64, v / t as f64);
        }
        println!();
    }
    Ok(())
}
