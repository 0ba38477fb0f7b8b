//! Tuning λ online: the budget doubles whenever the empirical complexity of
//! the current epoch exceeds it, and the learner restarts with a smaller λ.

use std::sync::Arc;

use coco_mem::environments::{MemoryEnvironment, NoisyPredictor, SeparableInstance, SeparableParams};
use coco_mem::optimistic::{complexity_constant, DoublingLearner, DoublingSchedule, OdafSettings, SliceSource};
use coco_mem::penalty::Penalty;

fn main() -> coco_mem::Result<()> {
    let params = SeparableParams {
        variant: coco_mem::domain::ProblemVariant::CocoM,
        ..SeparableParams::default()
    };
    let inst = Arc::new(SeparableInstance::generate(params.clone(), 5)?);
    let predictor = NoisyPredictor::new(inst.clone(), 0.3, 17)?;

    let set = inst.feasible_set().clone();
    let d = set.diameter();
    // Regularizer ½‖x‖² on the ball: r_max = R²/2, and α defaults to ‖X‖².
    let complexity = complexity_constant(params.radius.powi(2) / 2.0, d * d, params.memory, d);
    let schedule = DoublingSchedule::new(complexity, inst.constants().g_bound * (1.0 + params.memory as f64), 1, 1e-4)?;
    let mut learner = DoublingLearner::new(
        OdafSettings {
            variant: params.variant,
            set,
            memory: params.memory,
            horizon: params.horizon,
            penalty: Penalty::exponential(schedule.lambda())?,
            alpha: None,
        },
        schedule,
    )?;

    let mut epoch = 0;
    for t in 1..=params.horizon {
        let rec = learner.round(&inst.round_slices(t), &predictor)?;
        if rec.epoch != epoch {
            epoch = rec.epoch;
            println!(
                "round {t:>5}: epoch {epoch:>2}, budget {:>10.3}, λ = {:.5}",
                learner.schedule().budget(),
                rec.lambda
            );
        }
    }
    let s = learner.schedule();
    println!("finished in epoch {} with μ_1 = {:.4}", s.epoch(), s.mu1());
    Ok(())
}
