//! Several constraints per round folded into one by their pointwise
//! maximum, then handled by OGD like a single constraint.

use coco_mem::domain::{FeasibleSet, ProblemVariant};
use coco_mem::ogd::OgdLearner;
use coco_mem::oracle::{max_reduce, LinearMemoryFunction, MemoryFunction, QuadraticTracking};
use coco_mem::penalty::{LambdaSchedule, PenaltyKind};

fn main() -> coco_mem::Result<()> {
    let m = 2;
    let set = FeasibleSet::symmetric_box(2, 2.0)?;
    let mut learner = OgdLearner::new(
        set.clone(),
        ProblemVariant::CocoM2,
        PenaltyKind::Quadratic,
        LambdaSchedule::InvSqrtRound,
        m,
    )?;
    let share = 1.0 / (m as f64 + 1.0);
    let mut violation = 0.0;
    for t in m..=600 {
        let phase = t as f64 / 50.0;
        // Chase a target outside the quadrant x ≤ 0.5, y ≤ 0.5.
        let f = QuadraticTracking::new(vec![1.5 * phase.cos(), 1.5 * phase.sin()], m, &set)?;
        let cuts: Vec<Box<dyn MemoryFunction>> = vec![
            Box::new(LinearMemoryFunction::new(vec![vec![share, 0.0]; m + 1], -0.5, &set)?),
            Box::new(LinearMemoryFunction::new(vec![vec![0.0, share]; m + 1], -0.5, &set)?),
        ];
        let g = max_reduce(cuts)?;
        let rec = learner.round(&f, &*g)?;
        violation += rec.g_mem.max(0.0);
        if t % 100 == 0 {
            println!(
                "t = {t:>3}: x = ({:+.3}, {:+.3}), max constraint {:+.4}, CCV {violation:.3}",
                rec.x.coords()[0],
                rec.x.coords()[1],
                rec.g_mem
            );
        }
    }
    Ok(())
}
