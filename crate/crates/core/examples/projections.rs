//! Euclidean projections and the closed-form FTRL step on boxes and balls.

use coco_mem::domain::{DecisionVector, FeasibleSet};
use coco_mem::geometry::{ftrl_argmin, project, Regularizer};

fn main() -> coco_mem::Result<()> {
    let boxed = FeasibleSet::new_box(vec![-1.0, 0.0], vec![1.0, 2.0])?;
    let ball = FeasibleSet::new_ball(vec![0.5, 0.5], 1.0)?;
    let p = DecisionVector::new(vec![3.0, -1.0])?;

    for (name, set) in [("box", &boxed), ("ball", &ball)] {
        let q = project(set, &p)?;
        println!("{name}: diameter {:.4}, projection of {:?} is {:?}", set.diameter(), p.coords(), q.coords());

        let r = Regularizer::for_set(set);
        for mu in [0.0, 0.5, 5.0] {
            if mu == 0.0 && matches!(set, FeasibleSet::Box { .. }) {
                continue;
            }
            let x = ftrl_argmin(set, &[1.0, -2.0], mu, &r)?;
            println!("  argmin <g, x> + {mu} r(x) = {:?}", x.coords());
        }
    }
    Ok(())
}
