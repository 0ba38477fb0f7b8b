//! Euclidean projections and the closed-form FTRL minimizer.

use crate::domain::{DecisionVector, FeasibleSet};
use crate::error::{contract, Result};
use crate::linalg;

/// `r(x) = ½‖x − center‖²`, centered at the natural center of a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    center: DecisionVector,
    r_max: f64,
}

impl Regularizer {
    pub fn for_set(set: &FeasibleSet) -> Self {
        let center = set.center();
        let r_max = match set {
            FeasibleSet::Box { lo, hi } => 0.125 * linalg::norm_sq(&linalg::sub(hi, lo)),
            FeasibleSet::Ball { radius, .. } => 0.5 * radius * radius,
        };
        Self { center, r_max }
    }

    pub fn center(&self) -> &DecisionVector {
        &self.center
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * linalg::norm_sq(&linalg::sub(x, self.center.coords()))
    }

    /// `max_{x in X} r(x)`.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
}

fn check_dim(set: &FeasibleSet, len: usize) -> Result<()> {
    if set.dim() != len {
        return contract(format!("point has dimension {len}, set has {}", set.dim()));
    }
    Ok(())
}

fn project_raw(set: &FeasibleSet, p: &[f64]) -> Vec<f64> {
    match set {
        FeasibleSet::Box { lo, hi } => p
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect(),
        FeasibleSet::Ball { center, radius } => {
            let off = linalg::sub(p, center);
            let n = linalg::norm(&off);
            if n <= *radius {
                p.to_vec()
            } else {
                let mut out = center.clone();
                linalg::axpy(radius / n, &off, &mut out);
                out
            }
        }
    }
}

/// `argmin_{x in X} ‖x − p‖`.
pub fn project(set: &FeasibleSet, p: &DecisionVector) -> Result<DecisionVector> {
    check_dim(set, p.dim())?;
    Ok(DecisionVector::from_finite(project_raw(set, p.coords())))
}

/// Projection of a raw coordinate slice, for callers holding unvalidated
/// arithmetic results.
pub fn project_slice(set: &FeasibleSet, p: &[f64]) -> Result<DecisionVector> {
    check_dim(set, p.len())?;
    if p.iter().any(|v| !v.is_finite()) {
        return contract("cannot project a non-finite point");
    }
    Ok(DecisionVector::from_finite(project_raw(set, p)))
}

/// `argmin_{x in X} <g, x> + mu · r(x)` with `r` centered at the set center.
///
/// With `mu = 0` this is a linear minimization: the boundary point opposite
/// `g` for a ball, and per-coordinate extremes for a box (the center
/// coordinate wherever `g_i = 0`).
pub fn ftrl_argmin(set: &FeasibleSet, g: &[f64], mu: f64, r: &Regularizer) -> Result<DecisionVector> {
    check_dim(set, g.len())?;
    if g.iter().any(|v| !v.is_finite()) {
        return contract("FTRL linear term must be finite");
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return contract(format!("FTRL weight must be finite and nonnegative, got {mu}"));
    }
    let c = r.center().coords();
    if mu > 0.0 {
        let mut p = c.to_vec();
        linalg::axpy(-1.0 / mu, g, &mut p);
        // Scaling by 1/mu can overflow for tiny positive weights.
        if p.iter().all(|v| v.is_finite()) {
            return Ok(DecisionVector::from_finite(project_raw(set, &p)));
        }
    }
    let x = match set {
        FeasibleSet::Ball { center, radius } => {
            let peak = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if peak == 0.0 {
                center.clone()
            } else {
                // Rescale first so the norm cannot overflow.
                let u = linalg::scaled(1.0 / peak, g);
                let mut out = center.clone();
                linalg::axpy(-radius / linalg::norm(&u), &u, &mut out);
                out
            }
        }
        FeasibleSet::Box { lo, hi } => g
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(gi, (l, h))| {
                if *gi > 0.0 {
                    *l
                } else if *gi < 0.0 {
                    *h
                } else {
                    0.5 * (l + h)
                }
            })
            .collect(),
    };
    Ok(DecisionVector::from_finite(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dv(c: &[f64]) -> DecisionVector {
        DecisionVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn projection_examples() {
        let b = FeasibleSet::symmetric_box(1, 15.0).unwrap();
        assert_eq!(project(&b, &dv(&[20.0])).unwrap().coords(), &[15.0]);
        let ball = FeasibleSet::new_ball(vec![0.0, 0.0], 15.0).unwrap();
        assert_eq!(project(&ball, &dv(&[30.0, 0.0])).unwrap().coords(), &[15.0, 0.0]);
        assert_eq!(project(&ball, &dv(&[3.0, -4.0])).unwrap().coords(), &[3.0, -4.0]);
        assert!(matches!(project(&ball, &dv(&[1.0])), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn ftrl_examples() {
        let ball = FeasibleSet::new_ball(vec![0.0, 0.0], 15.0).unwrap();
        let r = Regularizer::for_set(&ball);
        assert_eq!(ftrl_argmin(&ball, &[2.0, 0.0], 1.0, &r).unwrap().coords(), &[-2.0, 0.0]);
        assert_eq!(ftrl_argmin(&ball, &[2.0, 0.0], 0.1, &r).unwrap().coords(), &[-15.0, 0.0]);
        assert_eq!(ftrl_argmin(&ball, &[0.0, 0.0], 3.0, &r).unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(ftrl_argmin(&ball, &[0.0, 0.0], 0.0, &r).unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(ftrl_argmin(&ball, &[0.0, -5.0], 0.0, &r).unwrap().coords(), &[0.0, 15.0]);

        let bx = FeasibleSet::symmetric_box(2, 1.0).unwrap();
        let rb = Regularizer::for_set(&bx);
        assert_eq!(ftrl_argmin(&bx, &[3.0, -3.0], 0.0, &rb).unwrap().coords(), &[-1.0, 1.0]);
        assert_eq!(ftrl_argmin(&bx, &[3.0, 0.0], 0.0, &rb).unwrap().coords(), &[-1.0, 0.0]);
    }

    #[test]
    fn tiny_weight_falls_back_to_linear_minimization() {
        let ball = FeasibleSet::new_ball(vec![0.0], 2.0).unwrap();
        let r = Regularizer::for_set(&ball);
        let x = ftrl_argmin(&ball, &[1e300], 1e-300, &r).unwrap();
        assert_eq!(x.coords(), &[-2.0]);
    }

    #[test]
    fn r_max_per_kind() {
        let ball = FeasibleSet::new_ball(vec![1.0, 1.0], 2.0).unwrap();
        assert_eq!(Regularizer::for_set(&ball).r_max(), 2.0);
        let bx = FeasibleSet::new_box(vec![0.0, 0.0], vec![2.0, 4.0]).unwrap();
        let r = Regularizer::for_set(&bx);
        assert_eq!(r.r_max(), r.value(&[0.0, 0.0]));
        assert_eq!(r.value(r.center().coords()), 0.0);
    }

    fn arb_set() -> impl Strategy<Value = FeasibleSet> {
        prop_oneof![
            (-3.0f64..3.0, 0.1f64..5.0, -3.0f64..3.0, 0.1f64..5.0).prop_map(|(l0, w0, l1, w1)| {
                FeasibleSet::new_box(vec![l0, l1], vec![l0 + w0, l1 + w1]).unwrap()
            }),
            (-3.0f64..3.0, -3.0f64..3.0, 0.1f64..5.0)
                .prop_map(|(a, b, r)| FeasibleSet::new_ball(vec![a, b], r).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn projection_is_idempotent_and_feasible(set in arb_set(), p in proptest::collection::vec(-20.0f64..20.0, 2)) {
            let once = project(&set, &dv(&p)).unwrap();
            let twice = project(&set, &once).unwrap();
            prop_assert!(set.contains(once.coords(), 1e-12));
            prop_assert!(linalg::dist(once.coords(), twice.coords()) <= 1e-12);
        }

        #[test]
        fn projection_is_nonexpansive(
            set in arb_set(),
            p in proptest::collection::vec(-20.0f64..20.0, 2),
            q in proptest::collection::vec(-20.0f64..20.0, 2),
        ) {
            let pp = project(&set, &dv(&p)).unwrap();
            let pq = project(&set, &dv(&q)).unwrap();
            prop_assert!(linalg::dist(pp.coords(), pq.coords()) <= linalg::dist(&p, &q) + 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn ftrl_beats_random_feasible_points(
            set in arb_set(),
            g in proptest::collection::vec(-10.0f64..10.0, 2),
            mu in 0.01f64..10.0,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let r = Regularizer::for_set(&set);
            let x = ftrl_argmin(&set, &g, mu, &r).unwrap();
            let obj = |y: &[f64]| linalg::dot(&g, y) + mu * r.value(y);
            let best = obj(x.coords());
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let raw: Vec<f64> = (0..2).map(|_| rng.random_range(-10.0..10.0)).collect();
                let y = project_slice(&set, &raw).unwrap();
                prop_assert!(obj(y.coords()) - best >= -1e-10);
            }
        }
    }
}
