//! Penalty-based online gradient descent for losses (and optionally
//! constraints) with memory.
//!
//! Each round the learner observes `f_t` and `g_t`, adds the lifted
//! violation `ĝ_t⁺(x_t)` to its dual state, and takes a projected gradient
//! step on the surrogate `f̂_t + Φ′(V̂_t) ĝ_t⁺` with an adaptive step size.

use crate::domain::{DecisionVector, FeasibleSet, MemoryWindow, ProblemVariant};
use crate::error::Result;
use crate::geometry::project_slice;
use crate::linalg;
use crate::oracle::{check_compatible, MemoryFunction};
use crate::penalty::{LambdaSchedule, Penalty, PenaltyKind, PenaltyState};
use crate::trace::RoundRecord;

#[derive(Debug, Clone)]
pub struct OgdLearner {
    set: FeasibleSet,
    diameter: f64,
    variant: ProblemVariant,
    kind: PenaltyKind,
    schedule: LambdaSchedule,
    window: MemoryWindow,
    grad_sq_sum: f64,
    dual: PenaltyState,
    next_round: usize,
}

impl OgdLearner {
    /// The initial history and first decision are the set's center, and the
    /// first round played is `t = m`.
    pub fn new(
        set: FeasibleSet,
        variant: ProblemVariant,
        kind: PenaltyKind,
        schedule: LambdaSchedule,
        memory: usize,
    ) -> Result<Self> {
        schedule.validate()?;
        let window = MemoryWindow::splat(&set.center(), memory);
        Ok(Self {
            diameter: set.diameter(),
            set,
            variant,
            kind,
            schedule,
            window,
            grad_sq_sum: 0.0,
            dual: PenaltyState::new(memory),
            next_round: memory,
        })
    }

    pub fn decision(&self) -> &DecisionVector {
        self.window.newest()
    }

    pub fn window(&self) -> &MemoryWindow {
        &self.window
    }

    pub fn next_round(&self) -> usize {
        self.next_round
    }

    pub fn grad_sq_sum(&self) -> f64 {
        self.grad_sq_sum
    }

    pub fn dual(&self) -> f64 {
        self.dual.current()
    }

    /// `‖X‖ / (√2 √Σ‖∇L̂‖²)`, or 0 before any nonzero gradient.
    pub fn adaptive_step(&self) -> f64 {
        adaptive_step(self.diameter, self.grad_sq_sum)
    }

    /// Plays one round against the revealed `f_t` and `g_t`.
    pub fn round(&mut self, f: &dyn MemoryFunction, g: &dyn MemoryFunction) -> Result<RoundRecord> {
        check_compatible(f, &self.window)?;
        check_compatible(g, &self.window)?;
        let t = self.next_round;
        let x = self.window.newest().clone();

        let f_mem = f.value(&self.window);
        let f_hat = f.value_splat(&x);
        let g_hat = g.value_splat(&x);
        let g_plus_hat = g_hat.max(0.0);
        let (g_mem, violation) = match self.variant {
            ProblemVariant::CocoM2 => {
                let gm = g.value(&self.window);
                (gm, gm.max(0.0))
            }
            ProblemVariant::CocoM => (g_hat, g_plus_hat),
        };

        let dual = self.dual.advance(g_plus_hat)?;
        let lambda = self.schedule.at(t);
        let penalty = Penalty::new(self.kind, lambda)?;
        let phi_prime = penalty.prime(dual)?;

        let grad = surrogate_gradient(f, g, &x, phi_prime);
        let grad_sq = linalg::norm_sq(&grad);
        self.grad_sq_sum += grad_sq;
        let eta = self.adaptive_step();

        let mut next = x.coords().to_vec();
        linalg::axpy(-eta, &grad, &mut next);
        let next = project_slice(&self.set, &next)?;
        self.window.push(next);
        self.next_round += 1;

        Ok(RoundRecord {
            t,
            x,
            f_mem,
            g_mem,
            f_hat,
            g_hat,
            dual_increment: g_plus_hat,
            dual,
            violation,
            lambda,
            phi_prime,
            step: eta,
            grad_sq,
            surrogate: f_hat + phi_prime * g_plus_hat,
            eps_f: 0.0,
            eps_g: 0.0,
            eps_z: 0.0,
            saturated: penalty.saturates(dual),
            epoch: 1,
        })
    }
}

pub fn adaptive_step(diameter: f64, grad_sq_sum: f64) -> f64 {
    if grad_sq_sum > 0.0 {
        diameter / (std::f64::consts::SQRT_2 * grad_sq_sum.sqrt())
    } else {
        0.0
    }
}

/// `∇f̂(x) + Φ′ · ∇ĝ⁺(x)`, where `∇ĝ⁺` is `∇ĝ` on the active side and zero
/// otherwise (including the boundary `ĝ(x) = 0`).
pub fn surrogate_gradient(
    f: &dyn MemoryFunction,
    g: &dyn MemoryFunction,
    x: &DecisionVector,
    phi_prime: f64,
) -> Vec<f64> {
    let mut grad = f.grad_splat(x);
    if g.value_splat(x) > 0.0 && phi_prime != 0.0 {
        linalg::axpy(phi_prime, &g.grad_splat(x), &mut grad);
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{LinearMemoryFunction, QuadraticTracking};
    use proptest::prelude::*;

    fn line(r: f64) -> FeasibleSet {
        FeasibleSet::symmetric_box(1, r).unwrap()
    }

    fn dv(v: f64) -> DecisionVector {
        DecisionVector::scalar(v).unwrap()
    }

    #[test]
    fn surrogate_gradient_active_constraint() {
        let set = line(15.0);
        let f = QuadraticTracking::new(vec![0.0], 0, &set).unwrap();
        let g = LinearMemoryFunction::new(vec![vec![1.0]], -1.0, &set).unwrap();
        let grad = surrogate_gradient(&f, &g, &dv(2.0), 2.0);
        assert_eq!(grad, vec![4.0]);
        let l = |x: f64| f.value_splat(&dv(x)) + 2.0 * g.value_splat(&dv(x)).max(0.0);
        let fd = (l(2.0 + 1e-6) - l(2.0 - 1e-6)) / 2e-6;
        assert!((fd - 4.0).abs() < 1e-6);
    }

    #[test]
    fn surrogate_gradient_inactive_or_zero_penalty() {
        let set = line(15.0);
        let f = QuadraticTracking::new(vec![3.0], 0, &set).unwrap();
        let g = LinearMemoryFunction::new(vec![vec![1.0]], -1.0, &set).unwrap();
        assert_eq!(surrogate_gradient(&f, &g, &dv(0.0), 5.0), f.grad_splat(&dv(0.0)));
        assert_eq!(surrogate_gradient(&f, &g, &dv(2.0), 0.0), f.grad_splat(&dv(2.0)));
    }

    #[test]
    fn step_examples() {
        let eta = adaptive_step(30.0, 4.0);
        assert!((eta - 30.0 * 2f64.sqrt() / 4.0).abs() < 1e-12);
        assert_eq!(adaptive_step(30.0, 0.0), 0.0);
        let g0: f64 = 3.0;
        for t in 1..20usize {
            let eta = adaptive_step(30.0, t as f64 * g0 * g0);
            let want = 30.0 / (2f64.sqrt() * g0 * (t as f64).sqrt());
            assert!((eta - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_round_hand_trace() {
        let set = line(15.0);
        let mut learner = OgdLearner::new(
            set.clone(),
            ProblemVariant::CocoM2,
            PenaltyKind::Quadratic,
            LambdaSchedule::Fixed(0.5),
            0,
        )
        .unwrap();
        let f = QuadraticTracking::new(vec![2.0], 0, &set).unwrap();
        let g = LinearMemoryFunction::new(vec![vec![1.0]], -1.0, &set).unwrap();
        let rec = learner.round(&f, &g).unwrap();
        // Hand computation: grad = 0 - 2 = -2, eta = 30 / (sqrt2 * 2),
        // x_1 = clamp(0 + 2 eta, -15, 15).
        let eta = 30.0 / (2f64.sqrt() * 2.0);
        assert!((rec.step - eta).abs() < 1e-12);
        assert_eq!(rec.grad_sq, 4.0);
        assert_eq!(rec.dual, 0.0);
        assert_eq!(rec.phi_prime, 0.0);
        let x1 = (0.0 + eta * 2.0f64).clamp(-15.0, 15.0);
        assert_eq!(learner.decision().coords(), &[x1]);
        assert_eq!(x1, 15.0);
    }

    #[test]
    fn constant_loss_and_slack_constraint_is_a_fixed_point() {
        let set = line(4.0);
        let mut learner = OgdLearner::new(
            set.clone(),
            ProblemVariant::CocoM2,
            PenaltyKind::Quadratic,
            LambdaSchedule::InvSqrtRound,
            2,
        )
        .unwrap();
        let f = LinearMemoryFunction::new(vec![vec![0.0]; 3], 7.0, &set).unwrap();
        let g = LinearMemoryFunction::new(vec![vec![0.0]; 3], -1.0, &set).unwrap();
        for _ in 0..50 {
            let rec = learner.round(&f, &g).unwrap();
            assert_eq!(rec.x.coords(), &[0.0]);
            assert_eq!(rec.dual, 0.0);
        }
    }

    #[test]
    fn first_round_is_memory_length() {
        let set = line(1.0);
        let learner = OgdLearner::new(
            set,
            ProblemVariant::CocoM,
            PenaltyKind::Exponential,
            LambdaSchedule::Fixed(0.1),
            3,
        )
        .unwrap();
        assert_eq!(learner.next_round(), 3);
    }

    #[test]
    fn mismatched_oracle_is_rejected() {
        let set = line(1.0);
        let mut learner = OgdLearner::new(
            set.clone(),
            ProblemVariant::CocoM2,
            PenaltyKind::Quadratic,
            LambdaSchedule::Fixed(1.0),
            1,
        )
        .unwrap();
        let f = QuadraticTracking::new(vec![0.0], 2, &set).unwrap();
        let g = LinearMemoryFunction::new(vec![vec![1.0]; 2], 0.0, &set).unwrap();
        assert!(matches!(learner.round(&f, &g), Err(crate::Error::Config(_))));
    }

    proptest! {
        #[test]
        fn decisions_stay_feasible_and_steps_shrink(
            targets in proptest::collection::vec(-30.0f64..30.0, 5..60),
            slopes in proptest::collection::vec(-3.0f64..3.0, 5..60),
            m in 0usize..4,
            m2 in any::<bool>(),
        ) {
            let set = FeasibleSet::new_ball(vec![0.0, 0.0], 5.0).unwrap();
            let variant = if m2 { ProblemVariant::CocoM2 } else { ProblemVariant::CocoM };
            let mut learner = OgdLearner::new(
                set.clone(), variant, PenaltyKind::Quadratic, LambdaSchedule::Fixed(0.2), m,
            ).unwrap();
            let mut last_eta = f64::INFINITY;
            let mut last_sum = 0.0;
            for (c, s) in targets.iter().zip(&slopes) {
                let f = QuadraticTracking::new(vec![*c, -c / 2.0], m, &set).unwrap();
                let g = LinearMemoryFunction::uniform(vec![*s, 1.0], m, -1.0, &set).unwrap();
                let rec = learner.round(&f, &g).unwrap();
                prop_assert!(set.contains(learner.decision().coords(), 1e-9));
                prop_assert!(learner.grad_sq_sum() >= last_sum);
                last_sum = learner.grad_sq_sum();
                if rec.step > 0.0 {
                    prop_assert!(rec.step <= last_eta);
                    last_eta = rec.step;
                }
            }
        }
    }
}
