//! Intermediate inequalities evaluated on finished runs.
//!
//! Each check recomputes both sides from the instance and the played
//! decisions instead of trusting the learner's own bookkeeping.

use serde::Serialize;

use crate::domain::ProblemVariant;
use crate::environments::MemoryEnvironment;
use crate::error::{contract, Result};
use crate::metrics::{grid_minimize, Benchmark};
use crate::optimistic::{OdafLearner, SliceSource};
use crate::penalty::Penalty;
use crate::trace::RunTrace;

/// `lhs ≤ rhs`, or `lhs = rhs` for identities, up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    /// Allows rounding of `1e-12` relative to the larger side.
    fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        Self {
            name: name.to_owned(),
            lhs,
            rhs,
            holds: lhs <= rhs + 1e-12 * scale,
        }
    }

    fn equal(name: &str, lhs: f64, rhs: f64, relative: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        Self {
            name: name.to_owned(),
            lhs,
            rhs,
            holds: (lhs - rhs).abs() <= relative * scale,
        }
    }
}

/// Neumaier's compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct Sum {
    total: f64,
    carry: f64,
}

impl Sum {
    fn add(&mut self, v: f64) {
        let t = self.total + v;
        self.carry += if self.total.abs() >= v.abs() {
            (self.total - t) + v
        } else {
            (v - t) + self.total
        };
        self.total = t;
    }

    fn value(self) -> f64 {
        self.total + self.carry
    }
}

fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = Sum::default();
    values.into_iter().for_each(|v| s.add(v));
    s.value()
}

/// Gradient descent on the surrogates `L̂_t = f̂_t + φ′_t ĝ_t⁺` against any
/// fixed decision in the set:
/// `Σ L̂_t(x_t) − min_u Σ L̂_t(u) ≤ √2 ‖X‖ √(Σ ‖∇L̂_t(x_t)‖²)`.
///
/// The minimum comes from a grid; the left side adds the most the grid can
/// overshoot, `h Σ_t (L_f + φ′_t L_g)` with `h` the farthest any point of the
/// set lies from the grid.
pub fn surrogate_regret_check(env: &dyn MemoryEnvironment, trace: &RunTrace, resolution: f64) -> Result<InequalityCheck> {
    if trace.records.is_empty() {
        return contract("empty trace");
    }
    let set = env.set();
    let k = env.constants();
    let records = &trace.records;
    let grid = grid_minimize(
        set,
        resolution,
        |u| {
            sum(records
                .iter()
                .map(|r| env.lifted_loss(r.t, u) + r.phi_prime * env.lifted_constraint(r.t, u).max(0.0)))
        },
        |_| true,
    )?;
    let reach = resolution * (set.dim() as f64).sqrt();
    let overshoot = reach * sum(records.iter().map(|r| k.lf + r.phi_prime * k.lg));
    let played = sum(records.iter().map(|r| r.surrogate));
    let grad_sq = sum(records.iter().map(|r| r.grad_sq));
    let rhs = std::f64::consts::SQRT_2 * set.diameter() * grad_sq.sqrt();
    Ok(InequalityCheck::at_most(
        "surrogate gradient-descent regret",
        played - grid.total + overshoot,
        rhs,
    ))
}

/// `Φ(V̂_T) − Φ(V̂_first) + R̂ ≤ Σ L̂_t(x_t) − Σ L̂_t(u)` for a fixed
/// comparator `u` feasible for every lifted constraint, where `R̂` is the
/// lifted-loss regret against `u`. Needs a constant `λ`.
pub fn lifted_decomposition_check(env: &dyn MemoryEnvironment, trace: &RunTrace, penalty: &Penalty, u: &Benchmark) -> Result<InequalityCheck> {
    let (Some(first), Some(last)) = (trace.records.first(), trace.records.last()) else {
        return contract("empty trace");
    };
    if trace.records.iter().any(|r| r.lambda != penalty.lambda()) {
        return contract("the decomposition needs a constant λ");
    }
    let u = u.x.coords();
    let lifted_regret = sum(trace
        .records
        .iter()
        .map(|r| env.lifted_loss(r.t, r.x.coords()) - env.lifted_loss(r.t, u)));
    let lhs = penalty.value(last.dual)? - penalty.value(first.dual)? + lifted_regret;
    let rhs = sum(trace.records.iter().map(|r| {
        r.surrogate - env.lifted_loss(r.t, u) - r.phi_prime * env.lifted_constraint(r.t, u).max(0.0)
    }));
    Ok(InequalityCheck::at_most("lifted penalty decomposition", lhs, rhs))
}

/// `R_T = Σ [f_t(window) − f̂_t(x_t)] + R̂_T`, with `f̂_t(x_t)` evaluated
/// from the instance and `R_T` from the recorded window losses.
pub fn memory_identity_check(env: &dyn MemoryEnvironment, trace: &RunTrace, benchmark_total: f64) -> InequalityCheck {
    let regret = sum(trace.records.iter().map(|r| r.f_mem)) - benchmark_total;
    let deviation = sum(trace
        .records
        .iter()
        .map(|r| r.f_mem - env.lifted_loss(r.t, r.x.coords())));
    let lifted = sum(trace.records.iter().map(|r| env.lifted_loss(r.t, r.x.coords()))) - benchmark_total;
    InequalityCheck::equal("memory deviation identity", regret, deviation + lifted, 1e-9)
}

/// `E(Z) ≤ 2 E(f) + 2 Φ′(V_T)² E(g⁺)`.
pub fn error_split_check(learner: &OdafLearner) -> Result<InequalityCheck> {
    let (ez, ef, eg) = learner.error_totals();
    let v = *learner.violation_history().last().expect("history starts at V_0");
    let w = learner.penalty().prime(v)?;
    Ok(InequalityCheck::at_most(
        "hint error split",
        ez,
        2.0 * ef + 2.0 * w * w * eg,
    ))
}

/// The chain from memory regret to forward-function regret for a
/// single-epoch optimistic run, against a comparator `u` that satisfies
/// every counted constraint slice:
///
/// `Φ(V_T) + R_T ≤ R_T(L) + G k Φ′(V_T) ≤ R_T(Z) + G k Φ′(V_T)`
///
/// with `k` the multiplier lag, followed by the bound on `R_T(Z)` from the
/// regularizer weights,
/// `R_T(Z) ≤ (r_max/α + 1)(2 max_j a_{j−m+1:j} + √(Σ (a_j² + 2α b_j)))`.
pub fn forward_chain_checks(
    source: &dyn SliceSource,
    variant: ProblemVariant,
    learner: &OdafLearner,
    u: &[f64],
    g_bound: f64,
) -> Result<Vec<InequalityCheck>> {
    if learner.epoch() != 1 {
        return contract("the chain covers single-epoch runs");
    }
    let m = source.memory();
    let horizon = source.horizon();
    let xs = learner.decisions();
    let v = learner.violation_history();
    if xs.len() != horizon + 1 || v.len() != horizon + 1 {
        return contract("the run has not finished");
    }
    let penalty = learner.penalty();
    let lag = match variant {
        ProblemVariant::CocoM2 => m + 1,
        ProblemVariant::CocoM => 1,
    };
    let counts = |i: usize| variant == ProblemVariant::CocoM2 || i == 0;
    let weight = |s: usize| penalty.prime(v[s.saturating_sub(lag)]);

    let mut memory_regret = Sum::default();
    let mut surrogate_regret = Sum::default();
    for t in m.max(1)..=horizon {
        let (mut f_x, mut f_u, mut g_x, mut g_u) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..=m {
            if !source.in_range(t, i) {
                continue;
            }
            let a = source.loss_slice(t, i);
            f_x += a.value(xs[t - i].coords());
            f_u += a.value(u);
            if counts(i) {
                let b = source.constraint_slice(t, i);
                g_x += b.value(xs[t - i].coords());
                g_u += b.value(u);
            }
        }
        let w = weight(t)?;
        memory_regret.add(f_x - f_u);
        surrogate_regret.add(f_x + w * g_x.max(0.0) - f_u - w * g_u.max(0.0));
    }

    let mut forward_regret = Sum::default();
    for tau in 1..=horizon {
        for i in 0..=m {
            let s = tau + i;
            if !source.in_range(s, i) {
                continue;
            }
            let a = source.loss_slice(s, i);
            forward_regret.add(a.value(xs[tau].coords()) - a.value(u));
            if counts(i) {
                let b = source.constraint_slice(s, i);
                let w = weight(s)?;
                forward_regret.add(w * (b.value(xs[tau].coords()).max(0.0) - b.value(u).max(0.0)));
            }
        }
    }

    let v_final = v[horizon];
    let v_start = v[m.saturating_sub(1)];
    let carry = g_bound * lag as f64 * penalty.prime(v_final)?;
    let lhs = penalty.value(v_final)? - penalty.value(v_start)? + memory_regret.value();
    let mid = surrogate_regret.value() + carry;
    let forward = forward_regret.value();

    let dub = learner.weights();
    let a = dub.a_history();
    let b = dub.b_history();
    let window_max = if m == 0 {
        0.0
    } else {
        a.windows(m.min(a.len()).max(1)).map(|w| w.iter().sum::<f64>()).fold(0.0, f64::max)
    };
    let alpha = learner.alpha();
    let spread = sum(a.iter().zip(b).map(|(a, b)| a * a + 2.0 * alpha * b));
    let weight_bound = (learner.regularizer().r_max() / alpha + 1.0) * (2.0 * window_max + spread.max(0.0).sqrt());

    Ok(vec![
        InequalityCheck::at_most("penalized regret to surrogate regret", lhs, mid),
        InequalityCheck::at_most("surrogate regret to forward regret", mid, forward + carry),
        InequalityCheck::at_most("forward regret to regularizer weights", forward, weight_bound),
    ])
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::environments::{
        AdversaryMode, AppendixAInstance, AppendixAParams, NoisyPredictor, PerfectPredictor, SeparableInstance,
        SeparableParams, ZeroPredictor,
    };
    use crate::metrics::{appendix_a_series, separable_series, BenchmarkClass};
    use crate::ogd::OgdLearner;
    use crate::optimistic::{OdafSettings, Predictor};
    use crate::penalty::{LambdaSchedule, PenaltyKind};

    fn ogd_run(inst: &AppendixAInstance, variant: ProblemVariant, schedule: LambdaSchedule) -> RunTrace {
        let m = inst.memory();
        let mut l = OgdLearner::new(inst.set().clone(), variant, PenaltyKind::Quadratic, schedule, m).unwrap();
        let mut trace = RunTrace::new(variant, m);
        for t in inst.rounds() {
            trace.records.push(l.round(&*inst.loss(t), &*inst.constraint(t)).unwrap());
        }
        trace
    }

    fn small_instance(mode: AdversaryMode, seed: u64) -> AppendixAInstance {
        AppendixAInstance::generate(
            AppendixAParams {
                horizon: 300,
                mode,
                ..Default::default()
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = Sum::default();
        for v in [1e16, 1.0, -1e16] {
            s.add(v);
        }
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn gradient_descent_lemmas_hold() {
        for mode in [AdversaryMode::Stochastic, AdversaryMode::AdversarialMixture] {
            for seed in 0..3 {
                let inst = small_instance(mode, seed);
                let series = appendix_a_series(&inst);
                let best = series.best.clone().unwrap();
                for variant in [ProblemVariant::CocoM2, ProblemVariant::CocoM] {
                    let fixed = ogd_run(&inst, variant, LambdaSchedule::Fixed(0.05));
                    let c = surrogate_regret_check(&inst, &fixed, 1e-2).unwrap();
                    assert!(c.holds, "{c:?}");
                    let p = Penalty::quadratic(0.05).unwrap();
                    let c = lifted_decomposition_check(&inst, &fixed, &p, &best).unwrap();
                    assert!(c.holds, "{c:?}");
                    let c = memory_identity_check(&inst, &fixed, best.total);
                    assert!(c.holds, "{c:?}");
                    let scheduled = ogd_run(&inst, variant, LambdaSchedule::InvSqrtRound);
                    assert!(surrogate_regret_check(&inst, &scheduled, 1e-2).unwrap().holds);
                    assert!(lifted_decomposition_check(&inst, &scheduled, &p, &best).is_err());
                }
            }
        }
    }

    fn odaf_run(variant: ProblemVariant, m: usize, predictor: &str, seed: u64) -> (Arc<SeparableInstance>, OdafLearner) {
        let inst = Arc::new(
            SeparableInstance::generate(
                SeparableParams {
                    memory: m,
                    horizon: 400,
                    variant,
                    ..Default::default()
                },
                seed,
            )
            .unwrap(),
        );
        let k = inst.constants();
        let lambda = 1.0 / (2.0 * k.g_bound * (m as f64 + 1.0));
        let mut l = OdafLearner::new(OdafSettings {
            variant,
            set: inst.feasible_set().clone(),
            memory: m,
            horizon: 400,
            penalty: Penalty::exponential(lambda).unwrap(),
            alpha: None,
        })
        .unwrap();
        let p: Box<dyn Predictor> = match predictor {
            "perfect" => Box::new(PerfectPredictor::new(inst.clone())),
            "zero" => Box::new(ZeroPredictor::new(2)),
            _ => Box::new(NoisyPredictor::new(inst.clone(), 0.3, seed).unwrap()),
        };
        for t in 1..=400 {
            l.round(&inst.round_slices(t), &*p).unwrap();
        }
        (inst, l)
    }

    #[test]
    fn optimistic_chain_holds() {
        for variant in [ProblemVariant::CocoM2, ProblemVariant::CocoM] {
            for m in [0, 1, 3] {
                for predictor in ["perfect", "zero", "noisy"] {
                    let (inst, l) = odaf_run(variant, m, predictor, m as u64 + 5);
                    let series = separable_series(&inst, BenchmarkClass::SliceWise).unwrap();
                    let u = series.best.unwrap();
                    let g = inst.constants().g_bound;
                    for c in forward_chain_checks(&*inst, variant, &l, u.x.coords(), g).unwrap() {
                        assert!(c.holds, "{variant:?} m={m} {predictor}: {c:?}");
                    }
                    assert!(error_split_check(&l).unwrap().holds);
                }
            }
        }
    }
}
