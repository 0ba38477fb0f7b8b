//! Penalty functions of the cumulative violation and the running violation
//! state.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Result};

/// `λV` is clamped here before exponentiation.
pub const EXP_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    /// `Φ(V) = λV²`
    Quadratic,
    /// `Φ(V) = e^{λV} − 1`
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    kind: PenaltyKind,
    lambda: f64,
}

impl Penalty {
    pub fn new(kind: PenaltyKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return config(format!("penalty lambda must be positive and finite, got {lambda}"));
        }
        Ok(Self { kind, lambda })
    }

    pub fn quadratic(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::Quadratic, lambda)
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::Exponential, lambda)
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.kind, lambda)
    }

    fn check(v: f64) -> Result<()> {
        if v.is_nan() || v < 0.0 {
            return contract(format!("penalty evaluated at negative violation {v}"));
        }
        Ok(())
    }

    fn exponent(&self, v: f64) -> f64 {
        (self.lambda * v).min(EXP_CAP)
    }

    pub fn value(&self, v: f64) -> Result<f64> {
        Self::check(v)?;
        Ok(match self.kind {
            PenaltyKind::Quadratic => self.lambda * v * v,
            PenaltyKind::Exponential => self.exponent(v).exp_m1(),
        })
    }

    pub fn prime(&self, v: f64) -> Result<f64> {
        Self::check(v)?;
        Ok(match self.kind {
            PenaltyKind::Quadratic => 2.0 * self.lambda * v,
            PenaltyKind::Exponential => self.lambda * self.exponent(v).exp(),
        })
    }

    /// True when the exponential cap is binding at `v`.
    pub fn saturates(&self, v: f64) -> bool {
        self.kind == PenaltyKind::Exponential && self.lambda * v > EXP_CAP
    }
}

/// How `λ` evolves over rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum LambdaSchedule {
    Fixed(f64),
    /// `λ_t = 1/√t`
    InvSqrtRound,
}

impl LambdaSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            Self::Fixed(l) => l,
            Self::InvSqrtRound => 1.0 / (t.max(1) as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Fixed(l) if !(l > 0.0 && l.is_finite()) => {
                config(format!("fixed lambda must be positive and finite, got {l}"))
            }
            _ => Ok(()),
        }
    }
}

/// Cumulative violation plus enough history to read it up to `m + 1`
/// rounds back. Reads before the first update return the zero seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyState {
    v_now: f64,
    history: VecDeque<f64>,
    capacity: usize,
}

impl PenaltyState {
    pub fn new(memory: usize) -> Self {
        let capacity = memory + 2;
        Self {
            v_now: 0.0,
            history: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn current(&self) -> f64 {
        self.v_now
    }

    /// Adds a round's nonnegative violation.
    pub fn advance(&mut self, increment: f64) -> Result<f64> {
        if !(increment >= 0.0 && increment.is_finite()) {
            return contract(format!("violation increment must be finite and nonnegative, got {increment}"));
        }
        self.v_now += increment;
        if self.history.len() == self.capacity {
            self.history.pop_back();
        }
        self.history.push_front(self.v_now);
        Ok(self.v_now)
    }

    /// The value of `V` as it stood `lag` updates ago; `lag(0)` is current.
    pub fn lagged(&self, lag: usize) -> Result<f64> {
        if lag >= self.capacity {
            return contract(format!("violation history only reaches {} rounds back", self.capacity - 1));
        }
        Ok(self.history.get(lag).copied().unwrap_or(0.0))
    }
}

/// Which result's `λ` to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// `1/√T`
    Penalty { horizon: usize },
    /// `0.5 / (√(2T)‖X‖L_g + m^{3/2}‖X‖√(T L_f L_g))`
    ShortMemory {
        horizon: usize,
        memory: usize,
        diameter: f64,
        lf: f64,
        lg: f64,
    },
    /// `1 / (2(C√E + G(m+1)))`
    Optimistic {
        complexity: f64,
        error_estimate: f64,
        g_bound: f64,
        memory: usize,
    },
}

pub fn theorem_lambda(rule: LambdaRule) -> Result<f64> {
    let denom = match rule {
        LambdaRule::Penalty { horizon } => (horizon as f64).sqrt(),
        LambdaRule::ShortMemory {
            horizon,
            memory,
            diameter,
            lf,
            lg,
        } => {
            let t = horizon as f64;
            let m = memory as f64;
            2.0 * ((2.0 * t).sqrt() * diameter * lg + m.powf(1.5) * diameter * (t * lf * lg).sqrt())
        }
        LambdaRule::Optimistic {
            complexity,
            error_estimate,
            g_bound,
            memory,
        } => {
            if error_estimate < 0.0 {
                return config("prediction error estimate must be nonnegative");
            }
            2.0 * (complexity * error_estimate.sqrt() + g_bound * (memory as f64 + 1.0))
        }
    };
    if !(denom > 0.0 && denom.is_finite()) {
        return config(format!("theorem lambda denominator is {denom}"));
    }
    Ok(1.0 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn value_examples() {
        assert_eq!(Penalty::quadratic(0.5).unwrap().value(2.0).unwrap(), 2.0);
        assert_eq!(Penalty::exponential(1.0).unwrap().value(0.0).unwrap(), 0.0);
        let e = Penalty::exponential(0.5).unwrap().value(2.0).unwrap();
        assert!((e - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn prime_examples() {
        assert_eq!(Penalty::quadratic(0.5).unwrap().prime(2.0).unwrap(), 2.0);
        assert_eq!(Penalty::exponential(1.0).unwrap().prime(0.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_violation_is_a_contract_error() {
        let p = Penalty::quadratic(1.0).unwrap();
        assert!(matches!(p.value(-1.0), Err(crate::Error::Contract(_))));
        assert!(matches!(p.prime(-0.1), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn exponential_cap_flags_saturation() {
        let p = Penalty::exponential(1.0).unwrap();
        assert!(!p.saturates(699.0));
        assert!(p.saturates(701.0));
        assert!(p.prime(1e6).unwrap().is_finite());
    }

    #[test]
    fn theorem_lambda_examples() {
        assert_eq!(theorem_lambda(LambdaRule::Penalty { horizon: 4 }).unwrap(), 0.5);
        let opt = theorem_lambda(LambdaRule::Optimistic {
            complexity: 123.0,
            error_estimate: 0.0,
            g_bound: 1.0,
            memory: 1,
        })
        .unwrap();
        assert_eq!(opt, 0.25);
        let short = theorem_lambda(LambdaRule::ShortMemory {
            horizon: 2,
            memory: 1,
            diameter: 1.0,
            lf: 1.0,
            lg: 1.0,
        })
        .unwrap();
        assert!((short - 0.5 / (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!(theorem_lambda(LambdaRule::Penalty { horizon: 0 }).is_err());
    }

    #[test]
    fn schedule_values() {
        assert_eq!(LambdaSchedule::InvSqrtRound.at(4), 0.5);
        assert_eq!(LambdaSchedule::InvSqrtRound.at(0), 1.0);
        assert_eq!(LambdaSchedule::Fixed(0.3).at(99), 0.3);
    }

    #[test]
    fn state_reads_zero_before_start() {
        let mut s = PenaltyState::new(2);
        for lag in 0..4 {
            assert_eq!(s.lagged(lag).unwrap(), 0.0);
        }
        assert!(s.lagged(4).is_err());
        s.advance(1.0).unwrap();
        s.advance(0.0).unwrap();
        s.advance(2.5).unwrap();
        assert_eq!(s.lagged(0).unwrap(), 3.5);
        assert_eq!(s.lagged(1).unwrap(), 1.0);
        assert_eq!(s.lagged(2).unwrap(), 1.0);
        assert_eq!(s.lagged(3).unwrap(), 0.0);
        s.advance(1.0).unwrap();
        s.advance(1.0).unwrap();
        assert_eq!(s.lagged(2).unwrap(), 3.5);
        assert_eq!(s.lagged(3).unwrap(), 1.0);
        assert!(s.advance(-1.0).is_err());
    }

    fn arb_penalty() -> impl Strategy<Value = Penalty> {
        (prop_oneof![Just(PenaltyKind::Quadratic), Just(PenaltyKind::Exponential)], 0.01f64..2.0)
            .prop_map(|(k, l)| Penalty::new(k, l).unwrap())
    }

    proptest! {
        #[test]
        fn value_is_convex(p in arb_penalty(), v1 in 0.0f64..50.0, v2 in 0.0f64..50.0) {
            let mid = p.value(0.5 * (v1 + v2)).unwrap();
            let avg = 0.5 * (p.value(v1).unwrap() + p.value(v2).unwrap());
            prop_assert!(mid <= avg * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn prime_matches_finite_difference(p in arb_penalty(), v in 0.1f64..20.0) {
            let h = 1e-6 * v.max(1.0);
            let fd = (p.value(v + h).unwrap() - p.value(v - h).unwrap()) / (2.0 * h);
            let d = p.prime(v).unwrap();
            prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "fd {fd} vs {d}");
        }

        #[test]
        fn state_is_nondecreasing(incs in proptest::collection::vec(0.0f64..5.0, 1..50)) {
            let mut s = PenaltyState::new(3);
            let mut last = 0.0;
            for inc in incs {
                let v = s.advance(inc).unwrap();
                prop_assert!(v >= last);
                last = v;
            }
        }
    }

    #[test]
    fn prime_is_monotone_on_grid() {
        for p in [Penalty::quadratic(0.7).unwrap(), Penalty::exponential(0.3).unwrap()] {
            let mut last = -1.0;
            for k in 0..2000 {
                let d = p.prime(k as f64 * 0.5).unwrap();
                assert!(d >= last);
                last = d;
            }
        }
    }
}
