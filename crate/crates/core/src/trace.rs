//! Per-round records produced by every learner.

use serde::Serialize;

use crate::domain::{DecisionVector, ProblemVariant};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub t: usize,
    /// Decision played in round `t`.
    pub x: DecisionVector,
    /// `f_t` on the memory window.
    pub f_mem: f64,
    /// `g_t` on the memory window (on `x_t` alone for the memory-less
    /// constraint variant).
    pub g_mem: f64,
    /// Lifted loss `f̂_t(x_t)`.
    pub f_hat: f64,
    /// Lifted constraint `ĝ_t(x_t)`.
    pub g_hat: f64,
    /// Amount added to the learner's dual state this round.
    pub dual_increment: f64,
    /// The learner's cumulative violation state after this round.
    pub dual: f64,
    /// Violation counted by the variant's CCV metric this round.
    pub violation: f64,
    pub lambda: f64,
    /// Penalty derivative multiplying the constraint gradient this round.
    pub phi_prime: f64,
    /// Step size `η_t` (gradient descent) or regularizer weight `μ_t` (FTRL).
    pub step: f64,
    /// Squared norm of the surrogate gradient (gradient descent only).
    pub grad_sq: f64,
    /// Surrogate value `f̂_t(x_t) + Φ′ ĝ_t⁺(x_t)` (gradient descent only).
    pub surrogate: f64,
    pub eps_f: f64,
    pub eps_g: f64,
    pub eps_z: f64,
    /// The exponential penalty cap was binding.
    pub saturated: bool,
    /// Restart epoch (doubling trick), 1-based; 1 for single-epoch learners.
    pub epoch: usize,
}

/// The ordered records of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub variant: ProblemVariant,
    pub memory: usize,
    pub records: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn new(variant: ProblemVariant, memory: usize) -> Self {
        Self {
            variant,
            memory,
            records: Vec::new(),
        }
    }

    pub fn first_round(&self) -> Option<usize> {
        self.records.first().map(|r| r.t)
    }

    pub fn last_round(&self) -> Option<usize> {
        self.records.last().map(|r| r.t)
    }

    pub fn decisions(&self) -> impl Iterator<Item = &DecisionVector> {
        self.records.iter().map(|r| &r.x)
    }

    /// Cumulative CCV after the final round.
    pub fn total_violation(&self) -> f64 {
        self.records.iter().map(|r| r.violation).sum()
    }

    pub fn final_dual(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.dual)
    }

    /// Rounds are contiguous and the dual state replays from its increments.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let mut v = 0.0;
        let mut prev = 0.0;
        for (k, r) in self.records.iter().enumerate() {
            if k > 0 && r.t != self.records[k - 1].t + 1 {
                return false;
            }
            v += r.dual_increment;
            if (v - r.dual).abs() > tol * (1.0 + v.abs()) {
                return false;
            }
            if r.dual < prev {
                return false;
            }
            prev = r.dual;
        }
        true
    }
}
