//! Optimistic delayed FTRL for separable, linear losses and constraints
//! with memory.
//!
//! Round `t`'s loss splits into slices `f_t^i(x_{t-i})`, `i = 0..=m`, each
//! an affine function of a single past decision (likewise for constraints).
//! Regrouping slices by the decision they act on gives the forward function
//! `Z_τ(x_τ) = Σ_i f_{τ+i}^i(x_τ) + Φ′(·) g_{τ+i}^{i,+}(x_τ)`, whose gradient is
//! fully revealed only `m` rounds after `x_τ` is played. The learner runs
//! FTRL on revealed forward gradients plus a hint for the missing ones.

mod doubling;
mod kink;
mod ledger;
mod learner;
mod weights;

pub use doubling::{DoublingLearner, DoublingSchedule};
pub use ledger::GradientLedger;
pub use learner::{HintRecord, OdafLearner, OdafSettings};
pub use weights::{huber, DubWeights};

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::linalg;

/// An affine slice `<coeff, x> + offset` of a loss or constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSlice {
    pub coeff: Vec<f64>,
    pub offset: f64,
}

impl LinearSlice {
    pub fn zero(d: usize) -> Self {
        Self {
            coeff: vec![0.0; d],
            offset: 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.coeff, x) + self.offset
    }

    pub fn is_active(&self, x: &[f64]) -> bool {
        self.value(x) > 0.0
    }

    /// Gradient of the positive part at `x`, zero on the boundary.
    pub fn plus_grad(&self, x: &[f64]) -> Vec<f64> {
        if self.is_active(x) {
            self.coeff.clone()
        } else {
            vec![0.0; self.coeff.len()]
        }
    }
}

/// The slices revealed at the end of round `t`, indexed by delay.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSlices {
    pub t: usize,
    pub loss: Vec<LinearSlice>,
    pub constraint: Vec<LinearSlice>,
}

/// A source of separable slices. Slices for rounds `s ≤ m` or `s > T` are
/// identically zero.
pub trait SliceSource: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn memory(&self) -> usize;
    fn horizon(&self) -> usize;
    fn loss_slice(&self, s: usize, i: usize) -> LinearSlice;
    fn constraint_slice(&self, s: usize, i: usize) -> LinearSlice;

    fn round_slices(&self, t: usize) -> RoundSlices {
        let m = self.memory();
        RoundSlices {
            t,
            loss: (0..=m).map(|i| self.loss_slice(t, i)).collect(),
            constraint: (0..=m).map(|i| self.constraint_slice(t, i)).collect(),
        }
    }

    /// Whether `(s, i)` can carry a nonzero slice.
    fn in_range(&self, s: usize, i: usize) -> bool {
        s > self.memory() && s <= self.horizon() && i <= self.memory()
    }
}

/// A forecast for one slice: the loss gradient, the constraint slice and
/// whether that constraint slice is predicted active at the decision it
/// acts on.
///
/// The flag drives the hint for decisions already played. The predicted
/// offset is only consulted when the decision being chosen has to land on
/// a constraint slice's kink.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePrediction {
    pub loss_coeff: Vec<f64>,
    pub constraint_coeff: Vec<f64>,
    pub constraint_offset: f64,
    pub active: bool,
}

impl SlicePrediction {
    pub fn zero(d: usize) -> Self {
        Self {
            loss_coeff: vec![0.0; d],
            constraint_coeff: vec![0.0; d],
            constraint_offset: 0.0,
            active: false,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.loss_coeff
            .iter()
            .chain(&self.constraint_coeff)
            .chain(std::iter::once(&self.constraint_offset))
            .all(|v| v.is_finite())
    }

    /// Predicted gradient of the constraint's positive part.
    pub fn constraint_plus_grad(&self) -> Vec<f64> {
        if self.active {
            self.constraint_coeff.clone()
        } else {
            vec![0.0; self.constraint_coeff.len()]
        }
    }
}

/// Forecasts slices that have not been revealed yet.
pub trait Predictor: Debug + Send + Sync {
    /// Forecast, made while deciding round `query_round`, of slice `(s, i)`,
    /// which acts on the decision `point`. When that decision is the one
    /// being chosen, `point` is a probe for it.
    fn predict(&self, query_round: usize, s: usize, i: usize, point: &[f64]) -> SlicePrediction;
}

/// `(r_max/α + 1)(m‖X‖ + √(‖X‖² + α))`, the factor multiplying the root
/// cumulative hint error in the forward-function regret bound.
pub fn complexity_constant(r_max: f64, alpha: f64, memory: usize, diameter: f64) -> f64 {
    (r_max / alpha + 1.0) * (memory as f64 * diameter + (diameter * diameter + alpha).sqrt())
}
