//! Oblivious instance generators and slice predictors.
//!
//! Every instance is generated in full from its seed before the first round,
//! so a learner's play can never influence the sequence it faces.

mod appendix_a;
mod predictor;
mod separable;

pub use appendix_a::{AdversaryMode, AppendixAInstance, AppendixAParams};
pub use predictor::{NoisyPredictor, PerfectPredictor, PredictorKind, ZeroPredictor};
pub use separable::{SeparableInstance, SeparableParams};

use serde::{Deserialize, Serialize};

use crate::domain::{DecisionVector, FeasibleSet};
use crate::oracle::MemoryFunction;

/// Name of the pseudo-random generator behind every instance and predictor.
pub const GENERATOR: &str = "ChaCha8";

/// Regularity constants of an instance, as used by the bound calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// `‖X‖`
    pub diameter: f64,
    /// Lipschitz constant of the losses (on windows and on the lift).
    pub lf: f64,
    /// Lipschitz constant of the constraints.
    pub lg: f64,
    /// Bound on `|f_t|`.
    pub f_bound: f64,
    /// Bound on `|g_t|`.
    pub g_bound: f64,
}

/// An instance exposing per-round loss and constraint oracles.
pub trait MemoryEnvironment: Send + Sync {
    fn set(&self) -> &FeasibleSet;
    fn memory(&self) -> usize;
    fn horizon(&self) -> usize;
    fn constants(&self) -> ProblemConstants;
    fn loss(&self, t: usize) -> Box<dyn MemoryFunction>;
    fn constraint(&self, t: usize) -> Box<dyn MemoryFunction>;

    /// `f̂_t(x)`. Instances override this with a closed form so that grid
    /// searches stay cheap.
    fn lifted_loss(&self, t: usize, x: &[f64]) -> f64 {
        self.loss(t).value_splat(&DecisionVector::from_finite(x.to_vec()))
    }

    /// `ĝ_t(x)`; for the memory-less constraint variant this is `g_t(x)`.
    fn lifted_constraint(&self, t: usize, x: &[f64]) -> f64 {
        self.constraint(t).value_splat(&DecisionVector::from_finite(x.to_vec()))
    }
}
