//! Linear, separable losses and constraints on a small ball.
//!
//! Loss slices pull the decision along a slowly rotating direction; the
//! constraint slices cap the first coordinate near `margin`, so the
//! constraint binds while the center stays strictly feasible.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{FeasibleSet, ProblemVariant};
use crate::error::{config, Result};
use crate::linalg;
use crate::optimistic::{LinearSlice, SliceSource};
use crate::oracle::{LinearMemoryFunction, MemoryFunction};

use super::{MemoryEnvironment, ProblemConstants};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparableParams {
    pub memory: usize,
    pub horizon: usize,
    pub dim: usize,
    pub radius: f64,
    pub variant: ProblemVariant,
    pub loss_noise: f64,
    pub constraint_noise: f64,
    /// Right-hand side of the nominal constraint `x_0 ≤ margin`.
    pub margin: f64,
    /// Amplitude of the rotating loss component.
    pub drift: f64,
    /// Rounds per rotation; one rotation over the horizon when absent.
    pub drift_period: Option<f64>,
}

impl Default for SeparableParams {
    fn default() -> Self {
        Self {
            memory: 2,
            horizon: 2000,
            dim: 2,
            radius: 1.0,
            variant: ProblemVariant::CocoM2,
            loss_noise: 0.5,
            constraint_noise: 0.002,
            margin: 0.3,
            drift: 1.0,
            drift_period: Some(2.0),
        }
    }
}

impl SeparableParams {
    pub fn validate(&self) -> Result<()> {
        if self.horizon <= self.memory {
            return config("horizon must exceed memory");
        }
        if self.dim == 0 {
            return config("dimension must be at least 1");
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return config("radius must be positive");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return config("margin must be positive so that the center is feasible");
        }
        for (name, v) in [
            ("loss_noise", self.loss_noise),
            ("constraint_noise", self.constraint_noise),
            ("drift", self.drift),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return config(format!("{name} must be finite and nonnegative"));
            }
        }
        if self.drift_period.is_some_and(|p| !(p > 0.0 && p.is_finite())) {
            return config("drift_period must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableInstance {
    pub params: SeparableParams,
    pub seed: u64,
    set: FeasibleSet,
    /// `loss[s][i]`, empty for `s ≤ m`.
    loss: Vec<Vec<LinearSlice>>,
    constraint: Vec<Vec<LinearSlice>>,
}

impl SeparableInstance {
    pub fn generate(params: SeparableParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let SeparableParams {
            memory: m,
            horizon,
            dim,
            ..
        } = params;
        let set = FeasibleSet::new_ball(vec![0.0; dim], params.radius)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let share = 1.0 / (m as f64 + 1.0);
        let mut loss = vec![Vec::new(); m + 1];
        let mut constraint = vec![Vec::new(); m + 1];
        for s in m + 1..=horizon {
            let period = params.drift_period.unwrap_or(horizon as f64);
            let phase = 2.0 * PI * s as f64 / period;
            let mut loss_row = Vec::with_capacity(m + 1);
            let mut cons_row = Vec::with_capacity(m + 1);
            for i in 0..=m {
                let coeff = (0..dim)
                    .map(|j| {
                        let base = if j == 0 { -1.0 } else { -params.drift * (phase + j as f64).sin() };
                        share * (base + params.loss_noise * gauss(&mut rng))
                    })
                    .collect();
                loss_row.push(LinearSlice { coeff, offset: 0.0 });

                let scale = match params.variant {
                    ProblemVariant::CocoM2 => share,
                    ProblemVariant::CocoM if i == 0 => 1.0,
                    ProblemVariant::CocoM => 0.0,
                };
                let coeff: Vec<f64> = (0..dim)
                    .map(|j| {
                        let base = if j == 0 { 1.0 } else { 0.0 };
                        scale * (base + params.constraint_noise * gauss(&mut rng))
                    })
                    .collect();
                cons_row.push(LinearSlice {
                    coeff,
                    offset: -scale * params.margin,
                });
            }
            loss.push(loss_row);
            constraint.push(cons_row);
        }
        Ok(Self {
            params,
            seed,
            set,
            loss,
            constraint,
        })
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn variant(&self) -> ProblemVariant {
        self.params.variant
    }

    fn window_lipschitz(&self, s: usize, rows: &[Vec<LinearSlice>]) -> f64 {
        let row = &rows[s];
        let window = row.iter().map(|sl| linalg::norm_sq(&sl.coeff)).sum::<f64>().sqrt();
        let mut lift = vec![0.0; self.params.dim];
        for sl in row {
            linalg::axpy(1.0, &sl.coeff, &mut lift);
        }
        window.max(linalg::norm(&lift))
    }

    fn sup_abs(&self, s: usize, rows: &[Vec<LinearSlice>]) -> f64 {
        rows[s]
            .iter()
            .map(|sl| self.set.sup_abs_affine(&sl.coeff, sl.offset))
            .sum()
    }

    fn oracle(&self, t: usize, rows: &[Vec<LinearSlice>]) -> LinearMemoryFunction {
        let m = self.params.memory;
        let coeffs: Vec<Vec<f64>> = (0..=m).map(|i| self.slice(t, i, rows).coeff).collect();
        let offset = (0..=m).map(|i| self.slice(t, i, rows).offset).sum();
        LinearMemoryFunction::new(coeffs, offset, &self.set).expect("slices match the set")
    }

    fn slice(&self, s: usize, i: usize, rows: &[Vec<LinearSlice>]) -> LinearSlice {
        if self.in_range(s, i) {
            rows[s][i].clone()
        } else {
            LinearSlice::zero(self.params.dim)
        }
    }
}

impl SliceSource for SeparableInstance {
    fn dim(&self) -> usize {
        self.params.dim
    }

    fn memory(&self) -> usize {
        self.params.memory
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn loss_slice(&self, s: usize, i: usize) -> LinearSlice {
        self.slice(s, i, &self.loss)
    }

    fn constraint_slice(&self, s: usize, i: usize) -> LinearSlice {
        self.slice(s, i, &self.constraint)
    }
}

impl MemoryEnvironment for SeparableInstance {
    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn memory(&self) -> usize {
        self.params.memory
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    /// Exact maxima over the generated rounds.
    fn constants(&self) -> ProblemConstants {
        let rounds = self.params.memory + 1..=self.params.horizon;
        let max_over = |f: &dyn Fn(usize) -> f64| rounds.clone().map(f).fold(0.0, f64::max);
        ProblemConstants {
            diameter: self.set.diameter(),
            lf: max_over(&|s| self.window_lipschitz(s, &self.loss)),
            lg: max_over(&|s| self.window_lipschitz(s, &self.constraint)),
            f_bound: max_over(&|s| self.sup_abs(s, &self.loss)),
            g_bound: max_over(&|s| self.sup_abs(s, &self.constraint)),
        }
    }

    fn loss(&self, t: usize) -> Box<dyn MemoryFunction> {
        Box::new(self.oracle(t, &self.loss))
    }

    fn constraint(&self, t: usize) -> Box<dyn MemoryFunction> {
        Box::new(self.oracle(t, &self.constraint))
    }

    fn lifted_loss(&self, t: usize, x: &[f64]) -> f64 {
        (0..=self.params.memory).map(|i| self.loss_slice(t, i).value(x)).sum()
    }

    fn lifted_constraint(&self, t: usize, x: &[f64]) -> f64 {
        (0..=self.params.memory).map(|i| self.constraint_slice(t, i).value(x)).sum()
    }
}
