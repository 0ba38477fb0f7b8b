use std::collections::HashMap;

use crate::domain::{DecisionVector, ProblemVariant};
use crate::error::{contract, Result};
use crate::linalg;

use super::{LinearSlice, RoundSlices};

/// Adds one slice's forward-gradient contribution
/// `∇f + weight · θ ∇g` to `acc`, where `θ ∈ [0, 1]` selects a subgradient
/// of the positive part. Hints and revealed forward gradients both go
/// through here so that identical inputs give bit-identical sums.
pub(crate) fn add_contribution(acc: &mut [f64], loss: &[f64], weight: f64, constraint: &[f64], activity: f64) {
    linalg::axpy(1.0, loss, acc);
    if activity > 0.0 {
        linalg::axpy(weight * activity, constraint, acc);
    }
}

/// Relative tolerance within which a revealed slice counts as sitting on
/// the kink its decision was resolved at.
const KINK_TOL: f64 = 1e-9;

/// Revealed slices, keyed by `(round s, delay i)`, together with the
/// subgradient weight of each constraint slice's positive part at the
/// decision `x_{s-i}` it acts on.
///
/// The weight is `1{g > 0}` unless the learner placed `x_{s-i}` on the
/// slice's kink and recorded the weight it used there.
#[derive(Debug, Clone)]
pub struct GradientLedger {
    dim: usize,
    memory: usize,
    horizon: usize,
    variant: ProblemVariant,
    loss: Vec<Vec<Vec<f64>>>,
    constraint: Vec<Vec<LinearSlice>>,
    activity: Vec<Vec<f64>>,
    kinks: HashMap<(usize, usize), f64>,
}

impl GradientLedger {
    pub fn new(dim: usize, memory: usize, horizon: usize, variant: ProblemVariant) -> Self {
        Self {
            dim,
            memory,
            horizon,
            variant,
            loss: vec![Vec::new()],
            constraint: vec![Vec::new()],
            activity: vec![Vec::new()],
            kinks: HashMap::new(),
        }
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Last round whose slices are stored.
    pub fn revealed_through(&self) -> usize {
        self.loss.len() - 1
    }

    /// Whether `(s, i)` can carry a nonzero slice.
    pub fn in_range(&self, s: usize, i: usize) -> bool {
        s > self.memory && s <= self.horizon && i <= self.memory
    }

    /// Constraint slices at positive delay do not enter the forward function
    /// when only the current decision is constrained.
    pub fn constraint_counts(&self, i: usize) -> bool {
        self.variant == ProblemVariant::CocoM2 || i == 0
    }

    /// Stores round `slices.t`. `decisions[τ]` must hold `x_τ` for every
    /// `τ ≤ slices.t`.
    pub fn reveal(&mut self, slices: &RoundSlices, decisions: &[DecisionVector]) -> Result<()> {
        let s = slices.t;
        if s != self.revealed_through() + 1 {
            return contract(format!("slices for round {s} revealed out of order"));
        }
        let k = self.memory + 1;
        if slices.loss.len() != k || slices.constraint.len() != k {
            return contract(format!("round {s} must carry {k} slices of each kind"));
        }
        if slices
            .loss
            .iter()
            .chain(&slices.constraint)
            .any(|sl| sl.coeff.len() != self.dim || sl.coeff.iter().any(|v| !v.is_finite()) || !sl.offset.is_finite())
        {
            return contract(format!("round {s} slices have wrong dimension or non-finite entries"));
        }
        if decisions.len() <= s {
            return contract(format!("decision for round {s} not available"));
        }
        let activity = (0..=self.memory)
            .map(|i| {
                if !self.in_range(s, i) {
                    return 0.0;
                }
                let x = decisions[s - i].coords();
                let slice = &slices.constraint[i];
                let value = slice.value(x);
                let tol = KINK_TOL * (linalg::norm(&slice.coeff) * (linalg::norm(x) + 1.0) + slice.offset.abs());
                match self.kinks.get(&(s, i)) {
                    Some(&theta) if value.abs() <= tol => theta,
                    _ if value > 0.0 => 1.0,
                    _ => 0.0,
                }
            })
            .collect();
        self.loss.push(slices.loss.iter().map(|sl| sl.coeff.clone()).collect());
        self.constraint.push(slices.constraint.clone());
        self.activity.push(activity);
        Ok(())
    }

    pub fn loss_grad(&self, s: usize, i: usize) -> &[f64] {
        &self.loss[s][i]
    }

    pub fn constraint_slice(&self, s: usize, i: usize) -> &LinearSlice {
        &self.constraint[s][i]
    }

    /// Subgradient weight of slice `(s, i)`'s positive part at `x_{s-i}`;
    /// zero for slices outside the forward function.
    pub fn constraint_activity(&self, s: usize, i: usize) -> f64 {
        if self.in_range(s, i) && self.constraint_counts(i) {
            self.activity[s][i]
        } else {
            0.0
        }
    }

    /// `∇g_s^{i,+}(x_{s-i})`, zero for slices outside the forward function.
    pub fn constraint_plus_grad(&self, s: usize, i: usize) -> Vec<f64> {
        linalg::scaled(self.constraint_activity(s, i), &self.constraint[s][i].coeff)
    }

    /// Records the subgradient weight used for slice `(s, i)` when its
    /// decision was placed on the slice's kink.
    pub(crate) fn set_kink(&mut self, s: usize, i: usize, theta: f64) {
        self.kinks.insert((s, i), theta);
    }

    pub(crate) fn kink(&self, s: usize, i: usize) -> Option<f64> {
        self.kinks.get(&(s, i)).copied()
    }

    /// Forgets kink weights of slices acting on `x_τ` for `τ ≥ from`.
    pub(crate) fn clear_kinks_from(&mut self, from: usize) {
        self.kinks.retain(|&(s, i), _| s - i < from);
    }

    /// Adds the revealed contribution of slice `(s, i)` to `acc`.
    pub(crate) fn add_revealed(&self, acc: &mut [f64], s: usize, i: usize, weight: f64) {
        if !self.in_range(s, i) {
            return;
        }
        add_contribution(
            acc,
            &self.loss[s][i],
            weight,
            &self.constraint[s][i].coeff,
            self.constraint_activity(s, i),
        );
    }

    /// Whether every slice of `Z_τ` is stored.
    pub fn forward_revealed(&self, tau: usize) -> bool {
        (tau + self.memory).min(self.horizon) <= self.revealed_through()
    }

    /// `∇Z_τ = Σ_i [∇f_{τ+i}^i + w(τ+i) · ∇g_{τ+i}^{i,+}]` at `x_τ`, where
    /// `weight(s)` is the penalty multiplier of round `s`.
    pub fn forward_gradient(&self, tau: usize, weight: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
        if tau == 0 || !self.forward_revealed(tau) {
            return contract(format!(
                "forward gradient {tau} requested with slices revealed through {}",
                self.revealed_through()
            ));
        }
        let mut z = linalg::zeros(self.dim);
        for i in 0..=self.memory {
            let s = tau + i;
            if self.in_range(s, i) {
                self.add_revealed(&mut z, s, i, weight(s));
            }
        }
        Ok(z)
    }
}
