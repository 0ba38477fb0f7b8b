//! Online tuning of `λ` by doubling a complexity budget.

use crate::error::{config, Result};
use crate::penalty::Penalty;
use crate::trace::RoundRecord;

use super::learner::{OdafLearner, OdafSettings};
use super::{Predictor, RoundSlices};

/// Complexity estimate `ψ(Δ, E) = C √E`; the epoch length `Δ` does not
/// enter.
fn psi(complexity: f64, _rounds: usize, error: f64) -> f64 {
    complexity * error.max(0.0).sqrt()
}

/// Epoch bookkeeping: a budget `μ_N = 2^{N−1} μ_1`, the per-epoch empirical
/// complexity `ψ(Δ, E) = C √E`, and `λ_N = 1 / (2(μ_N + c))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublingSchedule {
    complexity: f64,
    c: f64,
    mu1: f64,
    epoch: usize,
    budget: f64,
    rounds: usize,
    error: f64,
    empirical: f64,
}

impl DoublingSchedule {
    /// `μ_1 = max(ψ(t1, e1), ε_mach · max(c, 1))`.
    pub fn new(complexity: f64, c: f64, t1: usize, e1: f64) -> Result<Self> {
        if !(complexity >= 0.0 && complexity.is_finite()) || !(c > 0.0 && c.is_finite()) {
            return config("doubling constants must be finite with c > 0");
        }
        if !(e1 >= 0.0 && e1.is_finite()) {
            return config("initial error estimate must be finite and nonnegative");
        }
        let mu1 = psi(complexity, t1, e1).max(f64::EPSILON * c.max(1.0));
        Ok(Self {
            complexity,
            c,
            mu1,
            epoch: 1,
            budget: mu1,
            rounds: 0,
            error: 0.0,
            empirical: 0.0,
        })
    }

    pub fn psi(&self, rounds: usize, error: f64) -> f64 {
        psi(self.complexity, rounds, error)
    }

    pub fn lambda(&self) -> f64 {
        1.0 / (2.0 * (self.budget + self.c))
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn complexity(&self) -> f64 {
        self.complexity
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Empirical complexity of the current epoch.
    pub fn empirical(&self) -> f64 {
        self.empirical
    }

    /// Opens a new epoch if the empirical complexity exceeded the budget.
    /// At most one doubling happens per round.
    pub fn begin_round(&mut self) -> bool {
        if self.empirical <= self.budget {
            return false;
        }
        self.epoch += 1;
        self.budget = self.mu1 * 2f64.powi(self.epoch as i32 - 1);
        self.rounds = 0;
        self.error = 0.0;
        self.empirical = 0.0;
        true
    }

    pub fn end_round(&mut self, eps_g: f64) {
        self.rounds += 1;
        self.error += eps_g;
        self.empirical = self.psi(self.rounds, self.error);
    }
}

/// The optimistic learner with `λ` chosen by [`DoublingSchedule`].
#[derive(Debug, Clone)]
pub struct DoublingLearner {
    inner: OdafLearner,
    schedule: DoublingSchedule,
}

impl DoublingLearner {
    /// `settings.penalty` supplies the penalty kind; its `λ` is replaced by
    /// the schedule's.
    pub fn new(settings: OdafSettings, schedule: DoublingSchedule) -> Result<Self> {
        let penalty = settings.penalty.with_lambda(schedule.lambda())?;
        let inner = OdafLearner::new(OdafSettings { penalty, ..settings })?;
        Ok(Self { inner, schedule })
    }

    pub fn learner(&self) -> &OdafLearner {
        &self.inner
    }

    pub fn schedule(&self) -> &DoublingSchedule {
        &self.schedule
    }

    pub fn round(&mut self, slices: &RoundSlices, predictor: &dyn Predictor) -> Result<RoundRecord> {
        if self.schedule.begin_round() {
            let penalty: Penalty = self.inner.penalty().with_lambda(self.schedule.lambda())?;
            self.inner.restart(penalty);
        }
        let rec = self.inner.round(slices, predictor)?;
        self.schedule.end_round(rec.eps_g);
        Ok(rec)
    }
}
