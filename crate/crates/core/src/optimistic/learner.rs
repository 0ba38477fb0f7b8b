use crate::domain::{DecisionVector, FeasibleSet, ProblemVariant};
use crate::error::{config, contract, Result};
use crate::geometry::{ftrl_argmin, Regularizer};
use crate::linalg;
use crate::penalty::Penalty;
use crate::trace::RoundRecord;

use super::kink::{self, OwnSlice};
use super::ledger::{add_contribution, GradientLedger};
use super::weights::{huber, DubWeights};
use super::{Predictor, RoundSlices, SlicePrediction};

#[derive(Debug, Clone)]
pub struct OdafSettings {
    pub variant: ProblemVariant,
    pub set: FeasibleSet,
    pub memory: usize,
    pub horizon: usize,
    pub penalty: Penalty,
    /// Regularizer scale; defaults to `‖X‖²`.
    pub alpha: Option<f64>,
}

/// The hint used to pick `x_k`, kept until its error can be measured.
#[derive(Debug, Clone, PartialEq)]
pub struct HintRecord {
    pub round: usize,
    /// First forward function the hint covers.
    pub coverage_start: usize,
    pub hint: Vec<f64>,
    /// Sum of predicted loss gradients over the predicted slices.
    pub predicted_loss: Vec<f64>,
    /// Sum of predicted constraint gradients (without multipliers).
    pub predicted_constraint: Vec<f64>,
}

/// Prediction errors measured when a hint's window is fully revealed.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct HintErrors {
    z: f64,
    f: f64,
    g: f64,
}

#[derive(Debug, Clone)]
pub struct OdafLearner {
    set: FeasibleSet,
    regularizer: Regularizer,
    diameter: f64,
    alpha: f64,
    variant: ProblemVariant,
    memory: usize,
    horizon: usize,
    dim: usize,
    penalty: Penalty,
    ledger: GradientLedger,
    decisions: Vec<DecisionVector>,
    violation: Vec<f64>,
    epoch: usize,
    epoch_start: usize,
    revealed_sum: Vec<f64>,
    forward: Vec<Option<Vec<f64>>>,
    hints: Vec<Option<HintRecord>>,
    dub: DubWeights,
    mu_next: f64,
    mu_used: Vec<f64>,
    totals: HintErrors,
}

impl OdafLearner {
    /// The initial history is the set's center; rounds are played from 1.
    pub fn new(settings: OdafSettings) -> Result<Self> {
        let OdafSettings {
            variant,
            set,
            memory,
            horizon,
            penalty,
            alpha,
        } = settings;
        if horizon == 0 {
            return config("horizon must be at least 1");
        }
        let diameter = set.diameter();
        let alpha = alpha.unwrap_or(diameter * diameter);
        if !(alpha > 0.0 && alpha.is_finite()) {
            return config(format!("alpha must be positive, got {alpha}"));
        }
        let dim = set.dim();
        Ok(Self {
            regularizer: Regularizer::for_set(&set),
            decisions: vec![set.center()],
            set,
            diameter,
            alpha,
            variant,
            memory,
            horizon,
            dim,
            penalty,
            ledger: GradientLedger::new(dim, memory, horizon, variant),
            violation: vec![0.0],
            epoch: 1,
            epoch_start: 1,
            revealed_sum: linalg::zeros(dim),
            forward: vec![None; horizon + 2],
            hints: vec![None; horizon + 2],
            dub: DubWeights::new(alpha, memory),
            mu_next: 0.0,
            mu_used: vec![0.0],
            totals: HintErrors::default(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn ledger(&self) -> &GradientLedger {
        &self.ledger
    }

    /// Statistics behind the regularizer weight.
    pub fn weights(&self) -> &DubWeights {
        &self.dub
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Next round to be played.
    pub fn next_round(&self) -> usize {
        self.violation.len()
    }

    /// `V_t` for every completed round, `V_0 = 0` first.
    pub fn violation_history(&self) -> &[f64] {
        &self.violation
    }

    pub fn decisions(&self) -> &[DecisionVector] {
        &self.decisions
    }

    pub fn hint(&self, k: usize) -> Option<&HintRecord> {
        self.hints.get(k).and_then(Option::as_ref)
    }

    /// Cumulative `(E(Z), E(f), E(g⁺))`.
    pub fn error_totals(&self) -> (f64, f64, f64) {
        (self.totals.z, self.totals.f, self.totals.g)
    }

    pub fn mu_next(&self) -> f64 {
        self.mu_next
    }

    /// Rounds between a constraint slice's round and the violation its
    /// multiplier reads.
    fn multiplier_lag(&self) -> usize {
        match self.variant {
            ProblemVariant::CocoM2 => self.memory + 1,
            ProblemVariant::CocoM => 1,
        }
    }

    /// `Φ′(V_{s−m−1})` (or `Φ′(V_{s−1})` for the memory-less constraint
    /// variant); negative indices read the zero seed.
    pub fn multiplier(&self, s: usize) -> f64 {
        let idx = s.saturating_sub(self.multiplier_lag());
        let v = self.violation[idx.min(self.violation.len() - 1)];
        self.penalty.prime(v).expect("cumulative violation is nonnegative")
    }

    /// Starts a new epoch at the next round with a new penalty. Decisions,
    /// revealed slices and the cumulative violation carry over.
    pub fn restart(&mut self, penalty: Penalty) {
        let t = self.next_round();
        if self.decisions.len() > t {
            self.decisions.truncate(t);
            self.mu_used.truncate(t);
        }
        self.penalty = penalty;
        self.epoch += 1;
        self.epoch_start = t;
        self.revealed_sum = linalg::zeros(self.dim);
        self.forward.iter_mut().for_each(|f| *f = None);
        self.hints.iter_mut().for_each(|h| *h = None);
        self.dub = DubWeights::new(self.alpha, self.memory);
        self.mu_next = 0.0;
        self.ledger.clear_kinks_from(t);
    }

    fn sanitized(&self, p: SlicePrediction) -> SlicePrediction {
        if p.is_finite() && p.loss_coeff.len() == self.dim && p.constraint_coeff.len() == self.dim {
            p
        } else {
            SlicePrediction::zero(self.dim)
        }
    }

    /// Chooses `x_t` for the next round if it has not been chosen yet.
    pub fn prepare(&mut self, predictor: &dyn Predictor) -> Result<&DecisionVector> {
        let t = self.next_round();
        if t > self.horizon {
            return contract(format!("horizon {} already played", self.horizon));
        }
        if self.decisions.len() == t {
            self.decide(t, predictor)?;
        }
        Ok(&self.decisions[t])
    }

    fn decide(&mut self, t: usize, predictor: &dyn Predictor) -> Result<()> {
        let m = self.memory;
        let cov = t.saturating_sub(m).max(self.epoch_start).max(1);
        let mut base = linalg::zeros(self.dim);
        let mut pred_f = linalg::zeros(self.dim);
        let mut pred_g = linalg::zeros(self.dim);

        for tau in cov..t {
            let mut z = linalg::zeros(self.dim);
            for i in 0..=m {
                let s = tau + i;
                if !self.ledger.in_range(s, i) {
                    continue;
                }
                let w = self.multiplier(s);
                if s < t {
                    self.ledger.add_revealed(&mut z, s, i, w);
                } else {
                    let p = self.sanitized(predictor.predict(t, s, i, self.decisions[tau].coords()));
                    let activity = if !self.ledger.constraint_counts(i) {
                        0.0
                    } else if let Some(theta) = self.ledger.kink(s, i) {
                        theta
                    } else {
                        indicator(p.active)
                    };
                    add_contribution(&mut z, &p.loss_coeff, w, &p.constraint_coeff, activity);
                    linalg::axpy(1.0, &p.loss_coeff, &mut pred_f);
                    linalg::axpy(activity, &p.constraint_coeff, &mut pred_g);
                }
            }
            linalg::axpy(1.0, &z, &mut base);
        }

        // Slices acting on x_t itself: coefficients come from one query,
        // activity depends on where x_t lands.
        let own: Vec<(usize, f64, SlicePrediction)> = (0..=m)
            .filter(|&i| self.ledger.in_range(t + i, i))
            .map(|i| {
                let p = predictor.predict(t, t + i, i, self.decisions[t - 1].coords());
                (i, self.multiplier(t + i), self.sanitized(p))
            })
            .collect();
        let flags_at = |x: &[f64]| -> Vec<f64> {
            own.iter()
                .map(|(i, _, _)| {
                    let p = self.sanitized(predictor.predict(t, t + i, *i, x));
                    indicator(p.active && self.ledger.constraint_counts(*i))
                })
                .collect()
        };
        let mu = self.mu_next;
        let build = |theta: &[f64]| -> Result<(Vec<f64>, DecisionVector)> {
            let mut z = linalg::zeros(self.dim);
            for ((_, w, p), &activity) in own.iter().zip(theta) {
                add_contribution(&mut z, &p.loss_coeff, *w, &p.constraint_coeff, activity);
            }
            let mut h = base.clone();
            linalg::axpy(1.0, &z, &mut h);
            let mut lin = self.revealed_sum.clone();
            linalg::axpy(1.0, &h, &mut lin);
            let x = ftrl_argmin(&self.set, &lin, mu, &self.regularizer)?;
            Ok((h, x))
        };

        let (theta, kinked, x) = match boolean_activity(own.len(), &build, &flags_at)? {
            Some(theta) => {
                let (_, x) = build(&theta)?;
                (theta, vec![false; own.len()], x)
            }
            None => {
                let mut lin = self.revealed_sum.clone();
                linalg::axpy(1.0, &base, &mut lin);
                for (_, _, p) in &own {
                    linalg::axpy(1.0, &p.loss_coeff, &mut lin);
                }
                let slices: Vec<OwnSlice<'_>> = own
                    .iter()
                    .map(|(i, w, p)| OwnSlice {
                        weight: if self.ledger.constraint_counts(*i) { *w } else { 0.0 },
                        coeff: &p.constraint_coeff,
                        offset: p.constraint_offset,
                    })
                    .collect();
                match kink::solve(&self.set, &lin, mu, &slices) {
                    Some(sol) => (sol.theta, sol.kinked, sol.x),
                    None => {
                        let theta = flags_at(self.decisions[t - 1].coords());
                        let (_, x) = build(&theta)?;
                        (theta, vec![false; own.len()], x)
                    }
                }
            }
        };
        let (hint, _) = build(&theta)?;

        for (((i, _, p), &activity), &kink) in own.iter().zip(&theta).zip(&kinked) {
            linalg::axpy(1.0, &p.loss_coeff, &mut pred_f);
            linalg::axpy(activity, &p.constraint_coeff, &mut pred_g);
            if kink {
                self.ledger.set_kink(t + i, *i, activity);
            }
        }
        self.hints[t] = Some(HintRecord {
            round: t,
            coverage_start: cov,
            hint,
            predicted_loss: pred_f,
            predicted_constraint: pred_g,
        });
        self.decisions.push(x);
        self.mu_used.push(mu);
        Ok(())
    }

    fn x(&self, tau: usize) -> &[f64] {
        self.decisions[tau].coords()
    }

    /// Plays round `t`: commits `x_t`, observes the round's slices, updates
    /// the violation, measures the error of the hint whose window just
    /// closed, and refreshes the regularizer weight.
    pub fn round(&mut self, slices: &RoundSlices, predictor: &dyn Predictor) -> Result<RoundRecord> {
        let t = self.next_round();
        if slices.t != t {
            return contract(format!("expected slices for round {t}, got {}", slices.t));
        }
        self.prepare(predictor)?;
        self.ledger.reveal(slices, &self.decisions)?;
        let m = self.memory;

        let mut f_mem = 0.0;
        let mut f_hat = 0.0;
        let mut g_mem = 0.0;
        let mut g_hat = 0.0;
        for i in 0..=m {
            if !self.ledger.in_range(t, i) {
                continue;
            }
            let back = self.x(t.saturating_sub(i));
            f_mem += slices.loss[i].value(back);
            f_hat += slices.loss[i].value(self.x(t));
            if self.ledger.constraint_counts(i) {
                g_mem += slices.constraint[i].value(back);
                g_hat += slices.constraint[i].value(self.x(t));
            }
        }
        let increment = g_mem.max(0.0);
        let v_now = self.violation[t - 1] + increment;
        self.violation.push(v_now);

        let errors = self.absorb_revealed(t)?;
        self.mu_next = self.dub.mu();

        Ok(RoundRecord {
            t,
            x: self.decisions[t].clone(),
            f_mem,
            g_mem,
            f_hat,
            g_hat,
            dual_increment: increment,
            dual: v_now,
            violation: increment,
            lambda: self.penalty.lambda(),
            phi_prime: self.multiplier(t),
            step: self.mu_used[t],
            grad_sq: 0.0,
            surrogate: 0.0,
            eps_f: errors.f,
            eps_g: errors.g,
            eps_z: errors.z,
            saturated: self.penalty.saturates(v_now),
            epoch: self.epoch,
        })
    }

    /// Folds in `∇Z_{t−m}` and scores the hint `h_{t−m}`.
    fn absorb_revealed(&mut self, t: usize) -> Result<HintErrors> {
        let m = self.memory;
        let Some(k) = t.checked_sub(m).filter(|&k| k >= 1 && k >= self.epoch_start) else {
            return Ok(HintErrors::default());
        };
        let zk = self.ledger.forward_gradient(k, |s| self.multiplier(s))?;
        linalg::axpy(1.0, &zk, &mut self.revealed_sum);
        self.forward[k] = Some(zk);

        let Some(rec) = self.hints[k].take() else {
            return Ok(HintErrors::default());
        };
        let mut window = linalg::zeros(self.dim);
        let mut true_f = linalg::zeros(self.dim);
        let mut true_g = linalg::zeros(self.dim);
        for tau in rec.coverage_start..=k {
            let z = self.forward[tau]
                .as_ref()
                .expect("forward gradients inside an epoch are revealed in order");
            linalg::axpy(1.0, z, &mut window);
            for i in 0..=m {
                let s = tau + i;
                if s >= k && self.ledger.in_range(s, i) {
                    linalg::axpy(1.0, self.ledger.loss_grad(s, i), &mut true_f);
                    linalg::axpy(1.0, &self.ledger.constraint_plus_grad(s, i), &mut true_g);
                }
            }
        }
        let gap = linalg::norm(&linalg::sub(&rec.hint, &window));
        let zk_norm = linalg::norm(self.forward[k].as_ref().expect("just stored"));
        let a = self.diameter * gap.min(zk_norm);
        let b = huber(gap, zk_norm);
        self.dub.push(a, b);

        let errors = HintErrors {
            z: gap * gap,
            f: linalg::norm_sq(&linalg::sub(&rec.predicted_loss, &true_f)),
            g: linalg::norm_sq(&linalg::sub(&rec.predicted_constraint, &true_g)),
        };
        self.totals.z += errors.z;
        self.totals.f += errors.f;
        self.totals.g += errors.g;
        self.hints[k] = Some(rec);
        Ok(errors)
    }

    /// `∇Z_τ` if it has been folded into the current epoch.
    pub fn forward_gradient(&self, tau: usize) -> Option<&[f64]> {
        self.forward.get(tau).and_then(|f| f.as_deref())
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

type Build<'a> = dyn Fn(&[f64]) -> Result<(Vec<f64>, DecisionVector)> + 'a;
type Flags<'a> = dyn Fn(&[f64]) -> Vec<f64> + 'a;

/// Looks for a 0/1 activity pattern of the slices acting on the decision
/// being chosen that the resulting decision reproduces: first by
/// iteration, then by enumeration.
fn boolean_activity(k: usize, build: &Build<'_>, flags_at: &Flags<'_>) -> Result<Option<Vec<f64>>> {
    let (_, x0) = build(&vec![0.0; k])?;
    let mut theta = flags_at(x0.coords());
    for _ in 0..=k + 1 {
        let (_, x) = build(&theta)?;
        let at_x = flags_at(x.coords());
        if at_x == theta {
            return Ok(Some(theta));
        }
        theta = at_x;
    }
    for pattern in 0u32..1u32 << k.min(12) {
        let cand: Vec<f64> = (0..k).map(|j| indicator(pattern >> j & 1 == 1)).collect();
        let (_, x) = build(&cand)?;
        if flags_at(x.coords()) == cand {
            return Ok(Some(cand));
        }
    }
    Ok(None)
}
