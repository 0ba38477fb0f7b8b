//! Closed-form upper bounds on regret and cumulative violation.
//!
//! Every right-hand side is a function of declared constants only: the
//! horizon, the memory, the instance's regularity constants, `λ` and, for
//! the optimistic learner, the cumulative prediction errors.

use serde::{Deserialize, Serialize};

use crate::domain::ProblemVariant;
use crate::environments::ProblemConstants;
use crate::error::{config, Error, Result};
use crate::penalty::PenaltyKind;

/// Which guarantee a run is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Gradient descent, memory in losses and constraints, quadratic penalty.
    FullMemory,
    /// Gradient descent, memory in losses only, quadratic penalty.
    ObjectiveMemory,
    /// Gradient descent, memory in losses only, exponential penalty, short
    /// memory.
    ShortMemory,
    /// Optimistic delayed FTRL, exponential penalty.
    Optimistic,
}

impl Theorem {
    /// The guarantee matching a learner family, variant and penalty.
    pub fn select(optimistic: bool, variant: ProblemVariant, kind: PenaltyKind) -> Result<Self> {
        use PenaltyKind::*;
        use ProblemVariant::*;
        match (optimistic, variant, kind) {
            (false, CocoM2, Quadratic) => Ok(Self::FullMemory),
            (false, CocoM, Quadratic) => Ok(Self::ObjectiveMemory),
            (false, CocoM, Exponential) => Ok(Self::ShortMemory),
            (true, _, Exponential) => Ok(Self::Optimistic),
            (false, CocoM2, Exponential) => {
                config("no bound covers the exponential penalty with memory in the constraints")
            }
            (true, _, Quadratic) => config("the optimistic bound needs the exponential penalty"),
        }
    }
}

/// Cumulative prediction errors and the constant multiplying their roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionTerms {
    pub complexity: f64,
    pub error_f: f64,
    pub error_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub theorem: Theorem,
    pub variant: ProblemVariant,
    pub horizon: usize,
    pub memory: usize,
    pub constants: ProblemConstants,
    pub lambda: f64,
    pub prediction: Option<PredictionTerms>,
}

/// Bound values next to the measured quantities they cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub regret_rhs: f64,
    pub ccv_rhs: f64,
    pub measured_regret: Option<f64>,
    pub measured_ccv: Option<f64>,
    /// `measured / rhs`; at most one when the bound holds.
    pub regret_slack: Option<f64>,
    pub ccv_slack: Option<f64>,
}

impl BoundReport {
    pub fn with_measured(mut self, regret: Option<f64>, ccv: f64) -> Self {
        self.measured_regret = regret;
        self.measured_ccv = Some(ccv);
        self.regret_slack = regret.map(|r| r / self.regret_rhs);
        self.ccv_slack = Some(ccv / self.ccv_rhs);
        self
    }

    /// Whether the measured values respect both bounds; `None` before
    /// measurements are attached. An undefined regret counts as holding.
    pub fn holds(&self) -> Option<bool> {
        let ccv = self.measured_ccv?;
        let regret_ok = self.measured_regret.is_none_or(|r| r <= self.regret_rhs);
        Some(regret_ok && ccv <= self.ccv_rhs)
    }
}

/// `m ≤ T^{1/6} / (ln T)^{1/3}`.
pub fn short_memory_admissible(horizon: usize, memory: usize) -> bool {
    let t = horizon as f64;
    let cap = t.powf(1.0 / 6.0) / t.ln().max(0.0).cbrt();
    memory as f64 <= cap
}

/// `√2 (r_max/α + 1)(2m‖X‖ + √(‖X‖² + α))`: with it the forward-function
/// regret is at most `C (√E(f) + Φ′ √E(g⁺))`.
pub fn optimistic_complexity(r_max: f64, alpha: f64, memory: usize, diameter: f64) -> f64 {
    std::f64::consts::SQRT_2
        * (r_max / alpha + 1.0)
        * (2.0 * memory as f64 * diameter + (diameter * diameter + alpha).sqrt())
}

/// `λ* = 0.5 / (√(2T)‖X‖L_g + m^{3/2}‖X‖√(T L_f L_g))`.
pub fn short_memory_lambda(horizon: usize, memory: usize, k: &ProblemConstants) -> f64 {
    let t = horizon as f64;
    let m15 = (memory as f64).powf(1.5);
    0.5 / ((2.0 * t).sqrt() * k.diameter * k.lg + m15 * k.diameter * (t * k.lf * k.lg).sqrt())
}

/// `m^{3/2} L (‖X‖/√2) √T √(ln T + 2 ln(L_f + Φ̄′ L_g))`, the cost of
/// playing on a moving window instead of a constant one.
fn window_deviation(lipschitz: f64, memory: usize, t: f64, k: &ProblemConstants, phi_prime_cap: f64) -> f64 {
    let log_term = (t.ln() + 2.0 * (k.lf + phi_prime_cap * k.lg).ln()).max(0.0);
    (memory as f64).powf(1.5) * lipschitz * (k.diameter / std::f64::consts::SQRT_2) * t.sqrt() * log_term.sqrt()
}

pub fn theoretical_bounds(inputs: BoundInputs) -> Result<BoundReport> {
    let k = inputs.constants;
    let lambda = inputs.lambda;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return config("bounds need a positive, finite λ");
    }
    if inputs.horizon == 0 {
        return config("bounds need a positive horizon");
    }
    let t = inputs.horizon as f64;
    let m = inputs.memory;
    let root2t = (2.0 * t).sqrt();
    let dl_f = root2t * k.diameter * k.lf;
    let (regret_rhs, ccv_rhs) = match inputs.theorem {
        Theorem::FullMemory | Theorem::ObjectiveMemory => {
            let a = root2t * k.diameter * k.lg;
            let v_hat = a + (a * a + (dl_f + 2.0 * k.f_bound * t) / lambda + k.g_bound * k.g_bound).sqrt();
            let phi_prime_cap = 2.0 * lambda * v_hat;
            let regret = dl_f
                + 2.0 * lambda * t * (k.diameter * k.lg).powi(2)
                + lambda * k.g_bound * k.g_bound
                + window_deviation(k.lf, m, t, &k, phi_prime_cap);
            let ccv = if inputs.theorem == Theorem::FullMemory {
                v_hat + window_deviation(k.lg, m, t, &k, phi_prime_cap)
            } else {
                v_hat
            };
            (regret, ccv)
        }
        Theorem::ShortMemory => {
            if inputs.variant != ProblemVariant::CocoM {
                return config("the short-memory bound covers memory-less constraints only");
            }
            if !short_memory_admissible(inputs.horizon, m) {
                return Err(Error::Precondition(format!(
                    "memory {m} exceeds T^(1/6)/(ln T)^(1/3) for T = {}",
                    inputs.horizon
                )));
            }
            let cap = short_memory_lambda(inputs.horizon, m, &k);
            if lambda > cap {
                return Err(Error::Precondition(format!("λ = {lambda} exceeds the admissible {cap}")));
            }
            let m15 = (m as f64).powf(1.5);
            let start = (lambda * k.g_bound).exp();
            let regret = dl_f
                + m15 * k.lf * (k.diameter / std::f64::consts::SQRT_2) * (t * t.ln()).sqrt()
                + start
                + m15 * k.lf * k.diameter * (t * k.lf.ln().max(0.0)).sqrt()
                + 0.5 * m15 * k.diameter * (t * k.lf * k.lg).sqrt();
            let ccv = (2.0 * (dl_f + 2.0 * k.f_bound * t + start)).ln() / lambda;
            (regret, ccv)
        }
        Theorem::Optimistic => {
            let Some(p) = inputs.prediction else {
                return config("the optimistic bound needs the prediction-error terms");
            };
            let lag = match inputs.variant {
                ProblemVariant::CocoM2 => m as f64 + 1.0,
                ProblemVariant::CocoM => 1.0,
            };
            let x = p.complexity * p.error_g.sqrt() + k.g_bound * lag;
            if lambda * x >= 1.0 {
                return Err(Error::Precondition(format!(
                    "λ = {lambda} is not below 1/(C√E(g⁺) + G·lag) = {}",
                    1.0 / x
                )));
            }
            let regret = 1.0 + p.complexity * p.error_f.sqrt();
            let ccv = ((2.0 * k.f_bound * t + regret) / (1.0 - lambda * x)).ln() / lambda;
            (regret, ccv)
        }
    };
    Ok(BoundReport {
        inputs,
        regret_rhs,
        ccv_rhs,
        measured_regret: None,
        measured_ccv: None,
        regret_slack: None,
        ccv_slack: None,
    })
}
