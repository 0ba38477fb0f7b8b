use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::ProblemVariant;
use crate::environments::{AdversaryMode, AppendixAParams, PredictorKind, SeparableParams};
use crate::error::{config, Result};
use crate::metrics::short_memory_admissible;
use crate::penalty::PenaltyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    PenaltyOgd,
    Odaf,
    OdafDoubling,
}

impl Algorithm {
    pub fn is_optimistic(self) -> bool {
        !matches!(self, Algorithm::PenaltyOgd)
    }
}

/// Tracking instance with a linear constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixAEnv {
    pub radius: f64,
    pub sigma: f64,
    pub delta: f64,
    pub gamma: f64,
    pub dim: usize,
    pub mode: AdversaryMode,
}

impl Default for AppendixAEnv {
    fn default() -> Self {
        let p = AppendixAParams::default();
        Self {
            radius: p.radius,
            sigma: p.sigma,
            delta: p.delta,
            gamma: p.gamma,
            dim: p.dim,
            mode: p.mode,
        }
    }
}

/// Linear separable instance on a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparableEnv {
    pub dim: usize,
    pub radius: f64,
    pub loss_noise: f64,
    pub constraint_noise: f64,
    pub margin: f64,
    pub drift: f64,
    pub drift_period: Option<f64>,
}

impl Default for SeparableEnv {
    fn default() -> Self {
        let p = SeparableParams::default();
        Self {
            dim: p.dim,
            radius: p.radius,
            loss_noise: p.loss_noise,
            constraint_noise: p.constraint_noise,
            margin: p.margin,
            drift: p.drift,
            drift_period: p.drift_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentConfig {
    AppendixA(AppendixAEnv),
    Separable(SeparableEnv),
}

/// How `λ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum LambdaMode {
    /// The value the matching guarantee prescribes.
    FixedTheorem,
    /// `λ_t = 1/√t`.
    SqrtTSchedule,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    pub lambda: LambdaMode,
}

/// Settings of the doubling trick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoublingConfig {
    /// Length of the round window behind the first budget.
    pub initial_rounds: usize,
    /// Error estimate behind the first budget.
    pub initial_error: f64,
}

impl Default for DoublingConfig {
    fn default() -> Self {
        Self {
            initial_rounds: 1,
            initial_error: 1.0,
        }
    }
}

/// One experiment: a learner, an instance family, a penalty and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub variant: ProblemVariant,
    pub horizon: usize,
    pub memory: usize,
    pub environment: EnvironmentConfig,
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub predictor: Option<PredictorKind>,
    /// Estimate of the cumulative hint error used by the theorem `λ` of the
    /// optimistic learner.
    #[serde(default)]
    pub error_estimate: f64,
    #[serde(default)]
    pub doubling: Option<DoublingConfig>,
    pub seeds: Vec<u64>,
    /// Rounds at which the summary reports averages; defaults to ten evenly
    /// spaced rounds ending at the horizon.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| crate::Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn appendix_a_params(&self, env: &AppendixAEnv) -> AppendixAParams {
        AppendixAParams {
            memory: self.memory,
            horizon: self.horizon,
            radius: env.radius,
            sigma: env.sigma,
            delta: env.delta,
            gamma: env.gamma,
            dim: env.dim,
            mode: env.mode,
        }
    }

    pub fn separable_params(&self, env: &SeparableEnv) -> SeparableParams {
        SeparableParams {
            memory: self.memory,
            horizon: self.horizon,
            dim: env.dim,
            radius: env.radius,
            variant: self.variant,
            loss_noise: env.loss_noise,
            constraint_noise: env.constraint_noise,
            margin: env.margin,
            drift: env.drift,
            drift_period: env.drift_period,
        }
    }

    /// Checkpoints inside the scored rounds, sorted and deduplicated.
    pub fn resolved_checkpoints(&self) -> Vec<usize> {
        let first = self.memory.max(1);
        let mut cps: Vec<usize> = if self.checkpoints.is_empty() {
            (1..=10).map(|k| (self.horizon * k / 10).max(first)).collect()
        } else {
            self.checkpoints.clone()
        };
        cps.retain(|&t| t >= first && t <= self.horizon);
        cps.sort_unstable();
        cps.dedup();
        cps
    }

    /// Accepts exactly the supported learner, variant and penalty pairings.
    pub fn validate(&self) -> Result<()> {
        use Algorithm::*;
        if self.horizon == 0 || self.horizon <= self.memory {
            return config("horizon must exceed memory");
        }
        if self.seeds.is_empty() {
            return config("at least one seed is required");
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return config("seeds must be distinct");
        }
        if !(self.error_estimate >= 0.0 && self.error_estimate.is_finite()) {
            return config("error_estimate must be finite and nonnegative");
        }
        if let LambdaMode::Explicit(v) = self.penalty.lambda {
            if !(v > 0.0 && v.is_finite()) {
                return config("explicit λ must be positive and finite");
            }
        }
        match self.algorithm {
            PenaltyOgd => {
                if self.predictor.is_some() {
                    return config("predictors are only used by the optimistic learner");
                }
                if self.doubling.is_some() {
                    return config("doubling settings need the odaf_doubling algorithm");
                }
                match (self.penalty.kind, self.variant) {
                    (PenaltyKind::Quadratic, _) => {}
                    (PenaltyKind::Exponential, ProblemVariant::CocoM) => {
                        if self.penalty.lambda == LambdaMode::SqrtTSchedule {
                            return config("the 1/√t schedule is only supported with the quadratic penalty");
                        }
                        if self.penalty.lambda == LambdaMode::FixedTheorem
                            && !short_memory_admissible(self.horizon, self.memory)
                        {
                            return config(format!(
                                "memory {} is too long for the exponential penalty at T = {}",
                                self.memory, self.horizon
                            ));
                        }
                    }
                    (PenaltyKind::Exponential, ProblemVariant::CocoM2) => {
                        return config("gradient descent with memory in the constraints needs the quadratic penalty")
                    }
                }
            }
            Odaf | OdafDoubling => {
                if !matches!(self.environment, EnvironmentConfig::Separable(_)) {
                    return config("the optimistic learner needs the separable environment");
                }
                if self.predictor.is_none() {
                    return config("the optimistic learner needs a predictor");
                }
                if self.penalty.kind != PenaltyKind::Exponential {
                    return config("the optimistic learner uses the exponential penalty");
                }
                match (self.algorithm, self.penalty.lambda) {
                    (_, LambdaMode::SqrtTSchedule) => {
                        return config("the 1/√t schedule is only supported by gradient descent")
                    }
                    (OdafDoubling, LambdaMode::Explicit(_)) => {
                        return config("the doubling trick chooses λ itself")
                    }
                    (Odaf, _) if self.doubling.is_some() => {
                        return config("doubling settings need the odaf_doubling algorithm")
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}
