use std::sync::Arc;

use serde::Serialize;

use crate::environments::{AppendixAInstance, MemoryEnvironment, ProblemConstants, SeparableInstance};
use crate::error::{Error, Result};
use crate::geometry::Regularizer;
use crate::metrics::{
    appendix_a_series, error_split_check, forward_chain_checks, lifted_decomposition_check, memory_identity_check,
    optimistic_complexity, regret_series, separable_series, surrogate_regret_check, theoretical_bounds, BenchmarkClass,
    BenchmarkSeries, BoundInputs, BoundReport, InequalityCheck, PredictionTerms, RegretSeries, Theorem,
};
use crate::ogd::OgdLearner;
use crate::optimistic::{complexity_constant, DoublingLearner, DoublingSchedule, OdafLearner, OdafSettings, SliceSource};
use crate::penalty::{theorem_lambda, LambdaRule, LambdaSchedule, Penalty, PenaltyKind};
use crate::trace::RunTrace;

use super::config::{Algorithm, DoublingConfig, EnvironmentConfig, ExperimentConfig, LambdaMode};

/// A generated instance of either family.
#[derive(Debug, Clone)]
pub enum Instance {
    AppendixA(AppendixAInstance),
    Separable(Arc<SeparableInstance>),
}

impl Instance {
    pub fn generate(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        Ok(match &cfg.environment {
            EnvironmentConfig::AppendixA(env) => {
                Instance::AppendixA(AppendixAInstance::generate(cfg.appendix_a_params(env), seed)?)
            }
            EnvironmentConfig::Separable(env) => {
                Instance::Separable(Arc::new(SeparableInstance::generate(cfg.separable_params(env), seed)?))
            }
        })
    }

    pub fn env(&self) -> &dyn MemoryEnvironment {
        match self {
            Instance::AppendixA(i) => i,
            Instance::Separable(i) => &**i,
        }
    }

    /// Exact benchmark series; the optimistic learner is scored against
    /// decisions that satisfy every constraint slice.
    pub fn benchmark(&self, algorithm: Algorithm) -> Result<BenchmarkSeries> {
        match self {
            Instance::AppendixA(i) => Ok(appendix_a_series(i)),
            Instance::Separable(i) => {
                let class = if algorithm.is_optimistic() {
                    BenchmarkClass::SliceWise
                } else {
                    BenchmarkClass::Lifted
                };
                separable_series(i, class)
            }
        }
    }
}

/// `λ` or its schedule for gradient descent.
pub fn ogd_schedule(cfg: &ExperimentConfig, k: &ProblemConstants) -> Result<LambdaSchedule> {
    Ok(match (cfg.penalty.lambda, cfg.penalty.kind) {
        (LambdaMode::Explicit(v), _) => LambdaSchedule::Fixed(v),
        (LambdaMode::SqrtTSchedule, _) => LambdaSchedule::InvSqrtRound,
        (LambdaMode::FixedTheorem, PenaltyKind::Quadratic) => {
            LambdaSchedule::Fixed(theorem_lambda(LambdaRule::Penalty { horizon: cfg.horizon })?)
        }
        (LambdaMode::FixedTheorem, PenaltyKind::Exponential) => LambdaSchedule::Fixed(theorem_lambda(
            LambdaRule::ShortMemory {
                horizon: cfg.horizon,
                memory: cfg.memory,
                diameter: k.diameter,
                lf: k.lf,
                lg: k.lg,
            },
        )?),
    })
}

/// `(r_max, α)` of the optimistic learner on `inst`.
fn regularizer_constants(inst: &SeparableInstance) -> (f64, f64) {
    let set = inst.feasible_set();
    let d = set.diameter();
    (Regularizer::for_set(set).r_max(), d * d)
}

/// `λ` of the single-epoch optimistic learner.
pub fn odaf_lambda(cfg: &ExperimentConfig, inst: &SeparableInstance) -> Result<f64> {
    match cfg.penalty.lambda {
        LambdaMode::Explicit(v) => Ok(v),
        _ => {
            let (r_max, alpha) = regularizer_constants(inst);
            let k = inst.constants();
            theorem_lambda(LambdaRule::Optimistic {
                complexity: complexity_constant(r_max, alpha, cfg.memory, k.diameter),
                error_estimate: cfg.error_estimate,
                g_bound: k.g_bound,
                memory: cfg.memory,
            })
        }
    }
}

fn theorem_for(cfg: &ExperimentConfig) -> Result<Theorem> {
    Theorem::select(cfg.algorithm.is_optimistic(), cfg.variant, cfg.penalty.kind)
}

/// Right-hand sides for a configuration from its constants alone. The
/// optimistic bound uses the configured error estimate for both error
/// totals.
pub fn planned_bounds(cfg: &ExperimentConfig, instance: &Instance) -> Result<BoundReport> {
    let k = instance.env().constants();
    let theorem = theorem_for(cfg)?;
    let (lambda, prediction) = match (instance, cfg.algorithm) {
        (_, Algorithm::OdafDoubling) => {
            return Err(Error::Precondition("the doubling trick changes λ between epochs".into()))
        }
        (Instance::Separable(inst), Algorithm::Odaf) => {
            let (r_max, alpha) = regularizer_constants(inst);
            let terms = PredictionTerms {
                complexity: optimistic_complexity(r_max, alpha, cfg.memory, k.diameter),
                error_f: cfg.error_estimate,
                error_g: cfg.error_estimate,
            };
            (odaf_lambda(cfg, inst)?, Some(terms))
        }
        _ => match ogd_schedule(cfg, &k)? {
            LambdaSchedule::Fixed(v) => (v, None),
            LambdaSchedule::InvSqrtRound => {
                return Err(Error::Precondition("the bounds assume a constant λ".into()))
            }
        },
    };
    theoretical_bounds(BoundInputs {
        theorem,
        variant: cfg.variant,
        horizon: cfg.horizon,
        memory: cfg.memory,
        constants: k,
        lambda,
        prediction,
    })
}

/// Everything produced by one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: RunTrace,
    pub benchmark: BenchmarkSeries,
    pub series: RegretSeries,
    pub bound: std::result::Result<BoundReport, String>,
    pub checks: Vec<InequalityCheck>,
    pub epochs: usize,
    /// Final state of the doubling schedule, for doubling runs.
    pub doubling: Option<DoublingSchedule>,
}

/// Grid spacing for the surrogate-regret check: 1e-3 on intervals, about
/// 300 points per axis in the plane.
fn lemma_resolution(env: &dyn MemoryEnvironment) -> f64 {
    let d = env.set().diameter();
    if env.set().dim() == 1 {
        1e-3_f64.max(d / 1e5)
    } else {
        d / 300.0
    }
}

enum Played {
    Ogd { penalty: Option<Penalty> },
    Odaf(Box<OdafLearner>),
    Doubling(DoublingSchedule),
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64, with_checks: bool) -> Result<SeedRun> {
    let instance = Instance::generate(cfg, seed)?;
    let env = instance.env();
    let k = env.constants();
    let mut trace = RunTrace::new(cfg.variant, cfg.memory);
    let played = match (&instance, cfg.algorithm) {
        (_, Algorithm::PenaltyOgd) => {
            let schedule = ogd_schedule(cfg, &k)?;
            let mut l = OgdLearner::new(env.set().clone(), cfg.variant, cfg.penalty.kind, schedule, cfg.memory)?;
            for t in cfg.memory..=cfg.horizon {
                trace.records.push(l.round(&*env.loss(t), &*env.constraint(t))?);
            }
            let penalty = match schedule {
                LambdaSchedule::Fixed(v) => Some(Penalty::new(cfg.penalty.kind, v)?),
                LambdaSchedule::InvSqrtRound => None,
            };
            Played::Ogd { penalty }
        }
        (Instance::Separable(inst), algorithm) => {
            let predictor_kind = cfg.predictor.ok_or_else(|| Error::Config("missing predictor".into()))?;
            let predictor = predictor_kind.build(inst.clone(), seed)?;
            let settings = |lambda: f64| -> Result<OdafSettings> {
                Ok(OdafSettings {
                    variant: cfg.variant,
                    set: inst.feasible_set().clone(),
                    memory: cfg.memory,
                    horizon: cfg.horizon,
                    penalty: Penalty::new(cfg.penalty.kind, lambda)?,
                    alpha: None,
                })
            };
            if algorithm == Algorithm::Odaf {
                let mut l = OdafLearner::new(settings(odaf_lambda(cfg, inst)?)?)?;
                for t in 1..=cfg.horizon {
                    trace.records.push(l.round(&inst.round_slices(t), &*predictor)?);
                }
                Played::Odaf(Box::new(l))
            } else {
                let DoublingConfig {
                    initial_rounds,
                    initial_error,
                } = cfg.doubling.unwrap_or_default();
                let (r_max, alpha) = regularizer_constants(inst);
                let schedule = DoublingSchedule::new(
                    complexity_constant(r_max, alpha, cfg.memory, k.diameter),
                    k.g_bound * (cfg.memory as f64 + 1.0),
                    initial_rounds,
                    initial_error,
                )?;
                let mut l = DoublingLearner::new(settings(schedule.lambda())?, schedule)?;
                for t in 1..=cfg.horizon {
                    trace.records.push(l.round(&inst.round_slices(t), &*predictor)?);
                }
                Played::Doubling(l.schedule().clone())
            }
        }
        (Instance::AppendixA(_), _) => {
            return Err(Error::Config("the optimistic learner needs the separable environment".into()))
        }
    };

    let benchmark = instance.benchmark(cfg.algorithm)?;
    let series = regret_series(&trace, &benchmark)?;
    let epochs = trace.records.iter().map(|r| r.epoch).max().unwrap_or(1);

    let bound = match &played {
        Played::Odaf(l) => {
            let Instance::Separable(inst) = &instance else {
                unreachable!("the optimistic learner only runs on the separable instance")
            };
            let (r_max, alpha) = regularizer_constants(inst);
            let (_, ef, eg) = l.error_totals();
            theoretical_bounds(BoundInputs {
                theorem: theorem_for(cfg)?,
                variant: cfg.variant,
                horizon: cfg.horizon,
                memory: cfg.memory,
                constants: k,
                lambda: l.penalty().lambda(),
                prediction: Some(PredictionTerms {
                    complexity: optimistic_complexity(r_max, alpha, cfg.memory, k.diameter),
                    error_f: ef,
                    error_g: eg,
                }),
            })
        }
        _ => planned_bounds(cfg, &instance),
    };
    let bound = match bound {
        Ok(report) => Ok(report.with_measured(series.final_static(), series.final_ccv())),
        Err(e @ (Error::Precondition(_) | Error::Config(_))) => Err(e.to_string()),
        Err(e) => return Err(e),
    };

    let mut checks = Vec::new();
    if with_checks {
        let scored: Vec<_> = trace.records.iter().filter(|r| r.t >= benchmark.first_round).cloned().collect();
        let scored = RunTrace {
            records: scored,
            ..trace.clone()
        };
        if let Some(best) = &benchmark.best {
            checks.push(memory_identity_check(env, &scored, best.total));
        }
        match &played {
            Played::Ogd { penalty } => {
                if env.set().dim() <= 2 {
                    checks.push(surrogate_regret_check(env, &trace, lemma_resolution(env))?);
                }
                if let (Some(p), Some(best)) = (penalty, &benchmark.best) {
                    checks.push(lifted_decomposition_check(env, &trace, p, best)?);
                }
            }
            Played::Odaf(l) => {
                let Instance::Separable(inst) = &instance else {
                    unreachable!("the optimistic learner only runs on the separable instance")
                };
                if let Some(best) = &benchmark.best {
                    checks.extend(forward_chain_checks(&**inst, cfg.variant, l, best.x.coords(), k.g_bound)?);
                }
                checks.push(error_split_check(l)?);
            }
            Played::Doubling(_) => {}
        }
        if let Ok(report) = &bound {
            checks.push(InequalityCheck {
                name: "regret bound".into(),
                lhs: report.measured_regret.unwrap_or(f64::NEG_INFINITY),
                rhs: report.regret_rhs,
                holds: report.measured_regret.is_none_or(|r| r <= report.regret_rhs),
            });
            let ccv = report.measured_ccv.unwrap_or(0.0);
            checks.push(InequalityCheck {
                name: "violation bound".into(),
                lhs: ccv,
                rhs: report.ccv_rhs,
                holds: ccv <= report.ccv_rhs,
            });
        }
        checks.push(InequalityCheck {
            name: "violation state replays".into(),
            lhs: 0.0,
            rhs: 0.0,
            holds: trace.is_consistent(1e-9),
        });
    }

    Ok(SeedRun {
        seed,
        trace,
        benchmark,
        series,
        bound,
        checks,
        epochs,
        doubling: match played {
            Played::Doubling(s) => Some(s),
            _ => None,
        },
    })
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Self {
            mean,
            std: var.sqrt(),
            n,
        })
    }
}
