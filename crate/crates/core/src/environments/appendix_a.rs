//! Tracking a moving target under a moving half-line constraint:
//! `f_t = (1/(m+1)) Σ_i ½(x_{t−i} − c_t)²` and
//! `g_t = (1/(m+1)) Σ_i d_t x_{t−i} − δ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::FeasibleSet;
use crate::error::{config, Error, Result};
use crate::oracle::{LinearMemoryFunction, MemoryFunction, QuadraticTracking};

use super::{MemoryEnvironment, ProblemConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryMode {
    /// `c_t, d_t ~ U[−σ, σ]` i.i.d.
    Stochastic,
    /// Per round, both coefficients from `U[−σ, σ]` with probability 0.4,
    /// otherwise from `N(0, σ²)` redrawn until inside `[−B, B]`.
    AdversarialMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixAParams {
    pub memory: usize,
    pub horizon: usize,
    pub radius: f64,
    pub sigma: f64,
    pub delta: f64,
    pub gamma: f64,
    pub dim: usize,
    pub mode: AdversaryMode,
}

impl Default for AppendixAParams {
    fn default() -> Self {
        Self {
            memory: 3,
            horizon: 4000,
            radius: 15.0,
            sigma: 10.0,
            delta: 1.0,
            gamma: 3.0,
            dim: 1,
            mode: AdversaryMode::Stochastic,
        }
    }
}

impl AppendixAParams {
    /// `B = γσ`
    pub fn coefficient_bound(&self) -> f64 {
        self.gamma * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < self.memory {
            return config(format!("horizon {} shorter than memory {}", self.horizon, self.memory));
        }
        for (name, v) in [
            ("radius", self.radius),
            ("sigma", self.sigma),
            ("delta", self.delta),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return config(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.dim == 0 {
            return config("dimension must be at least 1");
        }
        Ok(())
    }

    /// `[−R, R]` in one dimension, the centered ball otherwise.
    pub fn feasible_set(&self) -> Result<FeasibleSet> {
        if self.dim == 1 {
            FeasibleSet::symmetric_box(1, self.radius)
        } else {
            FeasibleSet::new_ball(vec![0.0; self.dim], self.radius)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixAInstance {
    pub params: AppendixAParams,
    pub seed: u64,
    /// `c[t − m]` is the target of round `t`.
    pub c: Vec<f64>,
    /// `d[t − m]` is the constraint slope of round `t`.
    pub d: Vec<f64>,
    #[serde(skip)]
    set: Option<FeasibleSet>,
}

impl AppendixAInstance {
    pub fn generate(params: AppendixAParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let set = params.feasible_set()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = params.sigma;
        let b = params.coefficient_bound();
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
        let rounds = params.horizon - params.memory + 1;
        let mut c = Vec::with_capacity(rounds);
        let mut d = Vec::with_capacity(rounds);
        let bounded_normal = |rng: &mut ChaCha8Rng| loop {
            let v: f64 = normal.sample(rng);
            if v.abs() <= b {
                break v;
            }
        };
        for _ in 0..rounds {
            let uniform = match params.mode {
                AdversaryMode::Stochastic => true,
                AdversaryMode::AdversarialMixture => rng.random_bool(0.4),
            };
            if uniform {
                c.push(rng.random_range(-sigma..=sigma));
                d.push(rng.random_range(-sigma..=sigma));
            } else {
                c.push(bounded_normal(&mut rng));
                d.push(bounded_normal(&mut rng));
            }
        }
        Ok(Self {
            params,
            seed,
            c,
            d,
            set: Some(set),
        })
    }

    /// Rebuilds an instance from stored coefficients (e.g. parsed JSON).
    pub fn from_parts(params: AppendixAParams, seed: u64, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        params.validate()?;
        let rounds = params.horizon - params.memory + 1;
        if c.len() != rounds || d.len() != rounds {
            return config(format!("expected {rounds} coefficient pairs"));
        }
        let b = params.coefficient_bound();
        if c.iter().chain(&d).any(|v| !v.is_finite() || v.abs() > b) {
            return config("coefficients must be finite and within [-B, B]");
        }
        let set = params.feasible_set()?;
        Ok(Self {
            params,
            seed,
            c,
            d,
            set: Some(set),
        })
    }

    pub fn first_round(&self) -> usize {
        self.params.memory
    }

    pub fn target(&self, t: usize) -> f64 {
        self.c[t - self.params.memory]
    }

    pub fn slope(&self, t: usize) -> f64 {
        self.d[t - self.params.memory]
    }

    pub fn rounds(&self) -> impl Iterator<Item = usize> {
        self.params.memory..=self.params.horizon
    }

    fn feasible(&self) -> &FeasibleSet {
        self.set.as_ref().expect("instances are built with their set")
    }

    pub fn loss_oracle(&self, t: usize) -> QuadraticTracking {
        let p = &self.params;
        QuadraticTracking::new(vec![self.target(t); p.dim], p.memory, self.feasible())
            .expect("dimension matches the set")
    }

    pub fn constraint_oracle(&self, t: usize) -> LinearMemoryFunction {
        let p = &self.params;
        let w = self.slope(t) / (p.memory as f64 + 1.0);
        LinearMemoryFunction::uniform(vec![w; p.dim], p.memory, -p.delta, self.feasible())
            .expect("dimension matches the set")
    }

    /// Range of the common coordinate `u` for points `u·1` of the set; the
    /// benchmark and per-round comparators all lie on this line.
    pub fn diagonal_range(&self) -> (f64, f64) {
        let p = &self.params;
        let half = if p.dim == 1 { p.radius } else { p.radius / (p.dim as f64).sqrt() };
        (-half, half)
    }

    /// `{u : d_t · dim · u ≤ δ}` intersected with `[lo, hi]`.
    pub fn cut(&self, t: usize, lo: f64, hi: f64) -> (f64, f64) {
        let p = &self.params;
        let slope = self.slope(t) * p.dim as f64;
        let edge = p.delta / slope;
        if slope > 0.0 {
            (lo, hi.min(edge))
        } else if slope < 0.0 {
            (lo.max(edge), hi)
        } else {
            (lo, hi)
        }
    }
}

impl MemoryEnvironment for AppendixAInstance {
    fn set(&self) -> &FeasibleSet {
        self.feasible()
    }

    fn memory(&self) -> usize {
        self.params.memory
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    /// `L_f = R + B√d`, `L_g = B√d`, `F = ½(R + B√d)²`, `G = BR√d + δ`.
    fn constants(&self) -> ProblemConstants {
        let p = &self.params;
        let root_d = (p.dim as f64).sqrt();
        let b = p.coefficient_bound();
        let lf = p.radius + b * root_d;
        ProblemConstants {
            diameter: 2.0 * p.radius,
            lf,
            lg: b * root_d,
            f_bound: 0.5 * lf * lf,
            g_bound: b * p.radius * root_d + p.delta,
        }
    }

    fn loss(&self, t: usize) -> Box<dyn MemoryFunction> {
        Box::new(self.loss_oracle(t))
    }

    fn constraint(&self, t: usize) -> Box<dyn MemoryFunction> {
        Box::new(self.constraint_oracle(t))
    }

    fn lifted_loss(&self, t: usize, x: &[f64]) -> f64 {
        let c = self.target(t);
        0.5 * x.iter().map(|v| (v - c) * (v - c)).sum::<f64>()
    }

    fn lifted_constraint(&self, t: usize, x: &[f64]) -> f64 {
        self.slope(t) * x.iter().sum::<f64>() - self.params.delta
    }
}
