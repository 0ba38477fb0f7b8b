//! Function oracles over memory windows.
//!
//! A [`MemoryFunction`] evaluates `f(x_{t-m}, ..., x_t)` and its partial
//! gradients. The memory-less lift `f̂(x) = f(x, ..., x)` comes for free
//! through the provided `value_splat` / `grad_splat` methods.

use std::fmt::Debug;

use crate::domain::{splat, DecisionVector, FeasibleSet, MemoryWindow};
use crate::error::{config, Result};
use crate::linalg;

pub trait MemoryFunction: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn memory(&self) -> usize;

    fn value(&self, window: &MemoryWindow) -> f64;

    /// Partial gradient with respect to the decision `lag` rounds back
    /// (`lag = 0` is the newest slot).
    fn grad_slot(&self, window: &MemoryWindow, lag: usize) -> Vec<f64>;

    /// Lipschitz constant with respect to the Euclidean norm on `X^{m+1}`.
    fn lipschitz(&self) -> f64;

    /// Upper bound on `|value|` over `X^{m+1}`.
    fn bound(&self) -> f64;

    fn grad_wrt_last(&self, window: &MemoryWindow) -> Vec<f64> {
        self.grad_slot(window, 0)
    }

    fn value_splat(&self, x: &DecisionVector) -> f64 {
        self.value(&splat(x, self.memory()))
    }

    /// Gradient of the lift: the sum of all slot gradients at the constant
    /// window.
    fn grad_splat(&self, x: &DecisionVector) -> Vec<f64> {
        let w = splat(x, self.memory());
        let mut g = linalg::zeros(self.dim());
        for lag in 0..=self.memory() {
            linalg::axpy(1.0, &self.grad_slot(&w, lag), &mut g);
        }
        g
    }
}

/// Checks that a window fits an oracle before a round is played.
pub fn check_compatible(f: &dyn MemoryFunction, window: &MemoryWindow) -> Result<()> {
    if f.dim() != window.dim() || f.memory() != window.memory() {
        return config(format!(
            "oracle expects d={}, m={} but window has d={}, m={}",
            f.dim(),
            f.memory(),
            window.dim(),
            window.memory()
        ));
    }
    Ok(())
}

/// `Σ_i <c_i, x_{t-i}> + offset`, with `coeffs[i]` acting on lag `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMemoryFunction {
    coeffs: Vec<Vec<f64>>,
    offset: f64,
    lipschitz: f64,
    bound: f64,
}

impl LinearMemoryFunction {
    /// The bound is computed exactly over `set^{m+1}`.
    pub fn new(coeffs: Vec<Vec<f64>>, offset: f64, set: &FeasibleSet) -> Result<Self> {
        if coeffs.is_empty() {
            return config("linear memory function needs at least one slot");
        }
        let d = set.dim();
        if coeffs.iter().any(|c| c.len() != d) {
            return config("slot coefficient dimension differs from the feasible set");
        }
        if !offset.is_finite() || coeffs.iter().flatten().any(|v| !v.is_finite()) {
            return config("linear memory function coefficients must be finite");
        }
        let lipschitz = coeffs.iter().map(|c| linalg::norm_sq(c)).sum::<f64>().sqrt();
        let center = set.center();
        let mid: f64 = coeffs.iter().map(|c| linalg::dot(c, center.coords())).sum::<f64>() + offset;
        let spread: f64 = coeffs.iter().map(|c| set.support_radius(c)).sum();
        Ok(Self {
            coeffs,
            offset,
            lipschitz,
            bound: mid.abs() + spread,
        })
    }

    /// The same coefficient vector on every slot, as in
    /// `(1/(m+1)) Σ_i <c, x_{t-i}> + offset`.
    pub fn uniform(coeff: Vec<f64>, m: usize, offset: f64, set: &FeasibleSet) -> Result<Self> {
        Self::new(vec![coeff; m + 1], offset, set)
    }

    pub fn coeff(&self, lag: usize) -> &[f64] {
        &self.coeffs[lag]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl MemoryFunction for LinearMemoryFunction {
    fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    fn memory(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn value(&self, window: &MemoryWindow) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(lag, c)| linalg::dot(c, window.lag(lag).coords()))
            .sum::<f64>()
            + self.offset
    }

    fn grad_slot(&self, _window: &MemoryWindow, lag: usize) -> Vec<f64> {
        self.coeffs[lag].clone()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn bound(&self) -> f64 {
        self.bound
    }
}

/// `(1/(m+1)) Σ_i ½‖x_{t-i} − target‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTracking {
    target: Vec<f64>,
    memory: usize,
    lipschitz: f64,
    bound: f64,
}

impl QuadraticTracking {
    pub fn new(target: Vec<f64>, memory: usize, set: &FeasibleSet) -> Result<Self> {
        if target.len() != set.dim() {
            return config("tracking target dimension differs from the feasible set");
        }
        if target.iter().any(|v| !v.is_finite()) {
            return config("tracking target must be finite");
        }
        // The farthest point of the set from the target bounds both the
        // gradient norm and the value.
        let center = set.center();
        let reach = linalg::dist(center.coords(), &target) + set.diameter() / 2.0;
        Ok(Self {
            target,
            memory,
            lipschitz: reach,
            bound: 0.5 * reach * reach,
        })
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

impl MemoryFunction for QuadraticTracking {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn memory(&self) -> usize {
        self.memory
    }

    fn value(&self, window: &MemoryWindow) -> f64 {
        let w = 1.0 / (self.memory as f64 + 1.0);
        window
            .entries()
            .map(|x| 0.5 * w * linalg::norm_sq(&linalg::sub(x.coords(), &self.target)))
            .sum()
    }

    fn grad_slot(&self, window: &MemoryWindow, lag: usize) -> Vec<f64> {
        let w = 1.0 / (self.memory as f64 + 1.0);
        linalg::scaled(w, &linalg::sub(window.lag(lag).coords(), &self.target))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn bound(&self) -> f64 {
        self.bound
    }
}

/// Pointwise maximum of several oracles sharing `d` and `m`.
#[derive(Debug)]
pub struct MaxOf {
    parts: Vec<Box<dyn MemoryFunction>>,
}

impl MaxOf {
    /// Index of the maximizing part; ties go to the lowest index.
    pub fn argmax(&self, window: &MemoryWindow) -> usize {
        let mut best = 0;
        let mut best_val = self.parts[0].value(window);
        for (k, p) in self.parts.iter().enumerate().skip(1) {
            let v = p.value(window);
            if v > best_val {
                best = k;
                best_val = v;
            }
        }
        best
    }
}

impl MemoryFunction for MaxOf {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn memory(&self) -> usize {
        self.parts[0].memory()
    }

    fn value(&self, window: &MemoryWindow) -> f64 {
        self.parts
            .iter()
            .map(|p| p.value(window))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn grad_slot(&self, window: &MemoryWindow, lag: usize) -> Vec<f64> {
        self.parts[self.argmax(window)].grad_slot(window, lag)
    }

    fn grad_splat(&self, x: &DecisionVector) -> Vec<f64> {
        let w = splat(x, self.memory());
        self.parts[self.argmax(&w)].grad_splat(x)
    }

    fn lipschitz(&self) -> f64 {
        self.parts.iter().map(|p| p.lipschitz()).fold(0.0, f64::max)
    }

    fn bound(&self) -> f64 {
        self.parts.iter().map(|p| p.bound()).fold(0.0, f64::max)
    }
}

/// Combines several constraints into one by taking their pointwise maximum.
/// A single oracle is returned unchanged.
pub fn max_reduce(mut oracles: Vec<Box<dyn MemoryFunction>>) -> Result<Box<dyn MemoryFunction>> {
    let Some(first) = oracles.first() else {
        return config("max_reduce needs at least one oracle");
    };
    let (d, m) = (first.dim(), first.memory());
    if oracles.iter().any(|o| o.dim() != d || o.memory() != m) {
        return config("max_reduce oracles must share dimension and memory");
    }
    if oracles.len() == 1 {
        return Ok(oracles.pop().expect("length checked"));
    }
    Ok(Box::new(MaxOf { parts: oracles }))
}
