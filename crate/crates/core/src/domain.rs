//! Decision vectors, memory windows, feasible sets and the problem variant tag.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Result};
use crate::linalg;

/// A point of the decision space. Entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DecisionVector(Vec<f64>);

impl DecisionVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return contract("decision vector must have at least one coordinate");
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return contract(format!("non-finite decision coordinate {bad}"));
        }
        Ok(Self(coords))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d.max(1)])
    }

    /// Internal constructor for values that are finite by construction
    /// (projections, closed-form minimizers).
    pub(crate) fn from_finite(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }
}

impl AsRef<[f64]> for DecisionVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for DecisionVector {
    type Error = crate::Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DecisionVector> for Vec<f64> {
    fn from(v: DecisionVector) -> Self {
        v.0
    }
}

impl fmt::Display for DecisionVector {
    /// Coordinates joined by `;` in shortest round-trip form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// The last `m + 1` decisions `(x_{t-m}, ..., x_t)`, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryWindow {
    entries: VecDeque<DecisionVector>,
    memory: usize,
}

impl MemoryWindow {
    /// Window of `m + 1` copies of `x`.
    pub fn splat(x: &DecisionVector, m: usize) -> Self {
        Self {
            entries: std::iter::repeat_n(x.clone(), m + 1).collect(),
            memory: m,
        }
    }

    /// Builds a window from exactly `m + 1` decisions ordered oldest first.
    pub fn from_entries(entries: Vec<DecisionVector>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return contract("a memory window needs at least one entry");
        };
        let d = first.dim();
        if entries.iter().any(|e| e.dim() != d) {
            return contract("memory window entries must share one dimension");
        }
        let memory = entries.len() - 1;
        Ok(Self {
            entries: entries.into(),
            memory,
        })
    }

    /// Appends the newest decision and evicts the oldest.
    pub fn push(&mut self, x: DecisionVector) {
        debug_assert_eq!(x.dim(), self.dim());
        self.entries.pop_front();
        self.entries.push_back(x);
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn dim(&self) -> usize {
        self.entries[0].dim()
    }

    /// Decision from `lag` rounds ago; `lag(0)` is the newest entry `x_t`.
    pub fn lag(&self, lag: usize) -> &DecisionVector {
        &self.entries[self.memory - lag]
    }

    pub fn newest(&self) -> &DecisionVector {
        self.lag(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = &DecisionVector> {
        self.entries.iter()
    }

    /// Euclidean distance between two windows viewed as points of `X^{m+1}`.
    pub fn distance(&self, other: &MemoryWindow) -> f64 {
        debug_assert_eq!(self.memory, other.memory);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| {
                let d = linalg::dist(a.coords(), b.coords());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// `splat(x, m)`: the constant window used by memory-less lifts.
pub fn splat(x: &DecisionVector, m: usize) -> MemoryWindow {
    MemoryWindow::splat(x, m)
}

/// Closed convex decision sets with exact projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl FeasibleSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return config("box bounds must be non-empty and of equal length");
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return config("box bounds must be finite");
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return config("box is empty: lo > hi in some coordinate");
        }
        Ok(Self::Box { lo, hi })
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return config("ball center must be a finite, non-empty vector");
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return config(format!("ball radius must be positive, got {radius}"));
        }
        Ok(Self::Ball { center, radius })
    }

    /// `[-r, r]^d` as a box.
    pub fn symmetric_box(d: usize, r: f64) -> Result<Self> {
        Self::new_box(vec![-r; d], vec![r; d])
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Box { lo, .. } => lo.len(),
            Self::Ball { center, .. } => center.len(),
        }
    }

    /// `sup_{x,y in X} |x - y|`.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::Box { lo, hi } => linalg::dist(lo, hi),
            Self::Ball { radius, .. } => 2.0 * radius,
        }
    }

    pub fn center(&self) -> DecisionVector {
        match self {
            Self::Box { lo, hi } => {
                DecisionVector::from_finite(lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect())
            }
            Self::Ball { center, .. } => DecisionVector::from_finite(center.clone()),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            Self::Ball { center, radius } => linalg::dist(x, center) <= radius + tol,
        }
    }

    /// `sup_{x in X} <c, x - center>`, the half-width of the range of a
    /// linear functional over the set.
    pub fn support_radius(&self, c: &[f64]) -> f64 {
        match self {
            Self::Box { lo, hi } => c
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(ci, (l, h))| ci.abs() * 0.5 * (h - l))
                .sum(),
            Self::Ball { radius, .. } => radius * linalg::norm(c),
        }
    }

    /// `sup_{x in X} |<c, x> + offset|`.
    pub fn sup_abs_affine(&self, c: &[f64], offset: f64) -> f64 {
        let mid = linalg::dot(c, self.center().coords()) + offset;
        mid.abs() + self.support_radius(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemVariant {
    /// Memory in the losses only; constraints act on `x_t`.
    CocoM,
    /// Memory in both losses and constraints.
    CocoM2,
}
