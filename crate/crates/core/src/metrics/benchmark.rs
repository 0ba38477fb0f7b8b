//! Best fixed decisions in hindsight.
//!
//! Exact solvers cover the two built-in instance families: the quadratic
//! tracking losses of [`AppendixAInstance`] reduce to a clamped mean on an
//! interval, and the linear losses of [`SeparableInstance`] reduce to a
//! small linear program over a disk or box cut by half-planes. A grid
//! search over sets of dimension at most two serves as an independent
//! oracle for both.

use serde::Serialize;

use crate::domain::{DecisionVector, FeasibleSet, ProblemVariant};
use crate::environments::{AppendixAInstance, MemoryEnvironment, SeparableInstance};
use crate::error::{config, Error, Result};
use crate::linalg;
use crate::optimistic::SliceSource;

/// Default grid spacing.
pub const DEFAULT_RESOLUTION: f64 = 1e-3;

/// Largest grid the oracle agrees to enumerate.
const MAX_GRID_POINTS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Benchmark {
    pub x: DecisionVector,
    pub total: f64,
}

/// `{x : <normal, x> ≤ bound}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub bound: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, bound: f64) -> Self {
        Self { normal, bound }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.normal, x) - self.bound
    }

    fn contains(&self, x: &[f64]) -> bool {
        let scale = 1.0 + self.bound.abs() + linalg::norm(&self.normal) * linalg::norm(x);
        self.value(x) <= 1e-9 * scale
    }
}

/// Which fixed decisions the comparator may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkClass {
    /// Feasible for every lifted constraint `ĝ_t(x) ≤ 0`.
    Lifted,
    /// Feasible for every counted constraint slice `g_t^i(x) ≤ 0`.
    SliceWise,
}

/// Grid over a set of dimension one or two whose spacing does not exceed
/// `resolution`. Disks also get a ring of points on their boundary.
pub fn grid_points(set: &FeasibleSet, resolution: f64) -> Result<Vec<Vec<f64>>> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return config("grid resolution must be positive");
    }
    let (lo, hi) = bounding_box(set);
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| {
            let n = ((h - l) / resolution).ceil().max(1.0) as usize;
            (0..=n).map(|k| l + (h - l) * k as f64 / n as f64).collect()
        })
        .collect();
    let count: usize = axes.iter().map(Vec::len).product();
    if count > MAX_GRID_POINTS {
        return config(format!("grid of {count} points is too large"));
    }
    let mut points = match axes.as_slice() {
        [xs] => xs.iter().map(|&x| vec![x]).collect(),
        [xs, ys] => {
            let mut pts = Vec::with_capacity(count);
            for &x in xs {
                for &y in ys {
                    if set.contains(&[x, y], 0.0) {
                        pts.push(vec![x, y]);
                    }
                }
            }
            pts
        }
        _ => return config("grid search is limited to dimension one or two"),
    };
    if let FeasibleSet::Ball { center, radius } = set {
        if center.len() == 2 {
            let n = (2.0 * std::f64::consts::PI * radius / resolution).ceil() as usize;
            for k in 0..n {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                points.push(vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()]);
            }
        }
    }
    Ok(points)
}

fn bounding_box(set: &FeasibleSet) -> (Vec<f64>, Vec<f64>) {
    match set {
        FeasibleSet::Box { lo, hi } => (lo.clone(), hi.clone()),
        FeasibleSet::Ball { center, radius } => (
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        ),
    }
}

/// Grid point minimizing `objective` among those passing `feasible`.
pub fn grid_minimize(
    set: &FeasibleSet,
    resolution: f64,
    objective: impl Fn(&[f64]) -> f64,
    feasible: impl Fn(&[f64]) -> bool,
) -> Result<Benchmark> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for p in grid_points(set, resolution)? {
        if !feasible(&p) {
            continue;
        }
        let v = objective(&p);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, p));
        }
    }
    let (total, x) = best.ok_or(Error::InfeasibleBenchmark)?;
    Ok(Benchmark {
        x: DecisionVector::new(x)?,
        total,
    })
}

/// Grid benchmark of `Σ_t f̂_t` over `{x : ĝ_t(x) ≤ 0 for all t}`.
pub fn grid_benchmark(env: &dyn MemoryEnvironment, resolution: f64) -> Result<Benchmark> {
    let rounds = env.memory()..=env.horizon();
    grid_minimize(
        env.set(),
        resolution,
        |x| rounds.clone().map(|t| env.lifted_loss(t, x)).sum(),
        |x| rounds.clone().all(|t| env.lifted_constraint(t, x) <= 0.0),
    )
}

/// Exact minimizer of `<c, x>` over the set cut by half-planes, for
/// dimension one or two. Returns `None` when the cut set is empty.
pub fn linear_minimize(set: &FeasibleSet, c: &[f64], cuts: &[Halfspace]) -> Result<Option<Vec<f64>>> {
    if c.len() != set.dim() || cuts.iter().any(|h| h.normal.len() != set.dim()) {
        return config("linear program dimensions differ from the set");
    }
    match set.dim() {
        1 => Ok(interval_minimize(set, c[0], cuts)),
        2 => Ok(planar_minimize(set, c, &reduce_cuts(set, cuts))),
        _ => config("exact linear benchmark is limited to dimension one or two"),
    }
}

fn interval_minimize(set: &FeasibleSet, c: f64, cuts: &[Halfspace]) -> Option<Vec<f64>> {
    let (lo, hi) = bounding_box(set);
    let (mut lo, mut hi) = (lo[0], hi[0]);
    for h in cuts {
        let (n, q) = (h.normal[0], h.bound);
        if n > 0.0 {
            hi = hi.min(q / n);
        } else if n < 0.0 {
            lo = lo.max(q / n);
        } else if q < 0.0 {
            return None;
        }
    }
    if lo > hi {
        return None;
    }
    let center = set.center().coords()[0];
    Some(vec![if c > 0.0 {
        lo
    } else if c < 0.0 {
        hi
    } else {
        center.clamp(lo, hi)
    }])
}

/// Drops half-planes implied by the others. When the set's center lies
/// strictly inside every cut, `<n, x − x₀> ≤ q − <n, x₀>` is the polar
/// constraint of the point `n / (q − <n, x₀>)`, and only the vertices of
/// the convex hull of those points can bind.
pub fn reduce_cuts(set: &FeasibleSet, cuts: &[Halfspace]) -> Vec<Halfspace> {
    let center = set.center();
    let x0 = center.coords();
    if set.dim() != 2 {
        return cuts.to_vec();
    }
    let mut points = Vec::with_capacity(cuts.len());
    for (k, h) in cuts.iter().enumerate() {
        let margin = h.bound - linalg::dot(&h.normal, x0);
        if linalg::norm(&h.normal) == 0.0 && h.bound >= 0.0 {
            continue;
        }
        if !(margin > 0.0) {
            return cuts.to_vec();
        }
        points.push(([h.normal[0] / margin, h.normal[1] / margin], k));
    }
    convex_hull(points).into_iter().map(|k| cuts[k].clone()).collect()
}

/// Indices of the hull vertices (monotone chain, collinear points dropped).
fn convex_hull(mut pts: Vec<([f64; 2], usize)>) -> Vec<usize> {
    pts.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() <= 2 {
        return pts.into_iter().map(|p| p.1).collect();
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<([f64; 2], usize)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &([f64; 2], usize)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2].0, hull[hull.len() - 1].0, p.0) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull.into_iter().map(|p| p.1).collect()
}

fn planar_minimize(set: &FeasibleSet, c: &[f64], cuts: &[Halfspace]) -> Option<Vec<f64>> {
    let mut lines: Vec<Halfspace> = cuts.to_vec();
    let mut candidates: Vec<Vec<f64>> = vec![set.center().into_inner()];
    match set {
        FeasibleSet::Box { lo, hi } => {
            for j in 0..2 {
                let mut e = vec![0.0; 2];
                e[j] = 1.0;
                lines.push(Halfspace::new(e.clone(), hi[j]));
                lines.push(Halfspace::new(linalg::scaled(-1.0, &e), -lo[j]));
            }
        }
        FeasibleSet::Ball { center, radius } => {
            let norm = linalg::norm(c);
            if norm > 0.0 {
                candidates.push(linalg::add(center, &linalg::scaled(-radius / norm, c)));
            }
            for h in cuts {
                candidates.extend(line_circle(h, center, *radius));
            }
        }
    }
    for a in 0..lines.len() {
        for b in a + 1..lines.len() {
            if let Some(p) = line_line(&lines[a], &lines[b]) {
                candidates.push(p);
            }
        }
    }
    candidates
        .into_iter()
        .filter(|p| set.contains(p, 1e-9 * (1.0 + set.diameter())) && cuts.iter().all(|h| h.contains(p)))
        .map(|p| (linalg::dot(c, &p), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
}

fn line_circle(h: &Halfspace, center: &[f64], radius: f64) -> Vec<Vec<f64>> {
    let nn = linalg::norm_sq(&h.normal);
    if nn == 0.0 {
        return Vec::new();
    }
    let q = h.bound - linalg::dot(&h.normal, center);
    let dist_sq = q * q / nn;
    if dist_sq > radius * radius {
        return Vec::new();
    }
    let foot = linalg::add(center, &linalg::scaled(q / nn, &h.normal));
    let half = (radius * radius - dist_sq).sqrt() / nn.sqrt();
    let tangent = [-h.normal[1], h.normal[0]];
    vec![
        linalg::add(&foot, &linalg::scaled(half, &tangent)),
        linalg::add(&foot, &linalg::scaled(-half, &tangent)),
    ]
}

fn line_line(a: &Halfspace, b: &Halfspace) -> Option<Vec<f64>> {
    let (n, m) = (&a.normal, &b.normal);
    let det = n[0] * m[1] - n[1] * m[0];
    if det.abs() <= 1e-14 * linalg::norm(n) * linalg::norm(m) {
        return None;
    }
    Some(vec![
        (a.bound * m[1] - b.bound * n[1]) / det,
        (n[0] * b.bound - m[0] * a.bound) / det,
    ])
}

/// Benchmark values for every prefix of a run, plus the per-round
/// comparators `min_{g_t(x) ≤ 0} f̂_t(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSeries {
    pub first_round: usize,
    /// Minimum of the lifted loss accumulated through each round over the
    /// decisions feasible for every constraint seen so far; `None` once that
    /// set is empty.
    pub prefix_total: Vec<Option<f64>>,
    pub per_round: Vec<Option<f64>>,
    /// Minimizer over the full horizon.
    pub best: Option<Benchmark>,
}

impl BenchmarkSeries {
    pub fn last_round(&self) -> usize {
        self.first_round + self.prefix_total.len() - 1
    }

    pub fn total_at(&self, t: usize) -> Option<f64> {
        self.prefix_total.get(t.checked_sub(self.first_round)?).copied().flatten()
    }

    pub fn comparator_at(&self, t: usize) -> Option<f64> {
        self.per_round.get(t.checked_sub(self.first_round)?).copied().flatten()
    }
}

/// The benchmark of a tracking instance lies on the diagonal `u·1`, where
/// the lifted loss is `½ d Σ (u − c_t)²` and each constraint is a one-sided
/// cut of the admissible range of `u`.
pub fn appendix_a_series(inst: &AppendixAInstance) -> BenchmarkSeries {
    let dim = inst.params.dim as f64;
    let (dlo, dhi) = inst.diagonal_range();
    let (mut lo, mut hi) = (dlo, dhi);
    let (mut n, mut mean, mut spread) = (0.0, 0.0, 0.0);
    let mut prefix_total = Vec::new();
    let mut per_round = Vec::new();
    let mut best = None;
    for t in inst.rounds() {
        let c = inst.target(t);
        n += 1.0;
        let delta = c - mean;
        mean += delta / n;
        spread += delta * (c - mean);
        (lo, hi) = inst.cut(t, lo, hi);
        if lo <= hi {
            let u = mean.clamp(lo, hi);
            prefix_total.push(Some(0.5 * dim * (spread + n * (u - mean) * (u - mean))));
            best = Some(u);
        } else {
            prefix_total.push(None);
            best = None;
        }
        let (plo, phi) = inst.cut(t, dlo, dhi);
        per_round.push((plo <= phi).then(|| {
            let u = c.clamp(plo, phi);
            0.5 * dim * (u - c) * (u - c)
        }));
    }
    BenchmarkSeries {
        first_round: inst.first_round(),
        best: best.zip(prefix_total.last().copied().flatten()).map(|(u, total)| Benchmark {
            x: DecisionVector::from_finite(vec![u; inst.params.dim]),
            total,
        }),
        prefix_total,
        per_round,
    }
}

/// Cuts of round `t`: each counted constraint slice for the slice-wise
/// class, or their sum for the lifted class.
fn separable_cuts(inst: &SeparableInstance, t: usize, class: BenchmarkClass) -> Vec<Halfspace> {
    let m = inst.params.memory;
    let counted = (0..=m).filter(|&i| inst.variant() == ProblemVariant::CocoM2 || i == 0);
    let slices: Vec<_> = counted.map(|i| inst.constraint_slice(t, i)).collect();
    let as_cut = |coeff: Vec<f64>, offset: f64| Halfspace::new(coeff, -offset);
    match class {
        BenchmarkClass::SliceWise => slices.into_iter().map(|s| as_cut(s.coeff, s.offset)).collect(),
        BenchmarkClass::Lifted => {
            let mut coeff = vec![0.0; inst.params.dim];
            let mut offset = 0.0;
            for s in &slices {
                linalg::axpy(1.0, &s.coeff, &mut coeff);
                offset += s.offset;
            }
            vec![as_cut(coeff, offset)]
        }
    }
}

/// Exact series for the linear instance. Rounds start at `max(m, 1)`; the
/// slices of rounds up to `m` vanish.
pub fn separable_series(inst: &SeparableInstance, class: BenchmarkClass) -> Result<BenchmarkSeries> {
    let set = inst.feasible_set();
    let m = inst.params.memory;
    let d = inst.params.dim;
    let mut cum = vec![0.0; d];
    let mut cum_offset = 0.0;
    let mut cuts: Vec<Halfspace> = Vec::new();
    let mut empty = false;
    let mut prefix_total = Vec::new();
    let mut per_round = Vec::new();
    let mut best = None;
    let first_round = m.max(1);
    for t in first_round..=inst.params.horizon {
        let mut loss = vec![0.0; d];
        let mut loss_offset = 0.0;
        for i in 0..=m {
            let s = inst.loss_slice(t, i);
            linalg::axpy(1.0, &s.coeff, &mut loss);
            loss_offset += s.offset;
        }
        linalg::axpy(1.0, &loss, &mut cum);
        cum_offset += loss_offset;
        let round_cuts = separable_cuts(inst, t, class);
        per_round.push(
            linear_minimize(set, &loss, &round_cuts)?.map(|x| linalg::dot(&loss, &x) + loss_offset),
        );
        if !empty {
            cuts.extend(round_cuts);
            cuts = reduce_cuts(set, &cuts);
            match linear_minimize(set, &cum, &cuts)? {
                Some(x) => {
                    let total = linalg::dot(&cum, &x) + cum_offset;
                    prefix_total.push(Some(total));
                    best = Some(Benchmark {
                        x: DecisionVector::new(x)?,
                        total,
                    });
                }
                None => {
                    empty = true;
                    best = None;
                }
            }
        }
        if empty {
            prefix_total.push(None);
        }
    }
    Ok(BenchmarkSeries {
        first_round,
        prefix_total,
        per_round,
        best,
    })
}

/// Grid benchmark over the slice-wise feasible set of a linear instance.
pub fn separable_grid_benchmark(
    inst: &SeparableInstance,
    class: BenchmarkClass,
    resolution: f64,
) -> Result<Benchmark> {
    let m = inst.params.memory;
    let rounds = m..=inst.params.horizon;
    let cuts: Vec<Halfspace> = rounds.clone().flat_map(|t| separable_cuts(inst, t, class)).collect();
    grid_minimize(
        inst.feasible_set(),
        resolution,
        |x| rounds.clone().map(|t| inst.lifted_loss(t, x)).sum(),
        |x| cuts.iter().all(|h| h.value(x) <= 0.0),
    )
}
