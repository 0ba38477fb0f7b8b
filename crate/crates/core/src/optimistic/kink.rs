//! Choosing a decision that sits on the kink of one or more of its own
//! constraint slices.
//!
//! The slices acting on the decision being chosen enter the FTRL objective
//! through `w_j (⟨b_j, x⟩ + q_j)⁺`. When no 0/1 activity pattern reproduces
//! itself, the minimizer lies where some of these positive parts are
//! exactly zero. For each pattern of (inactive, active, kinked) slices we
//! minimize the objective restricted to the kink subspace, then recover the
//! subgradient weights `θ_j ∈ [0, 1]` of the kinked slices from the
//! optimality conditions.

use crate::domain::{DecisionVector, FeasibleSet};
use crate::linalg;

/// One constraint slice acting on the decision being chosen.
#[derive(Debug, Clone)]
pub(crate) struct OwnSlice<'a> {
    pub weight: f64,
    pub coeff: &'a [f64],
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct KinkSolution {
    pub theta: Vec<f64>,
    pub kinked: Vec<bool>,
    pub x: DecisionVector,
}

/// Largest number of slices for which patterns are enumerated.
const MAX_SLICES: usize = 8;

/// Minimizes `⟨c, x⟩ + Σ_j w_j (⟨b_j, x⟩ + q_j)⁺ + (μ/2)‖x − center‖²` over a
/// ball (or an interval), where `c` already holds every linear term. Only
/// solutions with at least one kinked slice are searched for.
pub(crate) fn solve(set: &FeasibleSet, c: &[f64], mu: f64, slices: &[OwnSlice<'_>]) -> Option<KinkSolution> {
    let k = slices.len();
    if k == 0 || k > MAX_SLICES {
        return None;
    }
    let (center, radius) = match set {
        FeasibleSet::Ball { center, radius } => (center.clone(), *radius),
        FeasibleSet::Box { lo, hi } if lo.len() == 1 => (vec![0.5 * (lo[0] + hi[0])], 0.5 * (hi[0] - lo[0])),
        FeasibleSet::Box { .. } => return None,
    };
    let total = 3usize.pow(k as u32);
    // Patterns with fewer kinks first.
    let mut patterns: Vec<Vec<u8>> = (0..total)
        .map(|mut code| {
            (0..k)
                .map(|_| {
                    let digit = (code % 3) as u8;
                    code /= 3;
                    digit
                })
                .collect::<Vec<u8>>()
        })
        .filter(|p| p.contains(&2))
        .collect();
    patterns.sort_by_key(|p| p.iter().filter(|&&d| d == 2).count());

    for pattern in patterns {
        if let Some(sol) = try_pattern(&center, radius, c, mu, slices, &pattern) {
            return Some(sol);
        }
    }
    None
}

/// Pattern digits: 0 inactive, 1 active, 2 kinked.
fn try_pattern(
    center: &[f64],
    radius: f64,
    c: &[f64],
    mu: f64,
    slices: &[OwnSlice<'_>],
    pattern: &[u8],
) -> Option<KinkSolution> {
    let d = c.len();
    let mut lin = c.to_vec();
    for (s, &digit) in slices.iter().zip(pattern) {
        if digit == 1 {
            linalg::axpy(s.weight, s.coeff, &mut lin);
        }
    }
    let kinked: Vec<usize> = (0..slices.len()).filter(|&j| pattern[j] == 2).collect();
    if kinked.iter().any(|&j| slices[j].weight <= 0.0) {
        return None;
    }

    // Orthonormal basis of the kink normals and the point of the kink
    // subspace nearest the origin.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for &j in &kinked {
        let mut v = slices[j].coeff.to_vec();
        let mut r = -slices[j].offset;
        for (u, &ru) in basis.iter().zip(&rhs) {
            let proj = linalg::dot(u, &v);
            linalg::axpy(-proj, u, &mut v);
            r -= proj * ru;
        }
        let n = linalg::norm(&v);
        if n <= 1e-12 * linalg::norm(slices[j].coeff).max(f64::MIN_POSITIVE) {
            return None;
        }
        basis.push(linalg::scaled(1.0 / n, &v));
        rhs.push(r / n);
    }
    let perp = |v: &[f64]| -> Vec<f64> {
        let mut out = v.to_vec();
        for u in &basis {
            let proj = linalg::dot(u, v);
            linalg::axpy(-proj, u, &mut out);
        }
        out
    };
    let mut anchor = vec![0.0; d];
    for (u, &r) in basis.iter().zip(&rhs) {
        linalg::axpy(r, u, &mut anchor);
    }
    // The set restricted to the subspace is a ball around `sub_center`.
    let mut sub_center = perp(center);
    linalg::axpy(1.0, &anchor, &mut sub_center);
    let offset_sq = radius * radius - linalg::norm_sq(&linalg::sub(center, &sub_center));
    if offset_sq < 0.0 {
        return None;
    }
    let sub_radius = offset_sq.sqrt();

    // The regularizer is centered at `center`; within the subspace this is
    // the same as centering at `sub_center` up to a constant.
    let g = perp(&lin);
    let g_norm = linalg::norm(&g);
    let negligible = basis.len() == d || g_norm <= 1e-12 * linalg::norm(&lin);
    let mut x = sub_center.clone();
    if negligible {
        // The objective is flat on the subspace: every point minimizes it.
    } else if mu > 0.0 {
        let step = linalg::scaled(-1.0 / mu, &g);
        let len = linalg::norm(&step);
        let scale = if len > sub_radius { sub_radius / len } else { 1.0 };
        linalg::axpy(scale, &step, &mut x);
    } else if g_norm > 0.0 {
        linalg::axpy(-sub_radius / g_norm, &g, &mut x);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }

    // Signs of the remaining slices must match the pattern.
    for (j, s) in slices.iter().enumerate() {
        let value = linalg::dot(s.coeff, &x) + s.offset;
        match pattern[j] {
            0 if value > 0.0 => return None,
            1 if value <= 0.0 => return None,
            _ => {}
        }
    }

    // Optimality: lin + μ(x − center) + Σ_K θ_j w_j b_j + ν (x − center) = 0,
    // with ν ≥ 0 only on the boundary of the set.
    let outward = linalg::sub(&x, center);
    let on_boundary = radius > 0.0 && linalg::norm(&outward) >= radius * (1.0 - 1e-9);
    let mut target = lin.clone();
    linalg::axpy(mu, &outward, &mut target);
    let target = linalg::scaled(-1.0, &target);
    let mut columns: Vec<Vec<f64>> = kinked
        .iter()
        .map(|&j| linalg::scaled(slices[j].weight, slices[j].coeff))
        .collect();
    if on_boundary {
        columns.push(outward.clone());
    }
    let coeffs = least_squares(&columns, &target)?;
    let mut fitted = vec![0.0; d];
    for (col, &a) in columns.iter().zip(&coeffs) {
        linalg::axpy(a, col, &mut fitted);
    }
    let scale = linalg::norm(&target) + columns.iter().map(|c| linalg::norm(c)).sum::<f64>() + 1.0;
    if linalg::dist(&fitted, &target) > 1e-8 * scale {
        return None;
    }
    if on_boundary && coeffs[kinked.len()] < -1e-9 * scale {
        return None;
    }
    let mut theta: Vec<f64> = pattern.iter().map(|&p| if p == 1 { 1.0 } else { 0.0 }).collect();
    for (&j, &a) in kinked.iter().zip(&coeffs) {
        if !(-1e-9..=1.0 + 1e-9).contains(&a) {
            return None;
        }
        theta[j] = a.clamp(0.0, 1.0);
    }
    Some(KinkSolution {
        theta,
        kinked: pattern.iter().map(|&p| p == 2).collect(),
        x: DecisionVector::new(x).ok()?,
    })
}

/// Solves `min ‖Σ_j a_j col_j − target‖` through the normal equations.
fn least_squares(columns: &[Vec<f64>], target: &[f64]) -> Option<Vec<f64>> {
    let n = columns.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let mut row: Vec<f64> = (0..n).map(|c| linalg::dot(&columns[r], &columns[c])).collect();
            row.push(linalg::dot(&columns[r], target));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col].abs() <= 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=n {
                    let delta = factor * a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    Some((0..n).map(|r| a[r][n] / a[r][r]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_kink_on_the_circle() {
        // Minimize -x0 + 2 (x0 - 0.5)^+ on the unit disc: the optimum sits on
        // the kink x0 = 0.5 at the top of the circle's admissible arc, with
        // the subgradient balancing the pull, θ = 1/2.
        let set = FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let b = [1.0, 0.0];
        let sol = solve(
            &set,
            &[-1.0, 0.0],
            0.0,
            &[OwnSlice {
                weight: 2.0,
                coeff: &b,
                offset: -0.5,
            }],
        )
        .unwrap();
        assert_eq!(sol.kinked, vec![true]);
        assert!((sol.x.coords()[0] - 0.5).abs() < 1e-12);
        assert!((sol.theta[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn two_kinks_meet_inside_the_disc() {
        // Pull towards (1, 1), two penalties whose kinks cross at (0.2, 0.3).
        let set = FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let (b1, b2) = ([1.0, 0.0], [0.0, 1.0]);
        let sol = solve(
            &set,
            &[-1.0, -1.0],
            0.0,
            &[
                OwnSlice {
                    weight: 3.0,
                    coeff: &b1,
                    offset: -0.2,
                },
                OwnSlice {
                    weight: 4.0,
                    coeff: &b2,
                    offset: -0.3,
                },
            ],
        )
        .unwrap();
        assert_eq!(sol.kinked, vec![true, true]);
        assert!(linalg::dist(sol.x.coords(), &[0.2, 0.3]) < 1e-12);
        assert!((sol.theta[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((sol.theta[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn brute_force_confirms_the_kink_minimizer() {
        let set = FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let (b1, b2) = ([0.9, 0.2], [1.1, -0.3]);
        let c = [-0.7, -0.4];
        let mu = 0.3;
        let slices = [
            OwnSlice {
                weight: 1.5,
                coeff: &b1,
                offset: -0.2,
            },
            OwnSlice {
                weight: 2.5,
                coeff: &b2,
                offset: -0.25,
            },
        ];
        let objective = |x: &[f64]| {
            linalg::dot(&c, x)
                + slices
                    .iter()
                    .map(|s| s.weight * (linalg::dot(s.coeff, x) + s.offset).max(0.0))
                    .sum::<f64>()
                + 0.5 * mu * linalg::norm_sq(x)
        };
        let sol = solve(&set, &c, mu, &slices).unwrap();
        let best = objective(sol.x.coords());
        let n = 400;
        for a in 0..=n {
            for b in 0..=n {
                let x = [-1.0 + 2.0 * a as f64 / n as f64, -1.0 + 2.0 * b as f64 / n as f64];
                if linalg::norm(&x) <= 1.0 {
                    assert!(objective(&x) >= best - 1e-12);
                }
            }
        }
    }

    #[test]
    fn interval_sets_are_supported() {
        let set = FeasibleSet::new_box(vec![-2.0], vec![2.0]).unwrap();
        let b = [1.0];
        let sol = solve(
            &set,
            &[-1.0],
            0.0,
            &[OwnSlice {
                weight: 4.0,
                coeff: &b,
                offset: -1.0,
            }],
        )
        .unwrap();
        assert_eq!(sol.x.coords(), &[1.0]);
        assert!((sol.theta[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn nearly_parallel_kinks_meeting_inside() {
        let set = FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let w = 4.143172719561204;
        let b = [
            [0.36907845500296643, 0.09073750547302163],
            [0.21823275757837682, 0.07554162311515009],
            [0.3432626630407123, -0.017260746081803745],
        ];
        let slices: Vec<OwnSlice<'_>> = b
            .iter()
            .map(|c| OwnSlice {
                weight: w,
                coeff: c,
                offset: -0.1,
            })
            .collect();
        let sol = solve(&set, &[-0.9810647689602092, -0.09821149117846711], 0.0, &slices).unwrap();
        assert_eq!(sol.kinked, vec![true, false, true]);
        assert!(linalg::dist(sol.x.coords(), &[0.28786202, -0.06881024]) < 1e-7);
    }
}
