//! Cumulative regret and constraint violation along a run.

use serde::Serialize;

use crate::error::{contract, Result};
use crate::metrics::BenchmarkSeries;
use crate::trace::RunTrace;

/// Running totals, one entry per scored round.
///
/// Rounds before the benchmark's first round (the warm-up of learners that
/// play from round one) are skipped; their losses and constraints vanish.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretSeries {
    pub rounds: Vec<usize>,
    /// `Σ f_s(x_{s−m..s}) − min_{u ∈ X^m_t} Σ f̂_s(u)`.
    pub static_cum: Vec<Option<f64>>,
    /// `Σ f̂_s(x_s) − min_{u ∈ X^m_t} Σ f̂_s(u)`.
    pub lifted_cum: Vec<Option<f64>>,
    /// `Σ [f_s(x_{s−m..s}) − f̂_s(x_s)]`, the price of a moving window.
    pub deviation_cum: Vec<f64>,
    /// Against the best feasible decision of every round on its own.
    pub per_round_cum: Vec<Option<f64>>,
    pub ccv_cum: Vec<f64>,
}

impl RegretSeries {
    fn index(&self, t: usize) -> Option<usize> {
        let first = *self.rounds.first()?;
        let k = t.checked_sub(first)?;
        (k < self.rounds.len()).then_some(k)
    }

    pub fn static_at(&self, t: usize) -> Option<f64> {
        self.static_cum[self.index(t)?]
    }

    pub fn ccv_at(&self, t: usize) -> Option<f64> {
        Some(self.ccv_cum[self.index(t)?])
    }

    pub fn final_static(&self) -> Option<f64> {
        self.static_cum.last().copied().flatten()
    }

    pub fn final_ccv(&self) -> f64 {
        self.ccv_cum.last().copied().unwrap_or(0.0)
    }
}

pub fn regret_series(trace: &RunTrace, bench: &BenchmarkSeries) -> Result<RegretSeries> {
    let records: Vec<_> = trace.records.iter().filter(|r| r.t >= bench.first_round).collect();
    if records.first().is_some_and(|r| r.t != bench.first_round) {
        return contract(format!(
            "trace starts at round {}, benchmark at {}",
            records[0].t, bench.first_round
        ));
    }
    if records.last().is_some_and(|r| r.t > bench.last_round()) {
        return contract("trace runs past the benchmark horizon");
    }
    let n = records.len();
    let mut out = RegretSeries {
        rounds: Vec::with_capacity(n),
        static_cum: Vec::with_capacity(n),
        lifted_cum: Vec::with_capacity(n),
        deviation_cum: Vec::with_capacity(n),
        per_round_cum: Vec::with_capacity(n),
        ccv_cum: Vec::with_capacity(n),
    };
    let (mut f_mem, mut f_hat, mut ccv) = (0.0, 0.0, 0.0);
    let mut per_round = Some(0.0);
    for (k, r) in records.iter().enumerate() {
        if r.t != bench.first_round + k {
            return contract(format!("trace skips round {}", bench.first_round + k));
        }
        f_mem += r.f_mem;
        f_hat += r.f_hat;
        ccv += r.violation;
        let total = bench.total_at(r.t);
        per_round = per_round.zip(bench.comparator_at(r.t)).map(|(acc, c)| acc + r.f_mem - c);
        out.rounds.push(r.t);
        out.static_cum.push(total.map(|b| f_mem - b));
        out.lifted_cum.push(total.map(|b| f_hat - b));
        out.deviation_cum.push(f_mem - f_hat);
        out.per_round_cum.push(per_round);
        out.ccv_cum.push(ccv);
    }
    Ok(out)
}
