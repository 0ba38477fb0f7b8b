//! Benchmarks, regret and violation accounting, closed-form bounds and
//! the intermediate inequalities behind them.

pub mod benchmark;
pub mod bounds;
pub mod lemmas;
pub mod regret;

pub use benchmark::{
    appendix_a_series, grid_benchmark, grid_minimize, linear_minimize, separable_grid_benchmark,
    separable_series, Benchmark, BenchmarkClass, BenchmarkSeries, Halfspace, DEFAULT_RESOLUTION,
};
pub use bounds::{
    optimistic_complexity, short_memory_admissible, short_memory_lambda, theoretical_bounds, BoundInputs,
    BoundReport, PredictionTerms, Theorem,
};
pub use lemmas::{
    error_split_check, forward_chain_checks, lifted_decomposition_check, memory_identity_check,
    surrogate_regret_check, InequalityCheck,
};
pub use regret::{regret_series, RegretSeries};
