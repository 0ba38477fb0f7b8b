//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

use std::time::Instant;

use coco_mem::domain::{DecisionVector, FeasibleSet};
use coco_mem::geometry::{ftrl_argmin, project, Regularizer};
use coco_mem::harness::{run_seed, run_seeds, summarize, write_outputs, ExperimentConfig, SeedRun};
use coco_mem::ogd::surrogate_gradient;
use coco_mem::optimistic::{huber, DoublingSchedule};
use coco_mem::oracle::{LinearMemoryFunction, MemoryFunction, QuadraticTracking};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn config(v: Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string()).expect("acceptance configs are valid")
}

fn appendix(variant: &str, mode: &str, horizon: usize, memory: usize, penalty: Value, seeds: Vec<u64>) -> ExperimentConfig {
    config(json!({
        "algorithm": "penalty_ogd",
        "variant": variant,
        "horizon": horizon,
        "memory": memory,
        "environment": {"kind": "appendix_a", "mode": mode},
        "penalty": penalty,
        "seeds": seeds,
    }))
}

fn separable(algorithm: &str, variant: &str, horizon: usize, memory: usize, predictor: Value, seeds: Vec<u64>) -> ExperimentConfig {
    config(json!({
        "algorithm": algorithm,
        "variant": variant,
        "horizon": horizon,
        "memory": memory,
        "environment": {"kind": "separable"},
        "penalty": {"kind": "exponential", "lambda": {"mode": "fixed_theorem"}},
        "predictor": predictor,
        "seeds": seeds,
    }))
}

fn quadratic_schedule() -> Value {
    json!({"kind": "quadratic", "lambda": {"mode": "sqrt_t_schedule"}})
}

fn theorem_penalty(kind: &str) -> Value {
    json!({"kind": kind, "lambda": {"mode": "fixed_theorem"}})
}

fn runs(cfg: &ExperimentConfig, checks: bool) -> Vec<SeedRun> {
    let (runs, failed) = run_seeds(cfg, None, checks).expect("config is valid");
    assert!(failed.is_empty(), "seeds failed: {failed:?}");
    runs
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_ratio(runs: &[SeedRun], t: usize) -> (f64, f64) {
    (
        mean(runs.iter().map(|r| r.series.static_at(t).expect("benchmark is feasible") / t as f64)),
        mean(runs.iter().map(|r| r.series.ccv_at(t).expect("round is scored") / t as f64)),
    )
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

fn appendix_reproduction() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for mode in ["stochastic", "adversarial_mixture"] {
        let cfg = appendix("coco_m2", mode, 4000, 3, quadratic_schedule(), seeds(10));
        let runs = runs(&cfg, false);
        let (r400, v400) = mean_ratio(&runs, 400);
        let (r4000, v4000) = mean_ratio(&runs, 4000);
        pass &= r4000 < r400 && v4000 <= 0.6 * v400;
        detail.push(format!(
            "{mode}: R/t {r400:.3}->{r4000:.3}, V/t {v400:.3}->{v4000:.3}"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 10.0;
    detail.push(format!("{secs:.2}s"));
    outcome(pass, detail.join("; "))
}

fn theorem_constants() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for horizon in [500, 2000, 8000] {
        for memory in [1, 3] {
            for mode in ["stochastic", "adversarial_mixture"] {
                let mut cases = vec![
                    appendix("coco_m2", mode, horizon, memory, theorem_penalty("quadratic"), seeds(10)),
                    appendix("coco_m", mode, horizon, memory, theorem_penalty("quadratic"), seeds(10)),
                ];
                if coco_mem::metrics::short_memory_admissible(horizon, memory) {
                    cases.push(appendix("coco_m", mode, horizon, memory, theorem_penalty("exponential"), seeds(10)));
                }
                for cfg in cases {
                    for run in runs(&cfg, false) {
                        checked += 1;
                        match &run.bound {
                            Ok(report) if report.holds() == Some(true) => {
                                worst = worst
                                    .max(report.regret_slack.unwrap_or(0.0))
                                    .max(report.ccv_slack.unwrap_or(0.0));
                            }
                            other => failures.push(format!(
                                "T={horizon} m={memory} {mode} {:?} seed {}: {:?}",
                                cfg.variant,
                                run.seed,
                                other.as_ref().map(|r| (r.regret_slack, r.ccv_slack))
                            )),
                        }
                    }
                }
            }
        }
    }
    let pass = failures.is_empty();
    let mut detail = format!("{checked} runs, largest measured/bound ratio {worst:.3}");
    if let Some(f) = failures.first() {
        detail += &format!("; first failure {f}");
    }
    outcome(pass, detail)
}

fn lemma_suite() -> Outcome {
    let mut total = 0;
    let mut failed = Vec::new();
    let mut record = |runs: Vec<SeedRun>, label: &str| {
        for run in runs {
            for c in &run.checks {
                total += 1;
                if !c.holds {
                    failed.push(format!("{label} seed {} {}: {} > {}", run.seed, c.name, c.lhs, c.rhs));
                }
            }
        }
    };
    for mode in ["stochastic", "adversarial_mixture"] {
        for (variant, penalty, memory) in [
            ("coco_m2", theorem_penalty("quadratic"), 3),
            ("coco_m", theorem_penalty("quadratic"), 3),
            ("coco_m2", quadratic_schedule(), 3),
            ("coco_m", theorem_penalty("exponential"), 1),
        ] {
            let cfg = appendix(variant, mode, 2000, memory, penalty, seeds(3));
            record(runs(&cfg, true), &format!("{mode} {variant}"));
        }
    }
    for variant in ["coco_m2", "coco_m"] {
        for memory in [1, 2] {
            for predictor in [json!({"kind": "perfect"}), json!({"kind": "zero"}), json!({"kind": "noisy", "scale": 0.1})] {
                let cfg = separable("odaf", variant, 1000, memory, predictor.clone(), seeds(3));
                record(runs(&cfg, true), &format!("separable {variant} m={memory} {predictor}"));
            }
        }
    }
    let mut detail = format!("{total} inequalities and identities");
    if let Some(f) = failed.first() {
        detail += &format!("; {} failed, first: {f}", failed.len());
    }
    outcome(failed.is_empty(), detail)
}

fn stochastic_decay() -> Outcome {
    let cfg = appendix("coco_m2", "stochastic", 4000, 3, quadratic_schedule(), seeds(10));
    let runs = runs(&cfg, false);
    let (r1000, v1000) = mean_ratio(&runs, 1000);
    let (r4000, v4000) = mean_ratio(&runs, 4000);
    outcome(
        r4000 <= 0.7 * r1000 && v4000 <= 0.8 * v1000,
        format!("R/t {r1000:.3}->{r4000:.3}, V/t {v1000:.3}->{v4000:.3}"),
    )
}

fn prediction_gain() -> Outcome {
    let m = 2;
    let perfect = runs(&separable("odaf", "coco_m2", 2000, m, json!({"kind": "perfect"}), seeds(10)), false);
    let zero = runs(&separable("odaf", "coco_m2", 2000, m, json!({"kind": "zero"}), seeds(10)), false);
    let silent = perfect.iter().all(|r| {
        r.trace
            .records
            .iter()
            .filter(|x| x.t > m)
            .all(|x| x.eps_f == 0.0 && x.eps_g == 0.0 && x.eps_z == 0.0 && x.step == 0.0)
    });
    let r_perfect = mean(perfect.iter().map(|r| r.series.final_static().unwrap()));
    let r_zero = mean(zero.iter().map(|r| r.series.final_static().unwrap()));

    let long = runs(&separable("odaf", "coco_m2", 4000, m, json!({"kind": "perfect"}), seeds(10)), false);
    let at = |t: usize| mean(long.iter().map(|r| r.series.static_at(t).unwrap()));
    let growth: Vec<f64> = [500, 1000, 2000].iter().map(|&t| (at(2 * t) - at(t)) / 2f64.ln()).collect();
    let fit = mean(growth.iter().copied());
    let logarithmic = growth.iter().all(|g| *g <= 3.0 * fit.abs());

    outcome(
        silent && r_perfect <= 0.2 * r_zero && logarithmic,
        format!(
            "errors and weights vanish: {silent}; R_T perfect {r_perfect:.2} vs zero {r_zero:.2}; \
             (R_2T - R_T)/ln 2 = {:.2?} against fit {fit:.2}",
            growth
        ),
    )
}

fn doubling() -> Outcome {
    // C = 1, c = 1, μ_1 = √1 = 1. The epoch-1 error passes 1 in round 2,
    // epoch 2's passes 4 in round 4 and epoch 3's passes 16 in round 7.
    let mut schedule = DoublingSchedule::new(1.0, 1.0, 1, 1.0).unwrap();
    let mut epochs = Vec::new();
    for e in [0.5, 0.6, 3.0, 1.5, 10.0, 0.0, 7.0, 0.0] {
        schedule.begin_round();
        epochs.push(schedule.epoch());
        schedule.end_round(e);
    }
    let scripted = epochs == [1, 1, 2, 2, 3, 3, 3, 4];

    let mut bounded = true;
    let mut most = 0;
    for (variant, scale) in [("coco_m", 0.1), ("coco_m2", 0.3), ("coco_m", 1.0)] {
        let mut cfg = separable(
            "odaf_doubling",
            variant,
            1000,
            2,
            json!({"kind": "noisy", "scale": scale}),
            seeds(5),
        );
        cfg.doubling = Some(coco_mem::harness::DoublingConfig {
            initial_rounds: 1,
            initial_error: 1e-4,
        });
        for run in runs(&cfg, false) {
            let schedule = run.doubling.as_ref().expect("doubling runs keep their schedule");
            let total_error: f64 = run.trace.records.iter().map(|r| r.eps_g).sum();
            let mu_final = schedule.psi(cfg.horizon, total_error).max(schedule.mu1());
            let cap = (mu_final / schedule.mu1()).log2().ceil() as usize + 1;
            bounded &= run.epochs <= cap && run.epochs == schedule.epoch();
            most = most.max(run.epochs);
        }
    }
    outcome(
        scripted && bounded,
        format!("scripted epochs {epochs:?}; random runs up to {most} epochs within the log bound: {bounded}"),
    )
}

fn random_set(rng: &mut ChaCha8Rng) -> FeasibleSet {
    let d = rng.random_range(1..=4);
    if rng.random_bool(0.5) {
        let lo: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..0.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.1..6.0)).collect();
        FeasibleSet::new_box(lo, hi).unwrap()
    } else {
        let c: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        FeasibleSet::new_ball(c, rng.random_range(0.1..5.0)).unwrap()
    }
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, spread: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-spread..spread)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Zooming grid search for a convex objective on a set of dimension ≤ 2.
fn zoom_argmin(set: &FeasibleSet, objective: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = match set {
        FeasibleSet::Box { lo, hi } => (lo.clone(), hi.clone()),
        FeasibleSet::Ball { center, radius } => (
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        ),
    };
    let n = 200;
    let mut best = set.center().into_inner();
    for _ in 0..12 {
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (0..=n).map(|k| l + (h - l) * k as f64 / n as f64).collect())
            .collect();
        let mut best_value = f64::INFINITY;
        let mut visit = |p: Vec<f64>| {
            let inside = set.contains(&p, 0.0);
            let q = if inside { p } else { project(set, &DecisionVector::new(p).unwrap()).unwrap().into_inner() };
            let v = objective(&q);
            if v < best_value {
                best_value = v;
                best = q;
            }
        };
        match axes.as_slice() {
            [xs] => xs.iter().for_each(|&x| visit(vec![x])),
            [xs, ys] => {
                for &x in xs {
                    for &y in ys {
                        visit(vec![x, y]);
                    }
                }
            }
            _ => unreachable!(),
        }
        let cell: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l) / n as f64).collect();
        for j in 0..best.len() {
            lo[j] = best[j] - 4.0 * cell[j];
            hi[j] = best[j] + 4.0 * cell[j];
        }
    }
    best
}

fn micro_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut notes = Vec::new();

    let mut projection_ok = true;
    for _ in 0..1000 {
        let set = random_set(&mut rng);
        let d = set.dim();
        let p = random_point(&mut rng, d, 12.0);
        let q = random_point(&mut rng, d, 12.0);
        let pp = project(&set, &DecisionVector::new(p.clone()).unwrap()).unwrap();
        let qq = project(&set, &DecisionVector::new(q.clone()).unwrap()).unwrap();
        let again = project(&set, &pp).unwrap();
        projection_ok &= set.contains(pp.coords(), 1e-10);
        projection_ok &= dist(again.coords(), pp.coords()) <= 1e-10;
        projection_ok &= dist(pp.coords(), qq.coords()) <= dist(&p, &q) + 1e-10;
    }
    notes.push(format!("projection {projection_ok}"));

    let mut ftrl_ok = true;
    let mut ftrl_worst = 0.0f64;
    for _ in 0..500 {
        let set = loop {
            let s = random_set(&mut rng);
            if s.dim() <= 2 {
                break s;
            }
        };
        let d = set.dim();
        let g = random_point(&mut rng, d, 10.0);
        let ball = matches!(set, FeasibleSet::Ball { .. });
        let mu = if ball && rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.01..10.0) };
        let r = Regularizer::for_set(&set);
        let x = ftrl_argmin(&set, &g, mu, &r).unwrap();
        let objective = |y: &[f64]| -> f64 { g.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + mu * r.value(y) };
        let oracle = zoom_argmin(&set, &objective);
        let gap = dist(x.coords(), &oracle) / set.diameter();
        ftrl_worst = ftrl_worst.max(gap);
        ftrl_ok &= gap <= 1e-5;
    }
    notes.push(format!("ftrl {ftrl_ok} (worst {ftrl_worst:.1e}·‖X‖)"));

    let mut huber_ok = true;
    for _ in 0..1000 {
        let x = rng.random_range(-100.0..100.0);
        let y = rng.random_range(-100.0..100.0);
        let h = huber(x, y);
        let cap = (0.5 * x * x).min(f64::abs(x) * f64::abs(y));
        huber_ok &= h <= cap + 1e-12 * cap.max(1.0) && h >= 0.0;
    }
    notes.push(format!("huber {huber_ok}"));

    let mut gradient_ok = true;
    let mut tested = 0;
    while tested < 100 {
        let d = rng.random_range(1..=3);
        let m = rng.random_range(0..=3);
        let set = FeasibleSet::symmetric_box(d, 5.0).unwrap();
        let target = random_point(&mut rng, d, 5.0);
        let f = QuadraticTracking::new(target, m, &set).unwrap();
        let coeffs: Vec<Vec<f64>> = (0..=m).map(|_| random_point(&mut rng, d, 2.0)).collect();
        let g = LinearMemoryFunction::new(coeffs, rng.random_range(-1.0..1.0), &set).unwrap();
        let x = DecisionVector::new(random_point(&mut rng, d, 4.0)).unwrap();
        let phi = rng.random_range(0.0..5.0);
        let h = 1e-5;
        if g.value_splat(&x).abs() < 1e-2 {
            continue;
        }
        let surrogate = |y: &DecisionVector| f.value_splat(y) + phi * g.value_splat(y).max(0.0);
        let grad = surrogate_gradient(&f, &g, &x, phi);
        let mut fd = vec![0.0; d];
        for j in 0..d {
            let mut up = x.coords().to_vec();
            let mut down = x.coords().to_vec();
            up[j] += h;
            down[j] -= h;
            fd[j] = (surrogate(&DecisionVector::new(up).unwrap()) - surrogate(&DecisionVector::new(down).unwrap())) / (2.0 * h);
        }
        let scale = grad.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        gradient_ok &= dist(&grad, &fd) <= 1e-6 * scale;
        tested += 1;
    }
    notes.push(format!("surrogate gradient {gradient_ok}"));

    let identical = byte_identical_reruns();
    notes.push(format!("reruns identical {identical}"));

    outcome(projection_ok && ftrl_ok && huber_ok && gradient_ok && identical, notes.join(", "))
}

fn byte_identical_reruns() -> bool {
    let cfgs = [
        appendix("coco_m2", "adversarial_mixture", 600, 3, quadratic_schedule(), seeds(4)),
        separable("odaf", "coco_m", 400, 2, json!({"kind": "noisy", "scale": 0.2}), seeds(4)),
        separable("odaf_doubling", "coco_m2", 400, 1, json!({"kind": "noisy", "scale": 0.5}), seeds(3)),
    ];
    cfgs.iter().all(|cfg| {
        let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        for (k, dir) in dirs.iter().enumerate() {
            let (runs, failed) = run_seeds(cfg, Some(k + 1), false).unwrap();
            let summary = summarize(cfg, &runs, failed);
            write_outputs(dir.path(), &runs, &summary).unwrap();
        }
        let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        names.len() == cfg.seeds.len() + 1
            && names.iter().all(|n| {
                std::fs::read(dirs[0].path().join(n)).unwrap() == std::fs::read(dirs[1].path().join(n)).unwrap()
            })
    }) && {
        let cfg = appendix("coco_m", "stochastic", 300, 1, theorem_penalty("exponential"), vec![7]);
        run_seed(&cfg, 7, false).unwrap().trace == run_seed(&cfg, 7, false).unwrap().trace
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 tracking reproduction", appendix_reproduction),
        ("2 theorem constants", theorem_constants),
        ("3 lemma suite", lemma_suite),
        ("4 stochastic decay", stochastic_decay),
        ("5 prediction gain", prediction_gain),
        ("6 doubling epochs", doubling),
        ("7 micro-properties", micro_properties),
    ];
    let mut all = true;
    for (name, check) in criteria {
        let o = check();
        all &= o.pass;
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if !all {
        std::process::exit(1);
    }
}
