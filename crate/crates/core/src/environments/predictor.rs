use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::linalg;
use crate::optimistic::{Predictor, SlicePrediction, SliceSource};

/// Predictor choice as it appears in run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorKind {
    Perfect,
    Zero,
    Noisy { scale: f64 },
}

impl PredictorKind {
    pub fn build(self, source: Arc<dyn SliceSource>, seed: u64) -> Result<Box<dyn Predictor>> {
        Ok(match self {
            PredictorKind::Perfect => Box::new(PerfectPredictor::new(source)),
            PredictorKind::Zero => Box::new(ZeroPredictor::new(source.dim())),
            PredictorKind::Noisy { scale } => Box::new(NoisyPredictor::new(source, scale, seed)?),
        })
    }
}

/// Returns the true slice and its true activity at the probed point.
#[derive(Debug, Clone)]
pub struct PerfectPredictor {
    source: Arc<dyn SliceSource>,
}

impl PerfectPredictor {
    pub fn new(source: Arc<dyn SliceSource>) -> Self {
        Self { source }
    }
}

impl Predictor for PerfectPredictor {
    fn predict(&self, _query_round: usize, s: usize, i: usize, point: &[f64]) -> SlicePrediction {
        if !self.source.in_range(s, i) {
            return SlicePrediction::zero(self.source.dim());
        }
        let loss = self.source.loss_slice(s, i);
        let cons = self.source.constraint_slice(s, i);
        SlicePrediction {
            loss_coeff: loss.coeff,
            active: cons.is_active(point),
            constraint_coeff: cons.coeff,
            constraint_offset: cons.offset,
        }
    }
}

/// Predicts nothing.
#[derive(Debug, Clone)]
pub struct ZeroPredictor {
    dim: usize,
}

impl ZeroPredictor {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Predictor for ZeroPredictor {
    fn predict(&self, _query_round: usize, _s: usize, _i: usize, _point: &[f64]) -> SlicePrediction {
        SlicePrediction::zero(self.dim)
    }
}

/// Perturbs the true coefficients and offset with `N(0, scale²)` noise
/// and flips the activity flag with probability
/// `scale / (scale + distance to the constraint's zero set)`.
///
/// Each query draws from its own generator keyed by
/// `(seed, query_round, s, i)`, so the noise is reproducible and fresh in
/// every round.
#[derive(Debug, Clone)]
pub struct NoisyPredictor {
    source: Arc<dyn SliceSource>,
    scale: f64,
    seed: u64,
}

impl NoisyPredictor {
    pub fn new(source: Arc<dyn SliceSource>, scale: f64, seed: u64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return config(format!("noise scale must be finite and nonnegative, got {scale}"));
        }
        Ok(Self { source, scale, seed })
    }

    fn rng(&self, query_round: usize, s: usize, i: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (chunk, v) in key
            .chunks_exact_mut(8)
            .zip([self.seed, query_round as u64, s as u64, i as u64])
        {
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

impl Predictor for NoisyPredictor {
    fn predict(&self, query_round: usize, s: usize, i: usize, point: &[f64]) -> SlicePrediction {
        if !self.source.in_range(s, i) {
            return SlicePrediction::zero(self.source.dim());
        }
        let loss = self.source.loss_slice(s, i);
        let cons = self.source.constraint_slice(s, i);
        let mut active = cons.is_active(point);
        if self.scale == 0.0 {
            return SlicePrediction {
                loss_coeff: loss.coeff,
                constraint_coeff: cons.coeff,
                constraint_offset: cons.offset,
                active,
            };
        }
        let mut rng = self.rng(query_round, s, i);
        let mut jitter = |c: Vec<f64>| -> Vec<f64> {
            c.into_iter()
                .map(|v| {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    v + self.scale * n
                })
                .collect()
        };
        let loss_coeff = jitter(loss.coeff);
        let constraint_coeff = jitter(cons.coeff.clone());
        let constraint_offset = jitter(vec![cons.offset])[0];
        let norm = linalg::norm(&cons.coeff);
        let distance = if norm > 0.0 {
            cons.value(point).abs() / norm
        } else {
            f64::INFINITY
        };
        if rng.random::<f64>() < self.scale / (self.scale + distance) {
            active = !active;
        }
        SlicePrediction {
            loss_coeff,
            constraint_coeff,
            constraint_offset,
            active,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ProblemVariant;
    use crate::environments::{SeparableInstance, SeparableParams};

    fn source() -> Arc<dyn SliceSource> {
        Arc::new(
            SeparableInstance::generate(
                SeparableParams {
                    horizon: 50,
                    variant: ProblemVariant::CocoM2,
                    ..Default::default()
                },
                1,
            )
            .unwrap(),
        )
    }

    #[test]
    fn perfect_reports_truth() {
        let src = source();
        let p = PerfectPredictor::new(src.clone());
        let x = [0.9, 0.0];
        let got = p.predict(4, 10, 1, &x);
        assert_eq!(got.loss_coeff, src.loss_slice(10, 1).coeff);
        assert_eq!(got.active, src.constraint_slice(10, 1).is_active(&x));
        assert_eq!(p.predict(4, 51, 0, &x), SlicePrediction::zero(2));
        assert_eq!(p.predict(4, 10, 3, &x), SlicePrediction::zero(2));
    }

    #[test]
    fn zero_scale_noise_matches_perfect() {
        let src = source();
        let perfect = PerfectPredictor::new(src.clone());
        let noisy = NoisyPredictor::new(src, 0.0, 9).unwrap();
        for s in 0..55 {
            for i in 0..=2 {
                let x = [0.5 - s as f64 / 50.0, 0.1];
                assert_eq!(noisy.predict(s, s, i, &x), perfect.predict(s, s, i, &x));
            }
        }
    }

    #[test]
    fn noise_is_reproducible_and_fresh_per_round() {
        let noisy = NoisyPredictor::new(source(), 0.3, 9).unwrap();
        let x = [0.2, 0.2];
        assert_eq!(noisy.predict(5, 8, 1, &x), noisy.predict(5, 8, 1, &x));
        assert_ne!(noisy.predict(5, 8, 1, &x), noisy.predict(6, 8, 1, &x));
    }

    #[test]
    fn flip_rate_tracks_distance() {
        let src = source();
        let noisy = NoisyPredictor::new(src.clone(), 0.1, 2).unwrap();
        let rate = |x: [f64; 2]| {
            let mut flips = 0;
            let mut total = 0;
            for q in 0..200 {
                for s in 3..=50 {
                    let truth = src.constraint_slice(s, 0).is_active(&x);
                    flips += (noisy.predict(q, s, 0, &x).active != truth) as usize;
                    total += 1;
                }
            }
            flips as f64 / total as f64
        };
        assert!(rate([-1.0, 0.0]) < rate([0.3, 0.0]));
    }

    #[test]
    fn rejects_negative_scale() {
        assert!(NoisyPredictor::new(source(), -1.0, 0).is_err());
        assert!(PredictorKind::Noisy { scale: f64::NAN }.build(source(), 0).is_err());
    }
}
