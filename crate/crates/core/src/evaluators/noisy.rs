use std::sync::atomic::{AtomicU64, Ordering};

use rand_distr::{Distribution, Normal};

use super::{EvalError, Evaluator, EvaluatorInfo};
use crate::genome::Genome;
use crate::rng;
use crate::scalar::Fitness;

/// Adds zero-mean Gaussian noise to another evaluator and clamps the result
/// into `[0, 1]`.
///
/// Invocation `n` (counted from zero across all callers) draws its noise
/// from random stream `(seed, n)`, so a sequential run is reproducible.
pub struct NoisyEvaluator<E> {
    inner: E,
    sigma: f64,
    seed: u64,
    calls: AtomicU64,
}

impl<E> NoisyEvaluator<E> {
    /// Panics if `sigma` is negative or not finite.
    pub fn new(inner: E, sigma: f64, seed: u64) -> Self {
        assert!(
            sigma.is_finite() && sigma >= 0.0,
            "noise sigma must be finite and non-negative"
        );
        NoisyEvaluator {
            inner,
            sigma,
            seed,
            calls: AtomicU64::new(0),
        }
    }

    /// Continues the invocation count from `calls`, e.g. the number of
    /// measurements a resumed run has already committed.
    pub fn starting_at(self, calls: u64) -> Self {
        self.calls.store(calls, Ordering::SeqCst);
        self
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<F: Fitness, E: Evaluator<F>> Evaluator<F> for NoisyEvaluator<E> {
    fn evaluate(&self, genome: &Genome) -> Result<F, EvalError> {
        let base = self.inner.evaluate(genome)?;
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        if self.sigma == 0.0 {
            return Ok(base);
        }
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
        let noise = normal.sample(&mut rng::stream(self.seed, call));
        Ok(F::from_f64_lossy(base.as_f64() + noise).clamp_unit())
    }

    fn info(&self) -> EvaluatorInfo {
        EvaluatorInfo {
            deterministic: self.sigma == 0.0 && self.inner.info().deterministic,
            cost_hint: self.inner.info().cost_hint,
        }
    }

    fn describe(&self) -> String {
        format!("noisy(sigma={}, seed={}, {})", self.sigma, self.seed, self.inner.describe())
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::evaluators::{ConstantEvaluator, SurrogateEvaluator};
    use crate::genome::SearchSpace;

    fn genome() -> Genome {
        let s = Arc::new(SearchSpace::new(vec![3, 4, 5]).unwrap());
        Genome::parse(s, "1-01|0-01-100|0-11-101-0001").unwrap()
    }

    #[test]
    fn zero_sigma_is_transparent() {
        let inner = SurrogateEvaluator::<f64>::default();
        let noisy = NoisyEvaluator::new(inner, 0.0, 3);
        let g = genome();
        assert_eq!(
            Evaluator::<f64>::evaluate(&noisy, &g).unwrap(),
            inner.evaluate(&g).unwrap()
        );
    }

    #[test]
    fn sample_mean_converges() {
        let noisy = NoisyEvaluator::new(ConstantEvaluator(0.5f64), 0.05, 11);
        let g = genome();
        let n = 10_000;
        let sum: f64 = (0..n).map(|_| noisy.evaluate(&g).unwrap()).sum();
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() <= 3.0 * 0.05 / 100.0, "mean {mean}");
        assert_eq!(noisy.calls(), n);
    }

    #[test]
    fn outputs_are_clamped() {
        let noisy = NoisyEvaluator::new(ConstantEvaluator(0.999f64), 5.0, 1);
        let g = genome();
        for _ in 0..1000 {
            let v = noisy.evaluate(&g).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(!Evaluator::<f64>::info(&noisy).deterministic);
    }

    #[test]
    fn same_seed_same_sequence() {
        let a = NoisyEvaluator::new(ConstantEvaluator(0.5f32), 0.1, 9);
        let b = NoisyEvaluator::new(ConstantEvaluator(0.5f32), 0.1, 9);
        let g = genome();
        for _ in 0..50 {
            assert_eq!(a.evaluate(&g).unwrap(), b.evaluate(&g).unwrap());
        }
    }
}
