//! Sample statistics and the deterministic batch runner used by every
//! Monte Carlo estimator.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Samples per batch. Each batch owns one derived RNG stream, so results do
/// not depend on the worker count.
pub const BATCH_SIZE: usize = 1024;

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_err: T,
    pub samples: usize,
}

impl<T: Scalar> Estimate<T> {
    /// True when `value` lies within `k` standard errors of the mean.
    /// A zero standard error falls back to the check tolerance.
    pub fn within(&self, value: T, k: T) -> bool {
        let band = (k * self.std_err).max(T::CHECK_TOL);
        (self.mean - value).abs() <= band
    }
}

/// Welford accumulator; batches merge with Chan's pairwise update.
#[derive(Debug, Clone, Copy)]
pub struct Accumulator<T> {
    count: usize,
    mean: T,
    m2: T,
}

impl<T: Scalar> Default for Accumulator<T> {
    fn default() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }
}

impl<T: Scalar> Accumulator<T> {
    pub fn push(&mut self, x: T) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean = self.mean + delta / T::of_usize(self.count);
        self.m2 = self.m2 + delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n_a = T::of_usize(self.count);
        let n_b = T::of_usize(other.count);
        let n = n_a + n_b;
        let delta = other.mean - self.mean;
        self.mean = self.mean + delta * n_b / n;
        self.m2 = self.m2 + other.m2 + delta * delta * n_a * n_b / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Mean and standard error of the mean (sample standard deviation over
    /// the square root of the count).
    pub fn estimate(&self) -> Estimate<T> {
        let std_err = if self.count >= 2 {
            let var = (self.m2 / T::of_usize(self.count - 1)).max(T::zero());
            (var / T::of_usize(self.count)).sqrt()
        } else {
            T::zero()
        };
        Estimate {
            mean: self.mean,
            std_err,
            samples: self.count,
        }
    }
}

/// Frequency estimate of a Bernoulli event: hits over trials with the
/// binomial standard error. `None` when there were no trials.
pub fn proportion<T: Scalar>(hits: usize, trials: usize) -> Option<Estimate<T>> {
    if trials == 0 {
        return None;
    }
    let p = T::of_usize(hits) / T::of_usize(trials);
    let se = (p * (T::one() - p) / T::of_usize(trials))
        .max(T::zero())
        .sqrt();
    Some(Estimate {
        mean: p,
        std_err: se,
        samples: trials,
    })
}

/// Splits `0..total` into fixed-size batches and maps `work` over them,
/// returning results in batch order. With `workers > 1` batches run on a
/// dedicated rayon pool.
pub fn run_batches<R, F>(total: usize, workers: usize, work: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64, Range<usize>) -> R + Sync + Send,
{
    let batches: Vec<(u64, Range<usize>)> = (0..total.div_ceil(BATCH_SIZE))
        .map(|b| {
            let start = b * BATCH_SIZE;
            (b as u64, start..(start + BATCH_SIZE).min(total))
        })
        .collect();
    if workers <= 1 || batches.len() <= 1 {
        return batches.into_iter().map(|(b, r)| work(b, r)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| batches.into_par_iter().map(|(b, r)| work(b, r)).collect()),
        Err(_) => batches.into_iter().map(|(b, r)| work(b, r)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.3).collect();
        let mut all = Accumulator::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let (e1, e2) = (all.estimate(), a.estimate());
        assert!((e1.mean - e2.mean).abs() < 1e-12);
        assert!((e1.std_err - e2.std_err).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_have_zero_error() {
        let mut acc = Accumulator::<f64>::default();
        (0..10).for_each(|_| acc.push(2.5));
        let e = acc.estimate();
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn batches_are_worker_independent() {
        let one = run_batches(5000, 1, |b, r| (b, r.len()));
        let four = run_batches(5000, 4, |b, r| (b, r.len()));
        assert_eq!(one, four);
        assert_eq!(one.iter().map(|x| x.1).sum::<usize>(), 5000);
    }

    #[test]
    fn proportion_of_nothing_is_none() {
        assert!(proportion::<f64>(0, 0).is_none());
        let p = proportion::<f64>(3, 4).unwrap();
        assert_eq!(p.mean, 0.75);
    }
}
