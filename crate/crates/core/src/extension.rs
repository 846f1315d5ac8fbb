//! Expected set utilities `fbar(S) = E[f(Phi_S)]` and the multilinear
//! extension `F(x) = sum_U prod_{i in U} x_i prod_{i notin U} (1 - x_i) fbar(U)`,
//! each with an exact enumerator and a seeded Monte Carlo estimator.

use rand::Rng;

use crate::lattice::{StateVector, Utility};
use crate::model::Instance;
use crate::stats::{run_batches, Accumulator, Estimate};
use crate::{seed, Error, Result, Scalar};

/// Joint-state limit of [`fbar_exact`].
pub const FBAR_LIMIT: f64 = 1e6;
/// Item limit of [`multilinear_exact`].
pub const MULTILINEAR_ITEM_LIMIT: usize = 10;
/// `B^n` limit of [`multilinear_exact`].
pub const MULTILINEAR_STATE_LIMIT: f64 = 1e4;

/// Monte Carlo budget: sample count, master seed and worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Sampling {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    fn check(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidInput(
                "sample count must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_marginals<T: Scalar>(n: usize, x: &[T]) -> Result<()> {
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if x.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
        return Err(Error::InvalidInput("marginals must lie in [0,1]".into()));
    }
    Ok(())
}

fn check_set(n: usize, set: &[usize]) -> Result<()> {
    if let Some(&i) = set.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidInput(format!(
            "item index {i} out of range for n = {n}"
        )));
    }
    Ok(())
}

/// Exact `fbar(S)` by enumerating the joint positive-probability states of
/// `S`; coordinates outside `S` are 0.
pub fn fbar_exact<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    set: &[usize],
) -> Result<T> {
    check_set(instance.n, set)?;
    let size = f64::from(instance.states).powi(set.len() as i32);
    if size > FBAR_LIMIT {
        return Err(Error::GuardExceeded {
            what: "expected set utility",
            size,
            limit: FBAR_LIMIT,
        });
    }
    let supports: Vec<Vec<(u32, T)>> = set
        .iter()
        .map(|&i| instance.items[i].support().collect())
        .collect();
    let mut v = StateVector::zeros(instance.n);
    let mut total = T::zero();
    enumerate_joint(&supports, set, 0, T::one(), &mut v, &mut |v, w| {
        total = total + w * f.value(v.as_slice());
    });
    Ok(total)
}

fn enumerate_joint<T: Scalar>(
    supports: &[Vec<(u32, T)>],
    set: &[usize],
    depth: usize,
    weight: T,
    v: &mut StateVector,
    visit: &mut impl FnMut(&StateVector, T),
) {
    if depth == set.len() {
        visit(v, weight);
        return;
    }
    for &(s, p) in &supports[depth] {
        v.set(set[depth], s);
        enumerate_joint(supports, set, depth + 1, weight * p, v, visit);
    }
    v.set(set[depth], 0);
}

/// Exact multilinear extension by summing over all subsets.
pub fn multilinear_exact<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    x: &[T],
) -> Result<T> {
    let n = instance.n;
    check_marginals(n, x)?;
    let states = f64::from(instance.states).powi(n as i32);
    if n > MULTILINEAR_ITEM_LIMIT || states > MULTILINEAR_STATE_LIMIT {
        return Err(Error::GuardExceeded {
            what: "multilinear extension",
            size: 2f64.powi(n as i32) * states,
            limit: 2f64.powi(MULTILINEAR_ITEM_LIMIT as i32) * MULTILINEAR_STATE_LIMIT,
        });
    }
    let mut total = T::zero();
    for mask in 0u32..(1 << n) {
        let mut weight = T::one();
        let mut set = Vec::new();
        for (i, &xi) in x.iter().enumerate() {
            if mask >> i & 1 == 1 {
                weight = weight * xi;
                set.push(i);
            } else {
                weight = weight * (T::one() - xi);
            }
        }
        if weight == T::zero() {
            continue;
        }
        total = total + weight * fbar_exact(instance, f, &set)?;
    }
    Ok(total)
}

/// Monte Carlo `fbar(S)`: mean of `f(Phi_S)` over independent realizations.
pub fn fbar_mc<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    set: &[usize],
    sampling: Sampling,
) -> Result<Estimate<T>> {
    check_set(instance.n, set)?;
    sampling.check()?;
    let parts = run_batches(sampling.samples, sampling.workers, |b, range| {
        let mut rng = seed::stream(sampling.seed, "fbar", b);
        let mut acc = Accumulator::default();
        let mut v = StateVector::zeros(instance.n);
        for _ in range {
            for &i in set {
                v.set(i, instance.items[i].draw_state(&mut rng));
            }
            acc.push(f.value(v.as_slice()));
        }
        acc
    });
    Ok(merge(&parts))
}

/// Monte Carlo multilinear extension: each sample flips a coin per item for
/// `U`, draws the realization, and records `f(Phi_U)`.
pub fn multilinear_mc<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    x: &[T],
    sampling: Sampling,
) -> Result<Estimate<T>> {
    check_marginals(instance.n, x)?;
    sampling.check()?;
    let parts = run_batches(sampling.samples, sampling.workers, |b, range| {
        let mut rng = seed::stream(sampling.seed, "multilinear", b);
        let mut acc = Accumulator::default();
        for _ in range {
            let v = draw_lattice_sample(instance, x, &mut rng);
            acc.push(f.value(v.as_slice()));
        }
        acc
    });
    Ok(merge(&parts))
}

/// One draw of `Phi_U` with `U` containing item `i` with probability `x[i]`.
pub fn draw_lattice_sample<T: Scalar, R: Rng + ?Sized>(
    instance: &Instance<T>,
    x: &[T],
    rng: &mut R,
) -> StateVector {
    let mut v = StateVector::zeros(instance.n);
    for (i, item) in instance.items.iter().enumerate() {
        let coin: f64 = rng.random();
        let state = item.draw_state(rng);
        if coin < x[i].as_f64() {
            v.set(i, state);
        }
    }
    v
}

pub(crate) fn merge<T: Scalar>(parts: &[Accumulator<T>]) -> Estimate<T> {
    let mut acc = Accumulator::default();
    parts.iter().for_each(|p| acc.merge(p));
    acc.estimate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::UtilityFamily;
    use crate::model::ItemModel;
    use crate::outer::OuterConstraint;

    fn t1() -> (Instance<f64>, UtilityFamily<f64>) {
        (
            Instance::new(
                2,
                5,
                vec![ItemModel::new(vec![0.5, 0.5], vec![1, 2]); 2],
                OuterConstraint::Cardinality { k: 2 },
            ),
            UtilityFamily::Modular {
                weights: vec![1.0, 1.0],
            },
        )
    }

    #[test]
    fn fbar_examples() {
        let (inst, f) = t1();
        assert_eq!(fbar_exact(&inst, &f, &[0]).unwrap(), 1.5);
        assert_eq!(fbar_exact(&inst, &f, &[]).unwrap(), 0.0);
        assert_eq!(fbar_exact(&inst, &f, &[0, 1]).unwrap(), 3.0);
        let shifted = |u: &[u32]| 7.0 + f64::from(u[0]);
        assert_eq!(fbar_exact(&inst, &shifted, &[]).unwrap(), 7.0);
        assert!(fbar_exact(&inst, &f, &[2]).is_err());
    }

    #[test]
    fn fbar_guard() {
        let inst = Instance::new(
            10,
            5,
            vec![ItemModel::new(vec![0.1; 10], vec![1; 10]); 7],
            OuterConstraint::Cardinality { k: 7 },
        );
        let f = |_: &[u32]| 0.0;
        assert!(matches!(
            fbar_exact(&inst, &f, &[0, 1, 2, 3, 4, 5, 6]),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn multilinear_examples() {
        let (inst, f) = t1();
        assert_eq!(multilinear_exact(&inst, &f, &[1.0, 0.0]).unwrap(), 1.5);
        assert_eq!(multilinear_exact(&inst, &f, &[1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(multilinear_exact(&inst, &f, &[0.0, 0.0]).unwrap(), 0.0);
        assert!((multilinear_exact(&inst, &f, &[0.5, 0.5]).unwrap() - 1.5).abs() < 1e-12);
        assert!(multilinear_exact(&inst, &f, &[0.5]).is_err());
        assert!(multilinear_exact(&inst, &f, &[1.5, 0.0]).is_err());
    }

    #[test]
    fn mc_degenerate_cases() {
        let (inst, f) = t1();
        let e = fbar_mc(&inst, &f, &[], Sampling::new(100, 1)).unwrap();
        assert_eq!((e.mean, e.std_err), (0.0, 0.0));
        let e = multilinear_mc(&inst, &f, &[0.0, 0.0], Sampling::new(100, 1)).unwrap();
        assert_eq!((e.mean, e.std_err), (0.0, 0.0));
        assert!(fbar_mc(&inst, &f, &[0], Sampling::new(1, 1)).is_err());

        let det = Instance::new(
            1,
            3,
            vec![ItemModel::new(vec![1.0], vec![1]); 2],
            OuterConstraint::Cardinality { k: 2 },
        );
        let e = fbar_mc(&det, &f, &[0, 1], Sampling::new(50, 3)).unwrap();
        assert_eq!((e.mean, e.std_err), (2.0, 0.0));
        let e = multilinear_mc(&det, &f, &[1.0, 0.0], Sampling::new(50, 3)).unwrap();
        assert_eq!((e.mean, e.std_err), (1.0, 0.0));
    }

    #[test]
    fn mc_within_three_se() {
        let (inst, f) = t1();
        let e = fbar_mc(&inst, &f, &[0], Sampling::new(100_000, 9)).unwrap();
        assert!(e.within(1.5, 3.0), "{e:?}");
        let exact = multilinear_exact(&inst, &f, &[0.3, 0.8]).unwrap();
        let e = multilinear_mc(&inst, &f, &[0.3, 0.8], Sampling::new(100_000, 9)).unwrap();
        assert!(e.within(exact, 3.0), "{e:?} vs {exact}");
    }

    #[test]
    fn mc_is_worker_independent() {
        let (inst, f) = t1();
        let s = Sampling::new(10_000, 4);
        let a = multilinear_mc(&inst, &f, &[0.4, 0.6], s).unwrap();
        let b = multilinear_mc(&inst, &f, &[0.4, 0.6], s.with_workers(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multilinear_is_affine_per_coordinate() {
        let inst = Instance::new(
            2,
            6,
            vec![ItemModel::new(vec![0.3, 0.7], vec![1, 3]); 3],
            OuterConstraint::Cardinality { k: 3 },
        );
        let f = UtilityFamily::Concave {
            weights: vec![1.0, 2.0, 1.0],
            shape: crate::lattice::ConcaveShape::Sqrt,
        };
        for i in 0..3 {
            let mut x = vec![0.2, 0.5, 0.9];
            let at = |x: &[f64]| multilinear_exact(&inst, &f, x).unwrap();
            x[i] = 0.0;
            let a = at(&x);
            x[i] = 0.5;
            let m = at(&x);
            x[i] = 1.0;
            let b = at(&x);
            assert!((m - 0.5 * (a + b)).abs() < 1e-12);
            assert!(b >= a - 1e-12);
        }
    }
}
