//! Contention resolution: the balanced set scheme for the outer family and
//! the lattice mappings built on it.
//!
//! * `psi_a` prunes the support of `v` through the set scheme.
//! * `psi_b` draws start times and keeps `i` when the other sampled items
//!   starting no later than `i` have total cost at most `t(i)`.
//! * `psi_c` keeps `i` only when both of the above keep it, each run with
//!   independent randomness.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::extension::check_marginals;
use crate::greedy::TimeIndexedSolution;
use crate::lattice::StateVector;
use crate::model::Instance;
use crate::outer::OuterConstraint;
use crate::seed::{self, StreamRng};
use crate::stats::{proportion, run_batches, Estimate};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrsKind {
    /// Returns `R` when independent, otherwise a least-index greedy subset.
    Identity,
    /// Scans `R` in uniformly random order, keeping an item iff the kept set
    /// stays independent.
    RandomPriority,
}

impl fmt::Display for CrsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::RandomPriority => "random_priority",
        })
    }
}

impl std::str::FromStr for CrsKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "identity" => Ok(Self::Identity),
            "random_priority" | "priority" | "matroid" => Ok(Self::RandomPriority),
            other => Err(format!("unknown CRS kind '{other}'")),
        }
    }
}

/// A balanced contention resolution scheme for marginals in `beta * P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedCrs<T> {
    pub kind: CrsKind,
    pub beta: T,
}

impl<T: Scalar> BalancedCrs<T> {
    pub fn new(kind: CrsKind, beta: T) -> Self {
        Self { kind, beta }
    }

    /// Target keep probability: 1 for the identity scheme and
    /// `(1 - e^{-b}) / b` for matroid schemes at scale `b`.
    pub fn documented_gamma(&self) -> T {
        match self.kind {
            CrsKind::Identity => T::one(),
            CrsKind::RandomPriority => matroid_gamma(self.beta),
        }
    }

    /// Prunes `set` to an independent subset of itself.
    pub fn apply<R: Rng + ?Sized>(
        &self,
        outer: &OuterConstraint,
        set: &[usize],
        rng: &mut R,
    ) -> Vec<usize> {
        let mut order = set.to_vec();
        match self.kind {
            CrsKind::Identity => {
                if outer.is_independent(&order) {
                    return order;
                }
                order.sort_unstable();
            }
            CrsKind::RandomPriority => order.shuffle(rng),
        }
        let mut kept = Vec::with_capacity(order.len());
        for i in order {
            kept.push(i);
            if !outer.is_independent(&kept) {
                kept.pop();
            }
        }
        kept.sort_unstable();
        kept
    }
}

/// `(1 - e^{-b}) / b`, with the limit 1 at `b = 0`.
pub fn matroid_gamma<T: Scalar>(b: T) -> T {
    if b <= T::zero() {
        T::one()
    } else {
        (T::one() - (-b).exp()) / b
    }
}

/// Seeded single application of the set scheme.
pub fn apply_chi<T: Scalar>(
    crs: &BalancedCrs<T>,
    outer: &OuterConstraint,
    set: &[usize],
    seed: u64,
) -> Vec<usize> {
    crs.apply(outer, set, &mut seed::stream(seed, "chi", 0))
}

/// The law `h(i, j)` of the random lattice vector: state `j >= 1` with
/// probability `p_i(j) * ybar(i)`, state 0 with probability `1 - ybar(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSampleDistribution<T> {
    /// `h[i][j]` for `j in 0..=B`.
    pub h: Vec<Vec<T>>,
}

impl<T: Scalar> LatticeSampleDistribution<T> {
    pub fn new(instance: &Instance<T>, ybar: &[T]) -> Result<Self> {
        check_marginals(instance.n, ybar)?;
        let h = instance
            .items
            .iter()
            .zip(ybar)
            .map(|(item, &y)| {
                std::iter::once(T::one() - y)
                    .chain(item.probs.iter().map(|&p| p * y))
                    .collect()
            })
            .collect();
        Ok(Self { h })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVector {
        StateVector::new(
            self.h
                .iter()
                .map(|row| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut last = 0;
                    for (j, &p) in row.iter().enumerate() {
                        if p <= T::zero() {
                            continue;
                        }
                        acc += p.as_f64();
                        last = j as u32;
                        if u < acc {
                            return j as u32;
                        }
                    }
                    last
                })
                .collect(),
        )
    }
}

/// Seeded draw of `v ~ h`.
pub fn sample_v<T: Scalar>(instance: &Instance<T>, ybar: &[T], seed: u64) -> Result<StateVector> {
    Ok(LatticeSampleDistribution::new(instance, ybar)?
        .sample(&mut seed::stream(seed, "sample-v", 0)))
}

/// Start slots of sampled items; `None` for items not sampled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartTimeAssignment(pub Vec<Option<u32>>);

impl StartTimeAssignment {
    pub fn get(&self, item: usize) -> Option<u32> {
        self.0[item]
    }

    /// Sampled items sorted by start time, least index first on ties.
    pub fn sequence(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.0.len()).filter(|&i| self.0[i].is_some()).collect();
        order.sort_by_key(|&i| (self.0[i], i));
        order
    }
}

/// Draws `t` with probability `x(i, t) / ybar(i)`.
pub fn draw_start_time<T: Scalar, R: Rng + ?Sized>(
    sol: &TimeIndexedSolution<T>,
    item: usize,
    rng: &mut R,
) -> Result<u32> {
    let total = sol.marginals[item];
    if !(total > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "item {} has zero marginal and cannot be scheduled",
            item + 1
        )));
    }
    let u = T::of(rng.random::<f64>()) * total;
    let mut acc = T::zero();
    let mut last = 1;
    for (k, &x) in sol.slots[item].iter().enumerate() {
        if x <= T::zero() {
            continue;
        }
        acc = acc + x;
        last = k as u32 + 1;
        if u < acc {
            return Ok(last);
        }
    }
    Ok(last)
}

/// Draws start times for every item in `items`.
pub fn draw_start_times<T: Scalar, R: Rng + ?Sized>(
    sol: &TimeIndexedSolution<T>,
    items: &[usize],
    rng: &mut R,
) -> Result<StartTimeAssignment> {
    let mut times = vec![None; sol.n()];
    for &i in items {
        times[i] = Some(draw_start_time(sol, i, rng)?);
    }
    Ok(StartTimeAssignment(times))
}

/// Outer pruning: keep `v(i)` on the items the set scheme keeps from the
/// support of `v`.
pub fn psi_a<T: Scalar, R: Rng + ?Sized>(
    outer: &OuterConstraint,
    crs: &BalancedCrs<T>,
    v: &StateVector,
    rng: &mut R,
) -> StateVector {
    let kept = crs.apply(outer, &v.support(), rng);
    restrict_to(v, &kept)
}

/// Budget pruning with given start times.
pub fn psi_b_with_times<T: Scalar>(
    instance: &Instance<T>,
    v: &StateVector,
    times: &StartTimeAssignment,
) -> StateVector {
    let support = v.support();
    let mut out = StateVector::zeros(v.len());
    for &i in &support {
        let ti = times.get(i).expect("every sampled item has a start time");
        let load: u32 = support
            .iter()
            .filter(|&&k| k != i && times.get(k).is_some_and(|tk| tk <= ti))
            .map(|&k| instance.items[k].cost(v.get(k)))
            .sum();
        if load <= ti {
            out.set(i, v.get(i));
        }
    }
    out
}

/// Budget pruning: draws start times for the support of `v` and applies
/// [`psi_b_with_times`].
pub fn psi_b<T: Scalar, R: Rng + ?Sized>(
    instance: &Instance<T>,
    sol: &TimeIndexedSolution<T>,
    v: &StateVector,
    rng: &mut R,
) -> Result<(StateVector, StartTimeAssignment)> {
    let times = draw_start_times(sol, &v.support(), rng)?;
    Ok((psi_b_with_times(instance, v, &times), times))
}

/// Intersection of `psi_a` and `psi_b`, each on its own sub-stream.
pub fn psi_c<T: Scalar, R: Rng + ?Sized>(
    instance: &Instance<T>,
    crs: &BalancedCrs<T>,
    sol: &TimeIndexedSolution<T>,
    v: &StateVector,
    rng: &mut R,
) -> Result<StateVector> {
    let sub = rng.random::<u64>();
    let a = psi_a(&instance.outer, crs, v, &mut seed::stream(sub, "psi-a", 0));
    let (b, _) = psi_b(instance, sol, v, &mut seed::stream(sub, "psi-b", 0))?;
    Ok(intersect(v, &a, &b))
}

/// `v(i)` where both `a` and `b` kept `v(i)`, 0 elsewhere.
pub fn intersect(v: &StateVector, a: &StateVector, b: &StateVector) -> StateVector {
    StateVector::new(
        (0..v.len())
            .map(|i| {
                if a.get(i) == v.get(i) && b.get(i) == v.get(i) {
                    v.get(i)
                } else {
                    0
                }
            })
            .collect(),
    )
}

fn restrict_to(v: &StateVector, items: &[usize]) -> StateVector {
    let mut out = StateVector::zeros(v.len());
    items.iter().for_each(|&i| out.set(i, v.get(i)));
    out
}

/// Which lattice mapping to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mapping {
    #[serde(rename = "psi_a")]
    A,
    #[serde(rename = "psi_b")]
    B,
    #[serde(rename = "psi_c")]
    C,
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::A => "psi_a",
            Self::B => "psi_b",
            Self::C => "psi_c",
        })
    }
}

/// Conditional keep frequency of one `(item, state)` pair; `estimate` is
/// `None` when `v(i) = j` never occurred. `item` is 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimate<T> {
    pub item: usize,
    pub state: u32,
    pub mapping: Mapping,
    pub estimate: Option<Estimate<T>>,
}

/// Conditional keep frequency of one item under the set scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate<T> {
    pub item: usize,
    pub estimate: Option<Estimate<T>>,
}

/// Estimates `Pr[psi(v)(i) = j | v(i) = j]` for `v ~ h` built from the
/// solution's marginals.
pub fn estimate_alpha<T: Scalar>(
    mapping: Mapping,
    instance: &Instance<T>,
    crs: &BalancedCrs<T>,
    sol: &TimeIndexedSolution<T>,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<AlphaEstimate<T>>> {
    if trials < 1 {
        return Err(Error::InvalidInput("trial count must be at least 1".into()));
    }
    let dist = LatticeSampleDistribution::new(instance, &sol.marginals)?;
    let n = instance.n;
    let b = instance.states as usize;
    let label = format!("alpha-{mapping}");
    let parts = run_batches(
        trials,
        workers,
        |batch, range| -> Result<(Vec<usize>, Vec<usize>)> {
            let mut rng: StreamRng = seed::stream(seed, &label, batch);
            let mut seen = vec![0usize; n * (b + 1)];
            let mut kept = vec![0usize; n * (b + 1)];
            for _ in range {
                let v = dist.sample(&mut rng);
                let out = match mapping {
                    Mapping::A => psi_a(&instance.outer, crs, &v, &mut rng),
                    Mapping::B => psi_b(instance, sol, &v, &mut rng)?.0,
                    Mapping::C => psi_c(instance, crs, sol, &v, &mut rng)?,
                };
                for i in v.support() {
                    let slot = i * (b + 1) + v.get(i) as usize;
                    seen[slot] += 1;
                    if out.get(i) == v.get(i) {
                        kept[slot] += 1;
                    }
                }
            }
            Ok((seen, kept))
        },
    );
    let mut seen = vec![0usize; n * (b + 1)];
    let mut kept = vec![0usize; n * (b + 1)];
    for part in parts {
        let (s, k) = part?;
        seen.iter_mut().zip(s).for_each(|(a, x)| *a += x);
        kept.iter_mut().zip(k).for_each(|(a, x)| *a += x);
    }
    Ok((0..n)
        .flat_map(|i| (1..=b).map(move |j| (i, j)))
        .map(|(i, j)| AlphaEstimate {
            item: i,
            state: j as u32,
            mapping,
            estimate: proportion(kept[i * (b + 1) + j], seen[i * (b + 1) + j]),
        })
        .collect())
}

/// Estimates `Pr[i in chi(R) | i in R]` with `R` containing each item with
/// probability `ybar(i)`. Requires `ybar` inside `beta * P`.
pub fn estimate_gamma<T: Scalar>(
    crs: &BalancedCrs<T>,
    outer: &OuterConstraint,
    ybar: &[T],
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<GammaEstimate<T>>> {
    if !outer.check_membership_scaled(ybar, crs.beta)? {
        return Err(Error::InvalidInput(format!(
            "marginals are not inside {} times the outer polytope",
            crs.beta
        )));
    }
    let n = ybar.len();
    let parts = run_batches(trials, workers, |batch, range| {
        let mut rng: StreamRng = seed::stream(seed, "gamma", batch);
        let mut seen = vec![0usize; n];
        let mut kept = vec![0usize; n];
        for _ in range {
            let r: Vec<usize> = (0..n)
                .filter(|&i| rng.random::<f64>() < ybar[i].as_f64())
                .collect();
            let out = crs.apply(outer, &r, &mut rng);
            r.iter().for_each(|&i| seen[i] += 1);
            out.iter().for_each(|&i| kept[i] += 1);
        }
        (seen, kept)
    });
    let mut seen = vec![0usize; n];
    let mut kept = vec![0usize; n];
    for (s, k) in parts {
        seen.iter_mut().zip(s).for_each(|(a, x)| *a += x);
        kept.iter_mut().zip(k).for_each(|(a, x)| *a += x);
    }
    Ok((0..n)
        .map(|i| GammaEstimate {
            item: i,
            estimate: proportion(kept[i], seen[i]),
        })
        .collect())
}

/// The pair with the smallest estimated keep frequency.
pub fn min_alpha<T: Scalar>(rows: &[AlphaEstimate<T>]) -> Option<&AlphaEstimate<T>> {
    rows.iter().filter(|r| r.estimate.is_some()).min_by(|a, b| {
        let (x, y) = (a.estimate.unwrap().mean, b.estimate.unwrap().mean);
        x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// The item with the smallest estimated keep frequency.
pub fn min_gamma<T: Scalar>(rows: &[GammaEstimate<T>]) -> Option<Estimate<T>> {
    rows.iter().filter_map(|r| r.estimate).min_by(|a, b| {
        a.mean
            .partial_cmp(&b.mean)
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::SolveMeta;
    use crate::model::ItemModel;

    fn meta() -> SolveMeta<f64> {
        SolveMeta {
            l: 0.25,
            steps: 1,
            delta: 0.25,
            grad_samples: 2,
            seed: 0,
        }
    }

    fn two_items(outer: OuterConstraint) -> Instance<f64> {
        Instance::new(
            2,
            5,
            vec![ItemModel::new(vec![0.5, 0.5], vec![1, 2]); 2],
            outer,
        )
    }

    fn rng() -> StreamRng {
        seed::stream(99, "crs-test", 0)
    }

    #[test]
    fn chi_examples() {
        let card2 = OuterConstraint::Cardinality { k: 2 };
        let id = BalancedCrs::new(CrsKind::Identity, 1.0);
        assert_eq!(apply_chi(&id, &card2, &[0, 1], 1), vec![0, 1]);
        assert!(apply_chi(&id, &card2, &[], 1).is_empty());
        let pr = BalancedCrs::new(CrsKind::RandomPriority, 0.5);
        assert!(apply_chi(&pr, &card2, &[], 1).is_empty());

        let card1 = OuterConstraint::Cardinality { k: 1 };
        let trials = 10_000;
        let mut first = 0;
        for s in 0..trials {
            let out = apply_chi(&pr, &card1, &[0, 1], s);
            assert_eq!(out.len(), 1);
            first += usize::from(out[0] == 0);
        }
        let p = first as f64 / trials as f64;
        assert!(
            (p - 0.5).abs() <= 3.0 * (0.25 / trials as f64).sqrt(),
            "{p}"
        );
    }

    #[test]
    fn identity_falls_back_to_greedy() {
        let card1 = OuterConstraint::Cardinality { k: 1 };
        let id = BalancedCrs::new(CrsKind::Identity, 1.0);
        assert_eq!(apply_chi(&id, &card1, &[2, 0, 1], 0), vec![0]);
    }

    #[test]
    fn sample_v_examples() {
        let inst = two_items(OuterConstraint::Cardinality { k: 2 });
        for s in 0..50 {
            assert_eq!(sample_v(&inst, &[0.0, 0.0], s).unwrap().as_slice(), &[0, 0]);
        }
        let one_state = Instance::new(
            1,
            5,
            vec![ItemModel::new(vec![1.0], vec![1])],
            OuterConstraint::Cardinality { k: 1 },
        );
        for s in 0..50 {
            assert_eq!(sample_v(&one_state, &[1.0], s).unwrap().as_slice(), &[1]);
        }
        let dist = LatticeSampleDistribution::new(&inst, &[0.5, 0.5]).unwrap();
        assert_eq!(dist.h[0], vec![0.5, 0.25, 0.25]);
        let mut r = rng();
        let n = 100_000;
        let mut counts = [0usize; 3];
        (0..n).for_each(|_| counts[dist.sample(&mut r).get(0) as usize] += 1);
        for (j, want) in [0.5, 0.25, 0.25].iter().enumerate() {
            let freq = counts[j] as f64 / n as f64;
            let se = (want * (1.0 - want) / n as f64).sqrt();
            assert!((freq - want).abs() <= 3.0 * se, "state {j}: {freq}");
        }
    }

    #[test]
    fn psi_a_examples() {
        let card1 = OuterConstraint::Cardinality { k: 1 };
        let id = BalancedCrs::new(CrsKind::Identity, 1.0);
        let v = StateVector::new(vec![1, 2]);
        let card2 = OuterConstraint::Cardinality { k: 2 };
        assert_eq!(psi_a(&card2, &id, &v, &mut rng()), v);
        assert_eq!(
            psi_a(&card1, &id, &StateVector::zeros(2), &mut rng()),
            StateVector::zeros(2)
        );
        let pr = BalancedCrs::new(CrsKind::RandomPriority, 0.5);
        let mut r = rng();
        for _ in 0..200 {
            let out = psi_a(&card1, &pr, &v, &mut r);
            assert!(
                out.as_slice() == [1, 0] || out.as_slice() == [0, 2],
                "{out:?}"
            );
        }
    }

    #[test]
    fn psi_b_examples() {
        let unit = Instance::new(
            2,
            5,
            vec![ItemModel::new(vec![1.0, 0.0], vec![1, 2]); 2],
            OuterConstraint::Cardinality { k: 2 },
        );
        let both = StartTimeAssignment(vec![Some(1), Some(1)]);
        let v = StateVector::new(vec![1, 1]);
        assert_eq!(psi_b_with_times(&unit, &v, &both), v);

        let v = StateVector::new(vec![2, 1]);
        assert_eq!(psi_b_with_times(&unit, &v, &both).as_slice(), &[2, 0]);

        let single = StateVector::new(vec![2, 0]);
        let sol = TimeIndexedSolution::from_slots(vec![vec![0.0, 0.0, 0.1], vec![0.0; 3]], meta());
        let (out, times) = psi_b(&unit, &sol, &single, &mut rng()).unwrap();
        assert_eq!(out, single);
        assert_eq!(times.0, vec![Some(3), None]);
    }

    #[test]
    fn psi_b_rejects_unscheduled_items() {
        let inst = two_items(OuterConstraint::Cardinality { k: 2 });
        let sol = TimeIndexedSolution::from_slots(vec![vec![0.1, 0.0, 0.0], vec![0.0; 3]], meta());
        assert!(psi_b(&inst, &sol, &StateVector::new(vec![1, 1]), &mut rng()).is_err());
    }

    #[test]
    fn psi_c_is_intersection() {
        let inst = two_items(OuterConstraint::Cardinality { k: 1 });
        let sol = TimeIndexedSolution::from_slots(
            vec![vec![0.1, 0.05, 0.0], vec![0.05, 0.1, 0.0]],
            meta(),
        );
        let crs = BalancedCrs::new(CrsKind::RandomPriority, 0.25);
        let mut r = rng();
        for _ in 0..500 {
            let v = StateVector::new(vec![r.random_range(0..3), r.random_range(0..3)]);
            let mut replay = r.clone();
            let c = psi_c(&inst, &crs, &sol, &v, &mut r).unwrap();
            let sub = replay.random::<u64>();
            let a = psi_a(&inst.outer, &crs, &v, &mut seed::stream(sub, "psi-a", 0));
            let (b, _) = psi_b(&inst, &sol, &v, &mut seed::stream(sub, "psi-b", 0)).unwrap();
            assert_eq!(c, intersect(&v, &a, &b));
            let c_support: Vec<usize> = c.support();
            let both: Vec<usize> = a
                .support()
                .into_iter()
                .filter(|i| b.support().contains(i))
                .collect();
            assert_eq!(c_support, both);
            for i in 0..2 {
                assert!(c.get(i) == 0 || c.get(i) == v.get(i));
            }
        }
        let id = BalancedCrs::new(CrsKind::Identity, 1.0);
        let single = StateVector::new(vec![2, 0]);
        assert_eq!(psi_c(&inst, &id, &sol, &single, &mut r).unwrap(), single);
        assert_eq!(
            psi_c(&inst, &id, &sol, &StateVector::zeros(2), &mut r).unwrap(),
            StateVector::zeros(2)
        );
    }

    #[test]
    fn gamma_estimates() {
        let card1 = OuterConstraint::Cardinality { k: 1 };
        let id = BalancedCrs::new(CrsKind::Identity, 1.0);
        let card2 = OuterConstraint::Cardinality { k: 2 };
        let g = estimate_gamma(&id, &card2, &[0.3, 0.4], 2_000, 1, 1).unwrap();
        assert!(g.iter().all(|e| e.estimate.unwrap().mean == 1.0));

        let pr = BalancedCrs::new(CrsKind::RandomPriority, 0.5);
        let g = estimate_gamma(&pr, &card1, &[0.25, 0.25], 100_000, 2, 1).unwrap();
        let target = matroid_gamma(0.5_f64);
        assert!((target - 0.786_938_680_574_733).abs() < 1e-12);
        for e in &g {
            let est = e.estimate.unwrap();
            // exact keep probability: 1 - 0.25 / 2
            assert!(est.within(0.875, 3.0), "{est:?}");
            assert!(est.mean >= target - 3.0 * est.std_err);
        }

        let g = estimate_gamma(&pr, &card1, &[0.0, 0.0], 100, 2, 1).unwrap();
        assert!(g.iter().all(|e| e.estimate.is_none()));
        assert!(estimate_gamma(&pr, &card1, &[0.4, 0.4], 100, 2, 1).is_err());
    }

    #[test]
    fn alpha_identity_is_one() {
        let inst = two_items(OuterConstraint::Cardinality { k: 2 });
        let sol =
            TimeIndexedSolution::from_slots(vec![vec![0.1, 0.1, 0.0], vec![0.0, 0.1, 0.1]], meta());
        let id = BalancedCrs::new(CrsKind::Identity, 1.0);
        let rows = estimate_alpha(Mapping::A, &inst, &id, &sol, 5_000, 3, 1).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.estimate.unwrap().mean == 1.0));
    }

    #[test]
    fn psi_a_is_monotone() {
        // u <= v with u(0) = v(0); v adds contenders for the single slot.
        let card1 = OuterConstraint::Cardinality { k: 1 };
        let pr = BalancedCrs::new(CrsKind::RandomPriority, 0.5);
        let u = StateVector::new(vec![2, 1, 0]);
        let v = StateVector::new(vec![2, 1, 1]);
        let trials = 20_000;
        let mut r = rng();
        let ku = (0..trials)
            .filter(|_| psi_a(&card1, &pr, &u, &mut r).get(0) == 2)
            .count();
        let kv = (0..trials)
            .filter(|_| psi_a(&card1, &pr, &v, &mut r).get(0) == 2)
            .count();
        let eu = proportion::<f64>(ku, trials).unwrap();
        let ev = proportion::<f64>(kv, trials).unwrap();
        let se = (eu.std_err.powi(2) + ev.std_err.powi(2)).sqrt();
        assert!(eu.mean >= ev.mean - 3.0 * se);
    }

    #[test]
    fn start_time_sequence_breaks_ties_by_index() {
        let t = StartTimeAssignment(vec![Some(2), None, Some(1), Some(2)]);
        assert_eq!(t.sequence(), vec![2, 0, 3]);
    }
}
