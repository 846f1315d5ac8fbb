//! Stochastic continuous greedy over the time-indexed relaxation.
//!
//! Starting from `x = 0`, each of `T` steps estimates the gradient of the
//! multilinear extension at the current marginals, solves the direction
//! program over the unscaled rows and moves `x <- x + (l / T) v`. After `T`
//! steps every row holds at scale `l`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::direction::{build_p1_rows, solve_direction};
use crate::extension::{check_marginals, Sampling};
use crate::lattice::{StateVector, Utility};
use crate::model::Instance;
use crate::stats::{run_batches, Accumulator, Estimate};
use crate::{seed, Error, Result, Scalar};

/// Default number of greedy steps.
pub const DEFAULT_STEPS: usize = 50;
/// Default gradient samples per step.
pub const DEFAULT_GRADIENT_SAMPLES: usize = 10_000;

/// Stopping time used by the rounding pipeline for a CRS scale `beta`.
pub fn stopping_time<T: Scalar>(beta: T) -> T {
    beta.min(T::of(0.25))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta<T> {
    pub l: T,
    #[serde(rename = "T")]
    pub steps: usize,
    pub delta: T,
    pub grad_samples: usize,
    pub seed: u64,
}

/// Fractional solution `x(i, t)` with its item marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeIndexedSolution<T> {
    /// `slots[i][t - 1] = x(i, t)`.
    pub slots: Vec<Vec<T>>,
    pub marginals: Vec<T>,
    pub meta: SolveMeta<T>,
}

#[derive(Serialize, Deserialize)]
struct SolutionFile<T> {
    meta: SolveMeta<T>,
    n: usize,
    x: Vec<SlotEntry<T>>,
}

#[derive(Serialize, Deserialize)]
struct SlotEntry<T> {
    i: usize,
    t: u32,
    value: T,
}

impl<T: Scalar> TimeIndexedSolution<T> {
    /// The all-zero solution for `instance`.
    pub fn zero(instance: &Instance<T>, meta: SolveMeta<T>) -> Self {
        let slots = instance
            .items
            .iter()
            .map(|it| vec![T::zero(); it.slot_count(instance.budget) as usize])
            .collect();
        Self {
            slots,
            marginals: vec![T::zero(); instance.n],
            meta,
        }
    }

    /// Builds a solution from explicit slot values and computes marginals.
    pub fn from_slots(slots: Vec<Vec<T>>, meta: SolveMeta<T>) -> Self {
        let marginals = slots.iter().map(|s| s.iter().copied().sum()).collect();
        Self {
            slots,
            marginals,
            meta,
        }
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    /// `x(i, t)` for a 0-based item and 1-based slot; 0 outside the support.
    pub fn x(&self, item: usize, slot: u32) -> T {
        slot.checked_sub(1)
            .and_then(|k| self.slots[item].get(k as usize))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// `sum_{t' <= t} x(i, t')`
    pub fn prefix(&self, item: usize, t: u32) -> T {
        self.slots[item].iter().take(t as usize).copied().sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let x = self
            .slots
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                s.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != T::zero())
                    .map(move |(k, &value)| SlotEntry {
                        i: i + 1,
                        t: k as u32 + 1,
                        value,
                    })
            })
            .collect();
        Ok(serde_json::to_string_pretty(&SolutionFile {
            meta: self.meta,
            n: self.n(),
            x,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SolutionFile<T> = serde_json::from_str(text)?;
        let mut slots: Vec<Vec<T>> = vec![Vec::new(); file.n];
        for e in file.x {
            if e.i == 0 || e.i > file.n || e.t == 0 {
                return Err(Error::InvalidInput(format!(
                    "solution entry (i={}, t={}) out of range",
                    e.i, e.t
                )));
            }
            let row = &mut slots[e.i - 1];
            if row.len() < e.t as usize {
                row.resize(e.t as usize, T::zero());
            }
            row[e.t as usize - 1] = e.value;
        }
        Ok(Self::from_slots(slots, file.meta))
    }

    /// Pads each item's slot vector to the instance's slot count so that
    /// trailing zero slots dropped by the JSON form are restored.
    pub fn fit_to(mut self, instance: &Instance<T>) -> Self {
        for (row, item) in self.slots.iter_mut().zip(&instance.items) {
            let want = item.slot_count(instance.budget) as usize;
            if row.len() < want {
                row.resize(want, T::zero());
            }
        }
        self
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Monte Carlo estimate of `E[f(Phi_{R+i}) - f(Phi_{R-i})]` for every item,
/// with `R` containing each item `j` with probability `marginals[j]`. All
/// items share the same draws within a sample.
pub fn estimate_gradient<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    marginals: &[T],
    sampling: Sampling,
) -> Result<Vec<Estimate<T>>> {
    check_marginals(instance.n, marginals)?;
    if sampling.samples < 2 {
        return Err(Error::InvalidInput(
            "sample count must be at least 2".into(),
        ));
    }
    let n = instance.n;
    let parts = run_batches(sampling.samples, sampling.workers, |b, range| {
        let mut rng = seed::stream(sampling.seed, "gradient", b);
        let mut accs = vec![Accumulator::default(); n];
        for _ in range {
            let phi = instance.draw_realization(&mut rng);
            let mut base = StateVector::zeros(n);
            for (j, &xj) in marginals.iter().enumerate() {
                let coin: f64 = rand::Rng::random(&mut rng);
                if coin < xj.as_f64() {
                    base.set(j, phi.state(j));
                }
            }
            for (i, acc) in accs.iter_mut().enumerate() {
                let with = base.with(i, phi.state(i));
                let without = base.with(i, 0);
                acc.push(f.value(with.as_slice()) - f.value(without.as_slice()));
            }
        }
        accs
    });
    Ok((0..n)
        .map(|i| {
            let mut acc = Accumulator::default();
            parts.iter().for_each(|p| acc.merge(&p[i]));
            acc.estimate()
        })
        .collect())
}

/// Greedy configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyConfig<T> {
    /// Stopping time in `(0, 1]`.
    pub l: T,
    pub steps: usize,
    pub grad_samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl<T: Scalar> GreedyConfig<T> {
    pub fn new(l: T, seed: u64) -> Self {
        Self {
            l,
            steps: DEFAULT_STEPS,
            grad_samples: DEFAULT_GRADIENT_SAMPLES,
            seed,
            workers: 1,
        }
    }
}

/// Runs the continuous greedy and returns the final solution.
pub fn run<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    config: &GreedyConfig<T>,
) -> Result<TimeIndexedSolution<T>> {
    run_traced(instance, f, config).map(|(sol, _)| sol)
}

/// Like [`run`], also returning the marginals after every step (the first
/// entry is the zero start).
pub fn run_traced<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    config: &GreedyConfig<T>,
) -> Result<(TimeIndexedSolution<T>, Vec<Vec<T>>)> {
    if !(config.l > T::zero() && config.l <= T::one()) {
        return Err(Error::InvalidInput(
            "stopping time must lie in (0, 1]".into(),
        ));
    }
    if config.steps < 1 {
        return Err(Error::InvalidInput("step count must be at least 1".into()));
    }
    let layout = build_p1_rows(instance)?;
    let delta = config.l / T::of_usize(config.steps);
    let mut x = vec![T::zero(); layout.num_vars()];
    let mut trajectory = vec![vec![T::zero(); instance.n]];

    for step in 0..config.steps {
        let marginals: Vec<T> = layout
            .marginals(&x)
            .into_iter()
            .map(|m| m.min(T::one()))
            .collect();
        let sampling = Sampling {
            samples: config.grad_samples,
            seed: seed::derive_seed(config.seed, "greedy-step", step as u64),
            workers: config.workers,
        };
        let weights: Vec<T> = estimate_gradient(instance, f, &marginals, sampling)?
            .iter()
            .map(|e| e.mean.max(T::zero()))
            .collect();
        let direction = solve_direction(&layout, &weights)?;
        for (xj, &vj) in x.iter_mut().zip(&direction.values) {
            *xj = *xj + delta * vj;
        }
        trajectory.push(layout.marginals(&x));
    }

    let mut slots: Vec<Vec<T>> = layout
        .item_vars
        .iter()
        .map(|r| x[r.clone()].to_vec())
        .collect();
    for row in &mut slots {
        let total: T = row.iter().copied().sum();
        if total > T::one() {
            row.iter_mut().for_each(|v| *v = *v / total);
        }
    }
    let meta = SolveMeta {
        l: config.l,
        steps: config.steps,
        delta,
        grad_samples: config.grad_samples,
        seed: config.seed,
    };
    Ok((TimeIndexedSolution::from_slots(slots, meta), trajectory))
}

/// One checked constraint of a certification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowCheck<T> {
    pub label: String,
    pub lhs: T,
    pub limit: T,
    /// `limit - lhs`; negative on failure.
    pub margin: T,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport<T> {
    pub scale: T,
    pub checks: Vec<RowCheck<T>>,
    pub passed: bool,
}

impl<T: Scalar> CertificationReport<T> {
    pub fn failures(&self) -> impl Iterator<Item = &RowCheck<T>> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Smallest margin over the budget rows and outer rows.
    pub fn min_margin(&self) -> T {
        self.checks
            .iter()
            .map(|c| c.margin)
            .fold(T::infinity(), T::min)
    }
}

impl<T: Scalar> fmt::Display for CertificationReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "scale {}: {}",
            self.scale,
            if self.passed { "PASS" } else { "FAIL" }
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {} <= {} (margin {})",
                if c.passed { "ok  " } else { "FAIL" },
                c.label,
                c.lhs,
                c.limit,
                c.margin
            )?;
        }
        Ok(())
    }
}

/// Checks the scaled feasibility of `sol` at scale `l` with tolerance
/// `CERTIFY_TOL`: slot ranges, box bounds, marginal consistency, outer rows
/// `<= l b` and budget rows `<= l 2t`.
pub fn certify<T: Scalar>(
    instance: &Instance<T>,
    sol: &TimeIndexedSolution<T>,
    l: T,
) -> CertificationReport<T> {
    let tol = T::CERTIFY_TOL;
    let mut checks = Vec::new();
    let mut push = |label: String, lhs: T, limit: T| {
        let margin = limit - lhs;
        checks.push(RowCheck {
            label,
            lhs,
            limit,
            margin,
            passed: margin >= -tol,
        });
    };

    if sol.n() != instance.n || sol.marginals.len() != instance.n {
        push(
            format!("item count {} vs instance {}", sol.n(), instance.n),
            T::one(),
            T::zero(),
        );
        return finish(l, checks);
    }
    for (i, (row, item)) in sol.slots.iter().zip(&instance.items).enumerate() {
        let allowed = item.slot_count(instance.budget) as usize;
        let stray: T = row.iter().skip(allowed).map(|v| v.abs()).sum();
        push(
            format!("item {} slots beyond {}", i + 1, allowed),
            stray,
            T::zero(),
        );
        let lo = row.iter().copied().fold(T::zero(), T::min);
        push(format!("item {} x >= 0", i + 1), -lo, T::zero());
        let hi = row.iter().copied().fold(T::zero(), T::max);
        push(format!("item {} x <= 1", i + 1), hi, T::one());
        let total: T = row.iter().copied().sum();
        push(
            format!("item {} marginal consistency", i + 1),
            (total - sol.marginals[i]).abs(),
            T::zero(),
        );
        push(
            format!("item {} marginal", i + 1),
            sol.marginals[i],
            T::one(),
        );
    }

    match instance.outer.polytope_inequalities::<T>(instance.n) {
        Ok(rows) => {
            for (k, row) in rows.iter().enumerate() {
                let lhs: T = row
                    .coeffs
                    .iter()
                    .zip(&sol.marginals)
                    .map(|(&a, &x)| a * x)
                    .sum();
                push(format!("outer {}", k + 1), lhs, l * row.bound);
            }
        }
        Err(_) => {
            let clipped: Vec<T> = sol
                .marginals
                .iter()
                .map(|&m| m.max(T::zero()).min(T::one()))
                .collect();
            let inside = instance
                .outer
                .check_membership_scaled(&clipped, l)
                .unwrap_or(false);
            push(
                "outer hull membership".into(),
                if inside { T::zero() } else { T::one() },
                T::zero(),
            );
        }
    }

    for t in 1..=instance.budget {
        let lhs: T = instance
            .items
            .iter()
            .enumerate()
            .map(|(i, item)| item.expected_truncated_cost(t) * sol.prefix(i, t))
            .sum();
        push(format!("budget t={t}"), lhs, l * T::of(2.0 * f64::from(t)));
    }
    finish(l, checks)
}

fn finish<T: Scalar>(scale: T, checks: Vec<RowCheck<T>>) -> CertificationReport<T> {
    let passed = checks.iter().all(|c| c.passed);
    CertificationReport {
        scale,
        checks,
        passed,
    }
}

/// A solution that passed [`certify`] at a known scale.
#[derive(Debug, Clone)]
pub struct CertifiedSolution<T> {
    solution: TimeIndexedSolution<T>,
    report: CertificationReport<T>,
}

impl<T: Scalar> CertifiedSolution<T> {
    /// Certifies `solution` at scale `l`; rejects it when any check fails.
    pub fn new(instance: &Instance<T>, solution: TimeIndexedSolution<T>, l: T) -> Result<Self> {
        let solution = solution.fit_to(instance);
        let report = certify(instance, &solution, l);
        if !report.passed {
            let labels: Vec<String> = report.failures().map(|c| c.label.clone()).collect();
            return Err(Error::Uncertified(labels.join(", ")));
        }
        Ok(Self { solution, report })
    }

    pub fn solution(&self) -> &TimeIndexedSolution<T> {
        &self.solution
    }

    pub fn report(&self) -> &CertificationReport<T> {
        &self.report
    }

    pub fn scale(&self) -> T {
        self.report.scale
    }

    pub fn marginals(&self) -> &[T] {
        &self.solution.marginals
    }
}
