//! The executable inner/outer constrained adaptive policy.
//!
//! One run: sample `R` with `Pr[i in R] = ybar(i)`, prune it through the set
//! scheme, draw a start slot for every kept item, and scan the kept items in
//! nondecreasing start order (least index on ties). An item is selected iff
//! the realized cost accumulated so far is at most its start slot; only then
//! is its state revealed and its cost added. Skipped items stay skipped.

use std::io::Write;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::crs::{draw_start_times, intersect, psi_b_with_times, BalancedCrs, StartTimeAssignment};
use crate::greedy::CertifiedSolution;
use crate::lattice::{StateVector, Utility};
use crate::model::{Instance, Realization};
use crate::stats::{run_batches, Accumulator, Estimate};
use crate::{seed, Error, Result, Scalar};

fn one_based<S: Serializer>(item: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*item as u64 + 1)
}

fn one_based_all<S: Serializer>(items: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(items.iter().map(|i| i + 1))
}

/// Realization access that records every revealed item.
#[derive(Debug)]
pub struct RevealingOracle<'a> {
    realization: &'a Realization,
    log: Vec<usize>,
}

impl<'a> RevealingOracle<'a> {
    pub fn new(realization: &'a Realization) -> Self {
        Self {
            realization,
            log: Vec::new(),
        }
    }

    pub fn reveal(&mut self, item: usize) -> u32 {
        self.log.push(item);
        self.realization.state(item)
    }

    pub fn log(&self) -> &[usize] {
        &self.log
    }
}

/// What happened to one kept item during the scan. `item` is 0-based in
/// memory and 1-based in JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ItemRecord {
    #[serde(serialize_with = "one_based")]
    pub item: usize,
    pub start_time: u32,
    /// Accumulated realized cost when the item was visited.
    pub load: u32,
    pub gate_passed: bool,
    pub realized_state: Option<u32>,
    pub realized_cost: Option<u32>,
}

/// One execution record of the policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyTrace<T> {
    #[serde(serialize_with = "one_based_all")]
    pub sampled: Vec<usize>,
    #[serde(serialize_with = "one_based_all")]
    pub kept: Vec<usize>,
    #[serde(serialize_with = "one_based_all")]
    pub sequence: Vec<usize>,
    pub records: Vec<ItemRecord>,
    /// Accumulated cost after each visit.
    pub cost_history: Vec<u32>,
    /// Selected items in selection order.
    #[serde(serialize_with = "one_based_all")]
    pub selected: Vec<usize>,
    /// Items whose state was read, in read order.
    #[serde(serialize_with = "one_based_all")]
    pub reveals: Vec<usize>,
    pub total_cost: u32,
    pub utility: T,
}

impl<T: Scalar> PolicyTrace<T> {
    /// The lattice vector of selected items under `realization`.
    pub fn selection_vector(&self, realization: &Realization) -> StateVector {
        realization.restrict(&self.selected)
    }

    /// Realized cost within budget after every visit.
    pub fn respects_budget(&self, budget: u32) -> bool {
        self.cost_history.iter().all(|&c| c <= budget) && self.total_cost <= budget
    }

    /// Every revealed item was selected before being read, and nothing else
    /// was read.
    pub fn respects_adaptivity(&self) -> bool {
        self.reveals == self.selected
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Writes traces as JSON lines.
pub fn write_traces<T: Scalar, W: Write>(traces: &[PolicyTrace<T>], mut out: W) -> Result<()> {
    for t in traces {
        writeln!(out, "{}", t.to_json_line()?)?;
    }
    Ok(())
}

/// The sequential scan over kept items with fixed start times.
pub fn run_schedule<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    sampled: Vec<usize>,
    kept: Vec<usize>,
    times: &StartTimeAssignment,
    realization: &Realization,
) -> PolicyTrace<T> {
    let mut sequence: Vec<usize> = kept.clone();
    sequence.sort_by_key(|&i| (times.get(i), i));
    let mut oracle = RevealingOracle::new(realization);
    let mut load = 0u32;
    let mut records = Vec::with_capacity(sequence.len());
    let mut cost_history = Vec::with_capacity(sequence.len());
    let mut selected = Vec::new();
    for &i in &sequence {
        let start_time = times.get(i).expect("kept items have start times");
        let gate_passed = load <= start_time;
        let (realized_state, realized_cost) = if gate_passed {
            let state = oracle.reveal(i);
            let cost = instance.items[i].cost(state);
            (Some(state), Some(cost))
        } else {
            (None, None)
        };
        records.push(ItemRecord {
            item: i,
            start_time,
            load,
            gate_passed,
            realized_state,
            realized_cost,
        });
        if let Some(c) = realized_cost {
            load += c;
            selected.push(i);
        }
        cost_history.push(load);
    }
    let utility = f.value(realization.restrict(&selected).as_slice());
    PolicyTrace {
        sampled,
        kept,
        sequence,
        records,
        cost_history,
        selected,
        reveals: oracle.log,
        total_cost: load,
        utility,
    }
}

fn sample_set<T: Scalar, R: Rng + ?Sized>(ybar: &[T], rng: &mut R) -> Vec<usize> {
    (0..ybar.len())
        .filter(|&i| rng.random::<f64>() < ybar[i].as_f64())
        .collect()
}

/// One policy run drawing its coins from `rng`.
pub fn execute_with<T: Scalar, U: Utility<T> + ?Sized, R: Rng + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    crs: &BalancedCrs<T>,
    sol: &CertifiedSolution<T>,
    realization: &Realization,
    rng: &mut R,
) -> Result<PolicyTrace<T>> {
    let sampled = sample_set(sol.marginals(), rng);
    let kept = crs.apply(&instance.outer, &sampled, rng);
    let times = draw_start_times(sol.solution(), &kept, rng)?;
    Ok(run_schedule(
        instance,
        f,
        sampled,
        kept,
        &times,
        realization,
    ))
}

/// One seeded policy run under a given realization.
pub fn execute<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    crs: &BalancedCrs<T>,
    sol: &CertifiedSolution<T>,
    realization: &Realization,
    seed: u64,
) -> Result<PolicyTrace<T>> {
    if realization.0.len() != instance.n {
        return Err(Error::LengthMismatch {
            expected: instance.n,
            got: realization.0.len(),
        });
    }
    execute_with(
        instance,
        f,
        crs,
        sol,
        realization,
        &mut seed::stream(seed, "policy", 0),
    )
}

/// Expected-utility estimate plus constraint audit over many runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FavgReport<T> {
    pub estimate: Estimate<T>,
    pub inner_violations: usize,
    pub outer_violations: usize,
    pub adaptivity_violations: usize,
}

/// Estimates the policy's expected utility over independent pairs of policy
/// coins and realizations, auditing every trace.
pub fn estimate_favg<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    crs: &BalancedCrs<T>,
    sol: &CertifiedSolution<T>,
    runs: usize,
    seed: u64,
    workers: usize,
) -> Result<FavgReport<T>> {
    if runs < 2 {
        return Err(Error::InvalidInput("run count must be at least 2".into()));
    }
    let parts = run_batches(
        runs,
        workers,
        |b, range| -> Result<(Accumulator<T>, [usize; 3])> {
            let mut rng = seed::stream(seed, "favg", b);
            let mut acc = Accumulator::default();
            let mut bad = [0usize; 3];
            for _ in range {
                let phi = instance.draw_realization(&mut rng);
                let trace = execute_with(instance, f, crs, sol, &phi, &mut rng)?;
                acc.push(trace.utility);
                bad[0] += usize::from(!trace.respects_budget(instance.budget));
                bad[1] += usize::from(!instance.outer.is_independent(&trace.selected));
                bad[2] += usize::from(!trace.respects_adaptivity());
            }
            Ok((acc, bad))
        },
    );
    let mut acc = Accumulator::default();
    let mut bad = [0usize; 3];
    for part in parts {
        let (a, b) = part?;
        acc.merge(&a);
        bad.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    }
    Ok(FavgReport {
        estimate: acc.estimate(),
        inner_violations: bad[0],
        outer_violations: bad[1],
        adaptivity_violations: bad[2],
    })
}

/// A coupled sample where the policy's selection failed to dominate the
/// intersection mapping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceViolation<T> {
    pub trace: PolicyTrace<T>,
    pub v: StateVector,
    pub psi_c: StateVector,
    pub policy_value: T,
    pub psi_c_value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport<T> {
    pub trials: usize,
    pub violations: usize,
    /// At most [`MAX_RECORDED_VIOLATIONS`] full dumps.
    pub examples: Vec<DominanceViolation<T>>,
    pub policy_mean: Estimate<T>,
    pub psi_c_mean: Estimate<T>,
}

pub const MAX_RECORDED_VIOLATIONS: usize = 20;

/// Shares the sampled set, the scheme outcome, the start times and the
/// realization between one policy run and one evaluation of the
/// intersection mapping, then checks pointwise dominance of the selection
/// vector and of its utility.
pub fn coupled_dominance_test<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    crs: &BalancedCrs<T>,
    sol: &CertifiedSolution<T>,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<DominanceReport<T>> {
    type Part<T> = (
        usize,
        Vec<DominanceViolation<T>>,
        Accumulator<T>,
        Accumulator<T>,
    );
    let parts = run_batches(trials, workers, |b, range| -> Result<Part<T>> {
        let mut rng = seed::stream(seed, "dominance", b);
        let mut count = 0;
        let mut examples = Vec::new();
        let mut pol = Accumulator::default();
        let mut psi = Accumulator::default();
        for _ in range {
            let phi = instance.draw_realization(&mut rng);
            let sampled = sample_set(sol.marginals(), &mut rng);
            let v = phi.restrict(&sampled);
            let kept = crs.apply(&instance.outer, &sampled, &mut rng);
            let times = draw_start_times(sol.solution(), &sampled, &mut rng)?;
            let a = phi.restrict(&kept);
            let b_vec = psi_b_with_times(instance, &v, &times);
            let c = intersect(&v, &a, &b_vec);
            let trace = run_schedule(instance, f, sampled, kept, &times, &phi);
            let chosen = trace.selection_vector(&phi);
            let psi_c_value = f.value(c.as_slice());
            pol.push(trace.utility);
            psi.push(psi_c_value);
            if !c.le(&chosen) || trace.utility < psi_c_value - T::CHECK_TOL {
                count += 1;
                if examples.len() < MAX_RECORDED_VIOLATIONS {
                    examples.push(DominanceViolation {
                        policy_value: trace.utility,
                        trace,
                        v,
                        psi_c: c,
                        psi_c_value,
                    });
                }
            }
        }
        Ok((count, examples, pol, psi))
    });
    let mut report = DominanceReport {
        trials,
        violations: 0,
        examples: Vec::new(),
        policy_mean: Accumulator::default().estimate(),
        psi_c_mean: Accumulator::default().estimate(),
    };
    let (mut pol, mut psi) = (Accumulator::default(), Accumulator::default());
    for part in parts {
        let (count, examples, p, q) = part?;
        report.violations += count;
        let room = MAX_RECORDED_VIOLATIONS - report.examples.len();
        report.examples.extend(examples.into_iter().take(room));
        pol.merge(&p);
        psi.merge(&q);
    }
    report.policy_mean = pol.estimate();
    report.psi_c_mean = psi.estimate();
    Ok(report)
}
