//! Exact optimal adaptive value for small instances.
//!
//! The value of an observed partial state `v` (0 = not selected) is the
//! better of stopping with `f(v)` and, over admissible items, the expected
//! value after selecting and observing the item. An item is admissible when
//! adding it keeps the selection independent and its worst cost with
//! positive probability fits in the remaining budget, so every sample path
//! stays feasible.

use std::collections::HashMap;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::lattice::{StateVector, Utility};
use crate::model::Instance;
use crate::{Error, Result, Scalar};

pub const ORACLE_MAX_ITEMS: usize = 5;
pub const ORACLE_MAX_STATES: u32 = 3;

fn one_based<S: Serializer>(item: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*item as u64 + 1)
}

/// A feasible adaptive policy as a decision tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum PolicyTree<T> {
    Stop,
    Select {
        #[serde(serialize_with = "one_based")]
        item: usize,
        branches: Vec<Branch<T>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch<T> {
    pub state: u32,
    pub prob: T,
    pub next: PolicyTree<T>,
}

impl<T: Scalar> PolicyTree<T> {
    pub fn first_action(&self) -> Option<usize> {
        match self {
            Self::Stop => None,
            Self::Select { item, .. } => Some(*item),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult<T> {
    pub value: T,
    #[serde(skip)]
    pub first_action: Option<usize>,
    pub tree: PolicyTree<T>,
}

fn guard<T>(instance: &Instance<T>) -> Result<()> {
    if instance.n > ORACLE_MAX_ITEMS {
        return Err(Error::GuardExceeded {
            what: "items for exact oracle",
            size: instance.n as f64,
            limit: ORACLE_MAX_ITEMS as f64,
        });
    }
    if instance.states > ORACLE_MAX_STATES {
        return Err(Error::GuardExceeded {
            what: "states for exact oracle",
            size: f64::from(instance.states),
            limit: f64::from(ORACLE_MAX_STATES),
        });
    }
    Ok(())
}

fn used_budget<T: Scalar>(instance: &Instance<T>, v: &StateVector) -> u32 {
    v.support()
        .iter()
        .map(|&i| instance.items[i].cost(v.get(i)))
        .sum()
}

/// Whether `item` may be selected after observing `v`.
pub fn admissible<T: Scalar>(instance: &Instance<T>, v: &StateVector, item: usize) -> bool {
    if v.get(item) != 0 {
        return false;
    }
    let mut set = v.support();
    set.push(item);
    if !instance.outer.is_independent(&set) {
        return false;
    }
    let used = used_budget(instance, v);
    used + instance.items[item].worst_cost() <= instance.budget
}

struct Solver<'a, T, U: ?Sized> {
    instance: &'a Instance<T>,
    f: &'a U,
    memo: HashMap<Vec<u32>, (T, Option<usize>)>,
}

impl<T: Scalar, U: Utility<T> + ?Sized> Solver<'_, T, U> {
    fn value(&mut self, v: &StateVector) -> (T, Option<usize>) {
        if let Some(&hit) = self.memo.get(v.as_slice()) {
            return hit;
        }
        let mut best = (self.f.value(v.as_slice()), None);
        for i in 0..self.instance.n {
            if !admissible(self.instance, v, i) {
                continue;
            }
            let mut total = T::zero();
            for (s, p) in self.instance.items[i].support() {
                total = total + p * self.value(&v.with(i, s)).0;
            }
            if total > best.0 + T::PROB_TOL {
                best = (total, Some(i));
            }
        }
        self.memo.insert(v.as_slice().to_vec(), best);
        best
    }

    fn tree(&mut self, v: &StateVector) -> PolicyTree<T> {
        match self.value(v).1 {
            None => PolicyTree::Stop,
            Some(i) => PolicyTree::Select {
                item: i,
                branches: self.instance.items[i]
                    .support()
                    .map(|(s, p)| Branch {
                        state: s,
                        prob: p,
                        next: self.tree(&v.with(i, s)),
                    })
                    .collect(),
            },
        }
    }
}

/// Optimal expected utility over feasible adaptive policies, with an
/// optimal decision tree. Stopping wins ties.
pub fn optimal_adaptive_value<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
) -> Result<OracleResult<T>> {
    guard(instance)?;
    let mut solver = Solver {
        instance,
        f,
        memo: HashMap::new(),
    };
    let root = StateVector::zeros(instance.n);
    let (value, first_action) = solver.value(&root);
    let tree = solver.tree(&root);
    Ok(OracleResult {
        value,
        first_action,
        tree,
    })
}

/// Checks that `tree` only takes admissible actions and branches on exactly
/// the positive-probability states of each selected item.
pub fn check_tree<T: Scalar>(instance: &Instance<T>, tree: &PolicyTree<T>) -> Result<()> {
    fn walk<T: Scalar>(inst: &Instance<T>, v: &StateVector, tree: &PolicyTree<T>) -> Result<()> {
        let PolicyTree::Select { item, branches } = tree else {
            return Ok(());
        };
        if *item >= inst.n || !admissible(inst, v, *item) {
            return Err(Error::InvalidInput(format!(
                "item {} is not admissible after {:?}",
                item + 1,
                v.as_slice()
            )));
        }
        let expected: Vec<u32> = inst.items[*item].support().map(|(s, _)| s).collect();
        let got: Vec<u32> = branches.iter().map(|b| b.state).collect();
        if expected != got {
            return Err(Error::InvalidInput(format!(
                "item {} branches on {got:?}, support is {expected:?}",
                item + 1
            )));
        }
        branches
            .iter()
            .try_for_each(|b| walk(inst, &v.with(*item, b.state), &b.next))
    }
    walk(instance, &StateVector::zeros(instance.n), tree)
}

/// Expected utility of a decision tree, using the instance's probabilities.
pub fn evaluate_policy_exact<T: Scalar, U: Utility<T> + ?Sized>(
    instance: &Instance<T>,
    f: &U,
    tree: &PolicyTree<T>,
) -> Result<T> {
    fn walk<T: Scalar, U: Utility<T> + ?Sized>(
        inst: &Instance<T>,
        f: &U,
        v: &StateVector,
        tree: &PolicyTree<T>,
    ) -> T {
        match tree {
            PolicyTree::Stop => f.value(v.as_slice()),
            PolicyTree::Select { item, branches } => branches
                .iter()
                .map(|b| {
                    inst.items[*item].prob(b.state)
                        * walk(inst, f, &v.with(*item, b.state), &b.next)
                })
                .sum(),
        }
    }
    check_tree(instance, tree)?;
    Ok(walk(instance, f, &StateVector::zeros(instance.n), tree))
}

/// A uniformly random feasible decision tree; stops with probability
/// `stop_prob` at every node that has an admissible item.
pub fn random_policy_tree<T: Scalar, R: Rng + ?Sized>(
    instance: &Instance<T>,
    stop_prob: f64,
    rng: &mut R,
) -> PolicyTree<T> {
    fn grow<T: Scalar, R: Rng + ?Sized>(
        inst: &Instance<T>,
        v: &StateVector,
        stop_prob: f64,
        rng: &mut R,
    ) -> PolicyTree<T> {
        let options: Vec<usize> = (0..inst.n).filter(|&i| admissible(inst, v, i)).collect();
        if options.is_empty() || rng.random::<f64>() < stop_prob {
            return PolicyTree::Stop;
        }
        let item = options[rng.random_range(0..options.len())];
        let branches = inst.items[item]
            .support()
            .map(|(s, p)| Branch {
                state: s,
                prob: p,
                next: grow(inst, &v.with(item, s), stop_prob, rng),
            })
            .collect();
        PolicyTree::Select { item, branches }
    }
    grow(instance, &StateVector::zeros(instance.n), stop_prob, rng)
}
