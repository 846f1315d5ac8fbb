//! Items, state distributions, state-dependent costs and realizations.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{StateVector, UtilityFamily};
use crate::outer::OuterConstraint;
use crate::seed::StreamRng;
use crate::{seed, Error, Result, Scalar};

/// State distribution and per-state integer costs of one item. Index `k`
/// of both arrays is state `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemModel<T> {
    pub probs: Vec<T>,
    pub costs: Vec<u32>,
}

impl<T: Scalar> ItemModel<T> {
    pub fn new(probs: Vec<T>, costs: Vec<u32>) -> Self {
        Self { probs, costs }
    }

    pub fn prob(&self, state: u32) -> T {
        self.probs[state as usize - 1]
    }

    pub fn cost(&self, state: u32) -> u32 {
        self.costs[state as usize - 1]
    }

    /// Cost in the top state, which fixes the usable start slots.
    pub fn top_cost(&self) -> u32 {
        self.costs.last().copied().unwrap_or(0)
    }

    /// Largest cost over states with positive probability.
    pub fn worst_cost(&self) -> u32 {
        self.probs
            .iter()
            .zip(&self.costs)
            .filter(|(&p, _)| p > T::zero())
            .map(|(_, &c)| c)
            .max()
            .unwrap_or(0)
    }

    /// Number of start slots `1..=budget - c(B)`; zero when `c(B) >= budget`.
    pub fn slot_count(&self, budget: u32) -> u32 {
        budget.saturating_sub(self.top_cost())
    }

    /// `E[min{c(state), t}]` under the item's distribution.
    pub fn expected_truncated_cost(&self, t: u32) -> T {
        self.probs
            .iter()
            .zip(&self.costs)
            .map(|(&p, &c)| p * T::of(f64::from(c.min(t))))
            .sum()
    }

    /// States with positive probability, as `(state, prob)`.
    pub fn support(&self) -> impl Iterator<Item = (u32, T)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(k, &p)| (k as u32 + 1, p))
    }

    /// Draws a state from the item's distribution.
    pub fn draw_state<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 1;
        for (state, p) in self.support() {
            acc += p.as_f64();
            last = state;
            if u < acc {
                return state;
            }
        }
        last
    }
}

/// A problem instance without its utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<T> {
    pub n: usize,
    #[serde(rename = "B")]
    pub states: u32,
    pub budget: u32,
    pub items: Vec<ItemModel<T>>,
    pub outer: OuterConstraint,
}

/// One invariant violation found by [`Instance::validate`]. `item` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub item: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.item {
            Some(i) => write!(f, "item {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl<T: Scalar> Instance<T> {
    pub fn new(states: u32, budget: u32, items: Vec<ItemModel<T>>, outer: OuterConstraint) -> Self {
        Self {
            n: items.len(),
            states,
            budget,
            items,
            outer,
        }
    }

    /// Every invariant violation; empty iff the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let global = |message: String| Violation {
            item: None,
            message,
        };
        if self.items.len() != self.n {
            out.push(global(format!(
                "n = {} but {} items given",
                self.n,
                self.items.len()
            )));
        }
        if self.budget < 1 {
            out.push(global("budget must be at least 1".into()));
        }
        if self.states < 1 {
            out.push(global("state count B must be at least 1".into()));
        }
        let b = self.states as usize;
        for (idx, item) in self.items.iter().enumerate() {
            let mut push = |message: String| {
                out.push(Violation {
                    item: Some(idx + 1),
                    message,
                })
            };
            if item.probs.len() != b || item.costs.len() != b {
                push(format!(
                    "expected {b} probabilities and costs, got {} and {}",
                    item.probs.len(),
                    item.costs.len()
                ));
                continue;
            }
            if item
                .probs
                .iter()
                .any(|&p| !(p >= T::zero()) || !p.is_finite())
            {
                push("probabilities must be finite and nonnegative".into());
            }
            let total: T = item.probs.iter().copied().sum();
            if (total - T::one()).abs() > T::PROB_TOL {
                push(format!("distribution sums to {total}"));
            }
            if let Some(s) = item.costs.windows(2).position(|w| w[1] < w[0]) {
                push(format!(
                    "cost not nondecreasing in state (monotone-cost assumption): c({}) = {} > c({}) = {}",
                    s + 1,
                    item.costs[s],
                    s + 2,
                    item.costs[s + 1]
                ));
            }
            if item.costs.iter().any(|&c| c < 1) {
                push("costs must be positive integers".into());
            }
        }
        out.extend(self.outer.validate(self.n).into_iter().map(global));
        out
    }

    fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
            Err(Error::InvalidInstance(msg.join("; ")))
        }
    }

    /// Draws a full realization; assumes a valid instance.
    pub fn draw_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        Realization(self.items.iter().map(|it| it.draw_state(rng)).collect())
    }

    /// Seeded realization; rejects invalid instances.
    pub fn sample_realization(&self, seed: u64) -> Result<Realization> {
        self.ensure_valid()?;
        let mut rng: StreamRng = seed::stream(seed, "realization", 0);
        Ok(self.draw_realization(&mut rng))
    }

    /// Items that can be started at some slot.
    pub fn schedulable(&self, item: usize) -> bool {
        self.items[item].slot_count(self.budget) > 0
    }
}

/// Item states for all items, each in `1..=B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Realization(pub Vec<u32>);

impl Realization {
    pub fn state(&self, item: usize) -> u32 {
        self.0[item]
    }

    /// The lattice vector equal to the realization on `items`, 0 elsewhere.
    pub fn restrict(&self, items: &[usize]) -> StateVector {
        let mut v = StateVector::zeros(self.0.len());
        items.iter().for_each(|&i| v.set(i, self.0[i]));
        v
    }
}

/// The instance file: an instance plus its utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem<T> {
    #[serde(flatten)]
    pub instance: Instance<T>,
    pub utility: UtilityFamily<T>,
}

impl<T: Scalar> Problem<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Instance violations followed by utility parameter problems.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.instance.validate();
        out.extend(
            self.utility
                .validate(self.instance.n)
                .into_iter()
                .map(|message| Violation {
                    item: None,
                    message,
                }),
        );
        out
    }
}
