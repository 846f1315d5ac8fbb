//! Integer-lattice state vectors and monotone lattice-submodular utilities.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Largest lattice the exhaustive checkers will enumerate.
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// A point of `[0;B]^n`. Entry 0 means "not selected".
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(Vec<u32>);

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    /// Builds a vector and rejects entries above `max_state`.
    pub fn bounded(entries: Vec<u32>, max_state: u32) -> Result<Self> {
        if let Some((i, &s)) = entries.iter().enumerate().find(|(_, &s)| s > max_state) {
            return Err(Error::InvalidInput(format!(
                "entry {s} at position {i} exceeds max state {max_state}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, s: u32) {
        self.0[i] = s;
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// Copy with coordinate `i` set to `s`.
    pub fn with(&self, i: usize, s: u32) -> Self {
        let mut out = self.clone();
        out.0[i] = s;
        out
    }

    /// Items with a nonzero entry, in increasing order.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Componentwise `self <= other`. Vectors of different length are
    /// incomparable.
    pub fn le(&self, other: &Self) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn zip_with(&self, other: &Self, op: fn(u32, u32) -> u32) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        ))
    }
}

impl From<Vec<u32>> for StateVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// Componentwise maximum.
pub fn join(u: &StateVector, v: &StateVector) -> Result<StateVector> {
    u.zip_with(v, u32::max)
}

/// Componentwise minimum.
pub fn meet(u: &StateVector, v: &StateVector) -> Result<StateVector> {
    u.zip_with(v, u32::min)
}

/// Iterates `[0;max_state]^n` in odometer order, first coordinate fastest.
pub struct LatticeIter {
    current: Option<Vec<u32>>,
    max_state: u32,
}

impl LatticeIter {
    pub fn new(n: usize, max_state: u32) -> Self {
        Self {
            current: Some(vec![0; n]),
            max_state,
        }
    }
}

impl Iterator for LatticeIter {
    type Item = StateVector;

    fn next(&mut self) -> Option<StateVector> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut k = 0;
        loop {
            if k == cur.len() {
                self.current = None;
                break;
            }
            if cur[k] < self.max_state {
                cur[k] += 1;
                break;
            }
            cur[k] = 0;
            k += 1;
        }
        Some(StateVector(out))
    }
}

/// Evaluation contract for utilities over `[0;B]^n`. Implementations are
/// immutable and may be shared across threads.
pub trait Utility<T>: Send + Sync {
    fn value(&self, v: &[u32]) -> T;
}

impl<T, F> Utility<T> for F
where
    F: Fn(&[u32]) -> T + Send + Sync,
{
    fn value(&self, v: &[u32]) -> T {
        self(v)
    }
}

/// Concave outer function of the concave-over-modular family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcaveShape<T> {
    /// `g(x) = min(x, theta)`
    Threshold { theta: T },
    /// `g(x) = sqrt(x)`
    Sqrt,
}

/// Built-in utility families. All are monotone and lattice submodular for
/// nonnegative parameters, and depend only on nonzero coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum UtilityFamily<T> {
    /// `f(u) = sum_i w_i * u(i)`
    Modular { weights: Vec<T> },
    /// `f(u) = g(sum_i w_i * u(i))`
    Concave {
        weights: Vec<T>,
        shape: ConcaveShape<T>,
    },
    /// Item `i` in state `s` covers the first `widths[i] * s` entries of its
    /// ground list; `f` is the total weight of the covered elements. Without
    /// `lists`, every item uses the shared list `0, 1, ..., m-1`.
    Coverage {
        ground_weights: Vec<T>,
        widths: Vec<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lists: Option<Vec<Vec<usize>>>,
    },
}

impl<T: Scalar> UtilityFamily<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Modular { .. } => "modular",
            Self::Concave {
                shape: ConcaveShape::Threshold { .. },
                ..
            } => "concave-threshold",
            Self::Concave {
                shape: ConcaveShape::Sqrt,
                ..
            } => "concave-sqrt",
            Self::Coverage { .. } => "coverage",
        }
    }

    /// Parameter problems for an `n`-item instance; empty when well formed.
    pub fn validate(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut nonneg = |name: &str, xs: &[T]| {
            if let Some(i) = xs.iter().position(|&w| !(w >= T::zero()) || !w.is_finite()) {
                out.push(format!("{name}[{i}] must be a finite nonnegative number"));
            }
        };
        match self {
            Self::Modular { weights } | Self::Concave { weights, .. } => {
                nonneg("weights", weights);
                if weights.len() != n {
                    out.push(format!(
                        "utility has {} weights for {n} items",
                        weights.len()
                    ));
                }
                if let Self::Concave {
                    shape: ConcaveShape::Threshold { theta },
                    ..
                } = self
                {
                    if !(*theta >= T::zero()) {
                        out.push("threshold theta must be nonnegative".into());
                    }
                }
            }
            Self::Coverage {
                ground_weights,
                widths,
                lists,
            } => {
                nonneg("ground_weights", ground_weights);
                if widths.len() != n {
                    out.push(format!(
                        "coverage has {} widths for {n} items",
                        widths.len()
                    ));
                }
                if let Some(lists) = lists {
                    if lists.len() != n {
                        out.push(format!(
                            "coverage has {} ground lists for {n} items",
                            lists.len()
                        ));
                    }
                    let m = ground_weights.len();
                    for (i, list) in lists.iter().enumerate() {
                        if let Some(&e) = list.iter().find(|&&e| e >= m) {
                            out.push(format!(
                                "ground list of item {} names element {e} >= {m}",
                                i + 1
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}

impl<T: Scalar> Utility<T> for UtilityFamily<T> {
    fn value(&self, v: &[u32]) -> T {
        match self {
            Self::Modular { weights } => weights
                .iter()
                .zip(v)
                .map(|(&w, &s)| w * T::of(f64::from(s)))
                .sum(),
            Self::Concave { weights, shape } => {
                let x: T = weights
                    .iter()
                    .zip(v)
                    .map(|(&w, &s)| w * T::of(f64::from(s)))
                    .sum();
                match shape {
                    ConcaveShape::Threshold { theta } => x.min(*theta),
                    ConcaveShape::Sqrt => x.sqrt(),
                }
            }
            Self::Coverage {
                ground_weights,
                widths,
                lists,
            } => {
                let m = ground_weights.len();
                match lists {
                    None => {
                        let reach = widths
                            .iter()
                            .zip(v)
                            .map(|(&w, &s)| (w as usize).saturating_mul(s as usize))
                            .max()
                            .unwrap_or(0)
                            .min(m);
                        ground_weights[..reach].iter().copied().sum()
                    }
                    Some(lists) => {
                        let mut covered = vec![false; m];
                        for ((list, &w), &s) in lists.iter().zip(widths).zip(v) {
                            let len = (w as usize).saturating_mul(s as usize).min(list.len());
                            list[..len].iter().for_each(|&e| covered[e] = true);
                        }
                        covered
                            .iter()
                            .zip(ground_weights)
                            .filter(|(c, _)| **c)
                            .map(|(_, &w)| w)
                            .sum()
                    }
                }
            }
        }
    }
}

/// Result of an exhaustive property check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome<W> {
    Holds,
    Violated(W),
}

impl<W> CheckOutcome<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Self::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Self::Holds => None,
            Self::Violated(w) => Some(w),
        }
    }
}

/// `f(lower) > f(upper)` although `lower <= upper`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneWitness {
    pub lower: StateVector,
    pub upper: StateVector,
}

/// `f(u v s1_i) - f(u) < f(v v s1_i) - f(v)` with `u <= v`. `item` is 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmodularWitness {
    pub u: StateVector,
    pub v: StateVector,
    pub state: u32,
    pub item: usize,
}

fn lattice_guard(n: usize, max_state: u32) -> Result<()> {
    let size = (f64::from(max_state) + 1.0).powi(n as i32);
    if size > ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded {
            what: "lattice enumeration",
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Exhaustive monotonicity check over `[0;max_state]^n`.
///
/// Monotonicity along covering pairs `u < u + 1_k` implies it for every
/// comparable pair by transitivity, so only covering pairs are visited.
pub fn check_monotone<T: Scalar, U: Utility<T> + ?Sized>(
    f: &U,
    n: usize,
    max_state: u32,
) -> Result<CheckOutcome<MonotoneWitness>> {
    lattice_guard(n, max_state)?;
    for u in LatticeIter::new(n, max_state) {
        let fu = f.value(u.as_slice());
        for k in 0..n {
            if u.get(k) == max_state {
                continue;
            }
            let v = u.with(k, u.get(k) + 1);
            if fu > f.value(v.as_slice()) + T::CHECK_TOL {
                return Ok(CheckOutcome::Violated(MonotoneWitness {
                    lower: u,
                    upper: v,
                }));
            }
        }
    }
    Ok(CheckOutcome::Holds)
}

/// Exhaustive lattice-submodularity check over `[0;max_state]^n`.
///
/// The diminishing-returns inequality for an arbitrary pair `u <= v`
/// telescopes along any chain of covering pairs from `u` to `v`, so checking
/// covering pairs is equivalent to checking all pairs.
pub fn check_lattice_submodular<T: Scalar, U: Utility<T> + ?Sized>(
    f: &U,
    n: usize,
    max_state: u32,
) -> Result<CheckOutcome<SubmodularWitness>> {
    lattice_guard(n, max_state)?;
    for u in LatticeIter::new(n, max_state) {
        let fu = f.value(u.as_slice());
        for i in 0..n {
            for s in 0..=max_state {
                let gain_u = f.value(u.with(i, u.get(i).max(s)).as_slice()) - fu;
                for k in 0..n {
                    if u.get(k) == max_state {
                        continue;
                    }
                    let v = u.with(k, u.get(k) + 1);
                    let gain_v =
                        f.value(v.with(i, v.get(i).max(s)).as_slice()) - f.value(v.as_slice());
                    if gain_u < gain_v - T::CHECK_TOL {
                        return Ok(CheckOutcome::Violated(SubmodularWitness {
                            u,
                            v,
                            state: s,
                            item: i,
                        }));
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::Holds)
}
