//! The state-independent, downward-closed outer family over item sets.

use serde::{Deserialize, Serialize};

use crate::simplex::LinearProgram;
use crate::{Error, Result, Scalar};

/// Largest ground set for which explicit-family membership is decided by
/// solving the convex-hull program.
pub const EXPLICIT_MEMBERSHIP_LIMIT: usize = 10;

/// Outer constraint. Item indices are 0-based in memory and 1-based in the
/// JSON form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OuterRepr", into = "OuterRepr")]
pub enum OuterConstraint {
    /// At most `k` items.
    Cardinality { k: usize },
    /// At most `caps[b]` items from block `b`; items in no block are free.
    Partition {
        blocks: Vec<Vec<usize>>,
        caps: Vec<usize>,
    },
    /// Subsets of the listed maximal sets.
    Explicit { maximal: Vec<Vec<usize>> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum OuterRepr {
    Cardinality {
        k: usize,
    },
    Partition {
        blocks: Vec<Vec<usize>>,
        caps: Vec<usize>,
    },
    Explicit {
        maximal: Vec<Vec<usize>>,
    },
}

fn shift(sets: Vec<Vec<usize>>, up: bool) -> std::result::Result<Vec<Vec<usize>>, String> {
    sets.into_iter()
        .map(|set| {
            set.into_iter()
                .map(|i| {
                    if up {
                        Ok(i + 1)
                    } else {
                        i.checked_sub(1)
                            .ok_or_else(|| "item indices are 1-based".to_string())
                    }
                })
                .collect()
        })
        .collect()
}

impl TryFrom<OuterRepr> for OuterConstraint {
    type Error = String;

    fn try_from(r: OuterRepr) -> std::result::Result<Self, String> {
        Ok(match r {
            OuterRepr::Cardinality { k } => Self::Cardinality { k },
            OuterRepr::Partition { blocks, caps } => Self::Partition {
                blocks: shift(blocks, false)?,
                caps,
            },
            OuterRepr::Explicit { maximal } => Self::Explicit {
                maximal: shift(maximal, false)?,
            },
        })
    }
}

impl From<OuterConstraint> for OuterRepr {
    fn from(c: OuterConstraint) -> Self {
        match c {
            OuterConstraint::Cardinality { k } => Self::Cardinality { k },
            OuterConstraint::Partition { blocks, caps } => Self::Partition {
                blocks: shift(blocks, true).expect("shifting up cannot fail"),
                caps,
            },
            OuterConstraint::Explicit { maximal } => Self::Explicit {
                maximal: shift(maximal, true).expect("shifting up cannot fail"),
            },
        }
    }
}

/// `coeffs . x <= bound`
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality<T> {
    pub coeffs: Vec<T>,
    pub bound: T,
}

impl OuterConstraint {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Cardinality { .. } => "cardinality",
            Self::Partition { .. } => "partition",
            Self::Explicit { .. } => "explicit",
        }
    }

    /// Descriptor problems for `n` items.
    pub fn validate(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Self::Cardinality { .. } => {}
            Self::Partition { blocks, caps } => {
                if blocks.len() != caps.len() {
                    out.push(format!(
                        "partition has {} blocks but {} caps",
                        blocks.len(),
                        caps.len()
                    ));
                }
                let mut seen = vec![false; n];
                for (b, block) in blocks.iter().enumerate() {
                    for &i in block {
                        if i >= n {
                            out.push(format!(
                                "partition block {} names item {} > n = {n}",
                                b + 1,
                                i + 1
                            ));
                        } else if std::mem::replace(&mut seen[i], true) {
                            out.push(format!(
                                "item {} appears in more than one partition block",
                                i + 1
                            ));
                        }
                    }
                }
            }
            Self::Explicit { maximal } => {
                for (k, set) in maximal.iter().enumerate() {
                    if let Some(&i) = set.iter().find(|&&i| i >= n) {
                        out.push(format!(
                            "maximal set {} names item {} > n = {n}",
                            k + 1,
                            i + 1
                        ));
                    }
                }
            }
        }
        out
    }

    /// Membership of the item set `set` (0-based, no duplicates) in the family.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        match self {
            Self::Cardinality { k } => set.len() <= *k,
            Self::Partition { blocks, caps } => blocks
                .iter()
                .zip(caps)
                .all(|(block, &cap)| set.iter().filter(|i| block.contains(i)).count() <= cap),
            Self::Explicit { maximal } => {
                set.is_empty() || maximal.iter().any(|m| set.iter().all(|i| m.contains(i)))
            }
        }
    }

    /// Whether the family has a compact inequality description.
    pub fn has_compact_polytope(&self) -> bool {
        !matches!(self, Self::Explicit { .. })
    }

    /// Rank inequalities which, with `0 <= x <= 1`, describe the convex hull
    /// of the family's indicator vectors over `n` items.
    pub fn polytope_inequalities<T: Scalar>(&self, n: usize) -> Result<Vec<Inequality<T>>> {
        match self {
            Self::Cardinality { k } => Ok(vec![Inequality {
                coeffs: vec![T::one(); n],
                bound: T::of_usize(*k),
            }]),
            Self::Partition { blocks, caps } => Ok(blocks
                .iter()
                .zip(caps)
                .map(|(block, &cap)| {
                    let mut coeffs = vec![T::zero(); n];
                    block
                        .iter()
                        .filter(|&&i| i < n)
                        .for_each(|&i| coeffs[i] = T::one());
                    Inequality {
                        coeffs,
                        bound: T::of_usize(cap),
                    }
                })
                .collect()),
            Self::Explicit { .. } => Err(Error::NoCompactPolytope),
        }
    }

    /// Whether `x` lies in `scale` times the family polytope.
    pub fn check_membership_scaled<T: Scalar>(&self, x: &[T], scale: T) -> Result<bool> {
        if x.iter()
            .any(|&v| v < -T::CHECK_TOL || v > T::one() + T::CHECK_TOL)
        {
            return Err(Error::InvalidInput(
                "fractional vector must lie in [0,1]^n".into(),
            ));
        }
        match self {
            Self::Explicit { maximal } => explicit_membership(maximal, x, scale),
            _ => Ok(self.polytope_inequalities::<T>(x.len())?.iter().all(|row| {
                let lhs: T = row.coeffs.iter().zip(x).map(|(&a, &v)| a * v).sum();
                lhs <= scale * row.bound + T::CHECK_TOL
            })),
        }
    }
}

/// `x / scale` lies in the hull of the family iff it is dominated by a convex
/// combination of maximal sets (the family is downward closed). Solved as
/// `max sum z` with `z <= x / scale`, `z_i <= sum_{k: i in M_k} lambda_k`,
/// `sum lambda <= 1`.
fn explicit_membership<T: Scalar>(maximal: &[Vec<usize>], x: &[T], scale: T) -> Result<bool> {
    let n = x.len();
    if n > EXPLICIT_MEMBERSHIP_LIMIT {
        return Err(Error::GuardExceeded {
            what: "explicit-family hull membership",
            size: n as f64,
            limit: EXPLICIT_MEMBERSHIP_LIMIT as f64,
        });
    }
    if scale <= T::zero() {
        return Ok(x.iter().all(|&v| v <= T::CHECK_TOL));
    }
    let target: Vec<T> = x.iter().map(|&v| (v / scale).max(T::zero())).collect();
    if target.iter().any(|&v| v > T::one() + T::CHECK_TOL) {
        return Ok(false);
    }
    let m = maximal.len();
    let mut lp = LinearProgram::new(n + m);
    for i in 0..n {
        lp.objective[i] = T::one();
        lp.upper[i] = target[i].min(T::one());
        let mut row = vec![T::zero(); n + m];
        row[i] = T::one();
        for (k, set) in maximal.iter().enumerate() {
            if set.contains(&i) {
                row[n + k] = -T::one();
            }
        }
        lp.add_row(row, T::zero(), format!("cover {}", i + 1));
    }
    let mut convex = vec![T::zero(); n + m];
    convex[n..].iter_mut().for_each(|c| *c = T::one());
    lp.add_row(convex, T::one(), "convexity");
    let sol = lp.solve()?;
    let want: T = target.iter().map(|&v| v.min(T::one())).sum();
    Ok(sol.objective >= want - T::CHECK_TOL * T::of_usize(n.max(1)))
}
