//! Rows of the time-indexed relaxation and the per-step direction program.
//!
//! Variable `x(i, t)` means item `i` starts at slot `t`, for
//! `t in 1..=C - c_i(B)`. Rows are the per-item caps, the outer polytope
//! rows lifted through the item marginals, and one truncated-expected-cost
//! row per slot `t in 1..=C`:
//! `sum_i E[min{c_i, t}] * sum_{t' <= t} x(i, t') <= 2t`.

use std::ops::Range;

use crate::model::Instance;
use crate::simplex::{LinearProgram, LpSolution, Row};
use crate::{Result, Scalar};

/// Which constraint family a row belongs to. Items are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Item(usize),
    Outer(usize),
    Budget(u32),
}

/// A slot variable: 0-based item, 1-based slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotVar {
    pub item: usize,
    pub slot: u32,
}

/// Variable layout and rows of the relaxation for one instance.
#[derive(Debug, Clone)]
pub struct P1Layout<T> {
    pub vars: Vec<SlotVar>,
    /// Variable range of each item; empty for unschedulable items.
    pub item_vars: Vec<Range<usize>>,
    pub rows: Vec<Row<T>>,
    pub kinds: Vec<RowKind>,
}

impl<T: Scalar> P1Layout<T> {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// The direction program maximizing `sum_i weights[i] * sum_t v(i, t)`.
    pub fn program(&self, weights: &[T]) -> LinearProgram<T> {
        let mut lp = LinearProgram::new(self.num_vars());
        for (i, range) in self.item_vars.iter().enumerate() {
            range.clone().for_each(|j| lp.objective[j] = weights[i]);
        }
        lp.rows = self.rows.clone();
        lp
    }

    /// Row left-hand sides at `x`.
    pub fn row_values(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().zip(x).map(|(&a, &v)| a * v).sum())
            .collect()
    }

    /// Item marginals `sum_t x(i, t)`.
    pub fn marginals(&self, x: &[T]) -> Vec<T> {
        self.item_vars
            .iter()
            .map(|r| x[r.clone()].iter().copied().sum())
            .collect()
    }
}

/// Builds the relaxation rows; refuses outer families without a compact
/// polytope.
pub fn build_p1_rows<T: Scalar>(instance: &Instance<T>) -> Result<P1Layout<T>> {
    let outer_rows = instance.outer.polytope_inequalities::<T>(instance.n)?;
    let budget = instance.budget;

    let mut vars = Vec::new();
    let mut item_vars = Vec::with_capacity(instance.n);
    for (i, item) in instance.items.iter().enumerate() {
        let start = vars.len();
        vars.extend((1..=item.slot_count(budget)).map(|slot| SlotVar { item: i, slot }));
        item_vars.push(start..vars.len());
    }
    let nv = vars.len();

    let mut rows = Vec::new();
    let mut kinds = Vec::new();
    for (i, range) in item_vars.iter().enumerate() {
        let mut coeffs = vec![T::zero(); nv];
        range.clone().for_each(|j| coeffs[j] = T::one());
        rows.push(Row {
            coeffs,
            bound: T::one(),
            label: format!("item {}", i + 1),
        });
        kinds.push(RowKind::Item(i));
    }
    for (k, ineq) in outer_rows.iter().enumerate() {
        let mut coeffs = vec![T::zero(); nv];
        for (i, range) in item_vars.iter().enumerate() {
            range.clone().for_each(|j| coeffs[j] = ineq.coeffs[i]);
        }
        rows.push(Row {
            coeffs,
            bound: ineq.bound,
            label: format!("outer {}", k + 1),
        });
        kinds.push(RowKind::Outer(k));
    }
    for t in 1..=budget {
        let mut coeffs = vec![T::zero(); nv];
        for (j, var) in vars.iter().enumerate() {
            if var.slot <= t {
                coeffs[j] = instance.items[var.item].expected_truncated_cost(t);
            }
        }
        rows.push(Row {
            coeffs,
            bound: T::of(2.0 * f64::from(t)),
            label: format!("budget t={t}"),
        });
        kinds.push(RowKind::Budget(t));
    }
    Ok(P1Layout {
        vars,
        item_vars,
        rows,
        kinds,
    })
}

/// Solves the direction program for per-item weights.
pub fn solve_direction<T: Scalar>(layout: &P1Layout<T>, weights: &[T]) -> Result<LpSolution<T>> {
    layout.program(weights).solve()
}
