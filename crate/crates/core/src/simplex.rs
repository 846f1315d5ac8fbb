//! Dense bounded-variable primal simplex.
//!
//! Solves `max c.x` subject to `A x <= b` and `0 <= x <= u` with `b >= 0`, so
//! the origin is a feasible starting vertex. Entering and leaving variables
//! follow Bland's least-index rule.

use std::fmt;

use crate::{Error, Result, Scalar};

const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub coeffs: Vec<T>,
    pub bound: T,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    /// Finite upper bound of each variable; lower bounds are 0.
    pub upper: Vec<T>,
    pub rows: Vec<Row<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub values: Vec<T>,
    pub objective: T,
    pub iterations: usize,
}

impl<T: Scalar> LinearProgram<T> {
    /// A program over `num_vars` variables in `[0, 1]` with zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![T::zero(); num_vars],
            upper: vec![T::one(); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<T>, bound: T, label: impl Into<String>) {
        self.rows.push(Row {
            coeffs,
            bound,
            label: label.into(),
        });
    }

    /// True when every constraint coefficient is nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.coeffs.iter().all(|&a| a >= T::zero()))
    }

    /// Largest violation of a row or box bound by `x`, zero when feasible.
    pub fn max_violation(&self, x: &[T]) -> T {
        let rows = self.rows.iter().map(|r| {
            let lhs: T = r.coeffs.iter().zip(x).map(|(&a, &v)| a * v).sum();
            lhs - r.bound
        });
        let boxes = x.iter().zip(&self.upper).map(|(&v, &u)| (v - u).max(-v));
        rows.chain(boxes).fold(T::zero(), T::max)
    }

    pub fn value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Weak-duality upper bound from row multipliers `y >= 0`:
    /// `y.b + sum_j u_j * max(0, c_j - (y^T A)_j)`.
    pub fn dual_bound(&self, y: &[T]) -> T {
        let mut reduced = self.objective.clone();
        for (row, &w) in self.rows.iter().zip(y) {
            for (r, &a) in reduced.iter_mut().zip(&row.coeffs) {
                *r = *r - w * a;
            }
        }
        let rows: T = self.rows.iter().zip(y).map(|(r, &w)| w * r.bound).sum();
        rows + reduced
            .iter()
            .zip(&self.upper)
            .map(|(&r, &u)| r.max(T::zero()) * u)
            .sum()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.num_vars();
        if self.upper.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.upper.len(),
            });
        }
        for r in &self.rows {
            if r.coeffs.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: r.coeffs.len(),
                });
            }
            if !(r.bound >= T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "row '{}' has negative bound; the origin must be feasible",
                    r.label
                )));
            }
        }
        if self
            .upper
            .iter()
            .any(|&u| !(u >= T::zero()) || !u.is_finite())
        {
            return Err(Error::InvalidInput(
                "variable upper bounds must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution<T>> {
        self.check_shape()?;
        Tableau::new(self).run(self)
    }
}

impl<T: Scalar> fmt::Display for LinearProgram<T> {
    /// One line per objective, row and bound block.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = |coeffs: &[T]| -> String {
            let parts: Vec<String> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != T::zero())
                .map(|(j, a)| format!("{a} x{j}"))
                .collect();
            if parts.is_empty() {
                "0".into()
            } else {
                parts.join(" + ")
            }
        };
        writeln!(f, "max: {}", terms(&self.objective))?;
        for r in &self.rows {
            writeln!(f, "{}: {} <= {}", r.label, terms(&r.coeffs), r.bound)?;
        }
        let ub: Vec<String> = self.upper.iter().map(ToString::to_string).collect();
        writeln!(f, "bounds: 0 <= x <= [{}]", ub.join(", "))
    }
}

struct Tableau<T> {
    m: usize,
    n: usize,
    /// `m x (n + m)` rows of `B^{-1} [A | I]`.
    a: Vec<Vec<T>>,
    /// Current values of basic variables.
    beta: Vec<T>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    /// Reduced costs `c_j - c_B B^{-1} A_j`.
    reduced: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> Tableau<T> {
    fn new(lp: &LinearProgram<T>) -> Self {
        let m = lp.rows.len();
        let n = lp.num_vars();
        let a = lp
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let mut line = row.coeffs.clone();
                line.extend((0..m).map(|k| if k == r { T::one() } else { T::zero() }));
                line
            })
            .collect();
        let mut upper = lp.upper.clone();
        upper.extend(std::iter::repeat_n(T::infinity(), m));
        let mut reduced = lp.objective.clone();
        reduced.extend(std::iter::repeat_n(T::zero(), m));
        let mut is_basic = vec![false; n + m];
        is_basic[n..].iter_mut().for_each(|b| *b = true);
        Self {
            m,
            n,
            a,
            beta: lp.rows.iter().map(|r| r.bound).collect(),
            basis: (n..n + m).collect(),
            is_basic,
            at_upper: vec![false; n + m],
            reduced,
            upper,
        }
    }

    fn entering(&self) -> Option<usize> {
        let eps = T::PIVOT_TOL;
        (0..self.n + self.m).find(|&j| {
            !self.is_basic[j]
                && ((self.reduced[j] > eps && !self.at_upper[j])
                    || (self.reduced[j] < -eps && self.at_upper[j]))
        })
    }

    fn run(mut self, lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
        let eps = T::PIVOT_TOL;
        let mut iterations = 0;
        while let Some(j) = self.entering() {
            iterations += 1;
            if iterations > MAX_ITERATIONS {
                return Err(Error::LpStall {
                    iterations,
                    detail: format!("still improving on variable {j}"),
                });
            }
            let dir = if self.at_upper[j] {
                -T::one()
            } else {
                T::one()
            };
            // Ratio test: (step, row, leaves_at_upper)
            let mut best: Option<(T, usize, bool)> = None;
            for r in 0..self.m {
                let rate = dir * self.a[r][j];
                let basic = self.basis[r];
                let limit = if rate > eps {
                    Some((self.beta[r].max(T::zero()) / rate, false))
                } else if rate < -eps && self.upper[basic].is_finite() {
                    Some((
                        (self.upper[basic] - self.beta[r]).max(T::zero()) / -rate,
                        true,
                    ))
                } else {
                    None
                };
                if let Some((step, to_upper)) = limit {
                    let better = match best {
                        None => true,
                        Some((s, br, _)) => {
                            step < s - eps || (step <= s + eps && basic < self.basis[br])
                        }
                    };
                    if better {
                        best = Some((step, r, to_upper));
                    }
                }
            }
            let flip = self.upper[j];
            match best {
                Some((step, r, to_upper)) if step < flip - eps || !flip.is_finite() => {
                    self.pivot(j, r, dir, step, to_upper);
                }
                _ if flip.is_finite() => self.bound_flip(j, dir, flip),
                _ => {
                    return Err(Error::LpStall {
                        iterations,
                        detail: format!("variable {j} is unbounded"),
                    })
                }
            }
        }
        self.finish(lp, iterations)
    }

    fn bound_flip(&mut self, j: usize, dir: T, step: T) {
        for r in 0..self.m {
            self.beta[r] = self.beta[r] - dir * step * self.a[r][j];
        }
        self.at_upper[j] = !self.at_upper[j];
    }

    fn pivot(&mut self, j: usize, r: usize, dir: T, step: T, leaves_at_upper: bool) {
        let start = if self.at_upper[j] {
            self.upper[j]
        } else {
            T::zero()
        };
        for k in 0..self.m {
            self.beta[k] = self.beta[k] - dir * step * self.a[k][j];
        }
        let leaving = self.basis[r];
        self.beta[r] = start + dir * step;

        let piv = self.a[r][j];
        self.a[r].iter_mut().for_each(|v| *v = *v / piv);
        let pivot_row = self.a[r].clone();
        for k in 0..self.m {
            if k == r {
                continue;
            }
            let factor = self.a[k][j];
            if factor != T::zero() {
                for (v, &p) in self.a[k].iter_mut().zip(&pivot_row) {
                    *v = *v - factor * p;
                }
            }
        }
        let dj = self.reduced[j];
        for (v, &p) in self.reduced.iter_mut().zip(&pivot_row) {
            *v = *v - dj * p;
        }

        self.basis[r] = j;
        self.is_basic[j] = true;
        self.at_upper[j] = false;
        self.is_basic[leaving] = false;
        self.at_upper[leaving] = leaves_at_upper;
    }

    fn finish(self, lp: &LinearProgram<T>, iterations: usize) -> Result<LpSolution<T>> {
        let mut x: Vec<T> = (0..self.n)
            .map(|j| {
                if self.at_upper[j] {
                    self.upper[j]
                } else {
                    T::zero()
                }
            })
            .collect();
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.beta[r];
            }
        }
        for (v, &u) in x.iter_mut().zip(&lp.upper) {
            *v = v.max(T::zero()).min(u);
        }
        let scale = lp.rows.iter().map(|r| r.bound).fold(T::one(), T::max);
        let violation = lp.max_violation(&x);
        if violation > T::CHECK_TOL * scale {
            return Err(Error::LpStall {
                iterations,
                detail: format!("final point violates constraints by {violation}"),
            });
        }
        Ok(LpSolution {
            objective: lp.value(&x),
            values: x,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.objective[0] = 1.0;
        lp.add_row(vec![1.0], 1.0, "cap");
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_bound_binds() {
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_row(vec![1.0, 1.0], 1.0, "card");
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!(lp.max_violation(&s.values) <= 1e-12);
    }

    #[test]
    fn classic_two_variable() {
        // max 3x + 2y, x + y <= 1.5, x + 3y <= 2, box [0,1]
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![3.0, 2.0];
        lp.add_row(vec![1.0, 1.0], 1.5, "a");
        lp.add_row(vec![1.0, 3.0], 2.0, "b");
        let s = lp.solve().unwrap();
        // row b binds: x = 1, y = 1/3
        assert!((s.objective - 11.0 / 3.0).abs() < 1e-12, "{s:?}");
        assert!((s.values[0] - 1.0).abs() < 1e-12 && (s.values[1] - 1.0 / 3.0).abs() < 1e-12);
        // multipliers (0, 2/3) leave reduced costs (7/3, 0): 4/3 + 7/3
        assert!((lp.dual_bound(&[0.0, 2.0 / 3.0]) - 11.0 / 3.0).abs() < 1e-12);
        assert!(lp.dual_bound(&[2.0, 0.0]) >= s.objective - 1e-12);
    }

    #[test]
    fn negative_objective_stays_at_zero() {
        let mut lp = LinearProgram::<f64>::new(3);
        lp.objective = vec![-1.0, 0.0, -2.0];
        lp.add_row(vec![1.0, 1.0, 1.0], 2.0, "r");
        let s = lp.solve().unwrap();
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn degenerate_rows() {
        // Zero bounds make every pivot degenerate; Bland must still terminate.
        let mut lp = LinearProgram::<f64>::new(4);
        lp.objective = vec![1.0, 1.0, 1.0, 1.0];
        lp.add_row(vec![1.0, -1.0, 0.0, 0.0], 0.0, "a");
        lp.add_row(vec![0.0, 1.0, -1.0, 0.0], 0.0, "b");
        lp.add_row(vec![0.0, 0.0, 1.0, -1.0], 0.0, "c");
        lp.add_row(vec![1.0, 1.0, 1.0, 1.0], 2.0, "d");
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9, "{s:?}");
        assert!(lp.max_violation(&s.values) < 1e-9);
    }

    #[test]
    fn rejects_negative_bound() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.add_row(vec![1.0], -1.0, "bad");
        assert!(lp.solve().is_err());
        let mut lp = LinearProgram::<f64>::new(2);
        lp.add_row(vec![1.0], 1.0, "short");
        assert!(matches!(lp.solve(), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn single_precision() {
        let mut lp = LinearProgram::<f32>::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_row(vec![1.0, 1.0], 1.0, "r");
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-5);
    }

    #[test]
    fn dump_lists_rows() {
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add_row(vec![1.0, 2.0], 3.0, "row0");
        let text = lp.to_string();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("row0: 1 x0 + 2 x1 <= 3"));
    }

    /// Brute-force LP oracle: enumerate vertices of small random programs by
    /// trying every basis is overkill here; a fine grid bounds the optimum
    /// from below and weak duality from the solver's own answer checks it.
    #[test]
    fn random_programs_against_grid() {
        use rand::Rng;
        let mut rng = crate::seed::stream(5, "lp-test", 0);
        for _ in 0..40 {
            let n = 3;
            let mut lp = LinearProgram::<f64>::new(n);
            lp.objective = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
            for k in 0..3 {
                let coeffs = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
                lp.add_row(coeffs, rng.random_range(0.2..2.0), format!("r{k}"));
            }
            let s = lp.solve().unwrap();
            assert!(lp.max_violation(&s.values) < 1e-9);
            let steps = 20;
            let mut best = f64::NEG_INFINITY;
            for a in 0..=steps {
                for b in 0..=steps {
                    for c in 0..=steps {
                        let x = [
                            a as f64 / steps as f64,
                            b as f64 / steps as f64,
                            c as f64 / steps as f64,
                        ];
                        if lp.max_violation(&x) <= 0.0 {
                            best = best.max(lp.value(&x));
                        }
                    }
                }
            }
            assert!(
                s.objective >= best - 1e-9,
                "{} < grid {}",
                s.objective,
                best
            );
        }
    }
}
