//! Exact phase-1 simplex for bounded feasibility problems.
//!
//! Finds `y` with `A y = b` and `0 <= y <= upper`, or proves none exists. Dense
//! tableau over exact rationals, Bland's rule for both entering and leaving
//! variables, so the method terminates without cycling and the verdict carries no
//! tolerance.

use crate::rational::Rational;

/// Dense tableau. Columns are laid out as `[y (m) | bound slacks (m) | artificials (r) | rhs]`.
struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Reduced costs of the phase-1 objective; the last entry is minus the objective value.
    obj: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.obj.len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let f = r[col].clone();
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &(&f * pv);
                }
            }
        }
        if !self.obj[col].is_zero() {
            let f = self.obj[col].clone();
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &(&f * pv);
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs Bland's rule to optimality. Returns the number of pivots.
    fn solve(&mut self) -> usize {
        let rhs = self.rhs_col();
        let mut pivots = 0;
        loop {
            let Some(col) = (0..rhs).find(|&j| self.obj[j].is_negative()) else {
                return pivots;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, r) in self.rows.iter().enumerate() {
                if !r[col].is_positive() {
                    continue;
                }
                let ratio = &r[rhs] / &r[col];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            // Phase 1 is bounded below by zero, so an entering column always has a
            // positive entry.
            let (row, _) = best.expect("unbounded phase-1 problem");
            self.pivot(row, col);
            pivots += 1;
        }
    }
}

/// A point `y` with `a y = b`, `0 <= y <= upper`, or `None` if infeasible.
///
/// `a` is `r x m` with rows of equal length `m = upper.len()`.
pub fn feasible_point(
    a: &[Vec<Rational>],
    b: &[Rational],
    upper: &[Rational],
) -> Option<Vec<Rational>> {
    let r = a.len();
    let m = upper.len();
    assert_eq!(b.len(), r, "rhs length");
    assert!(
        a.iter().all(|row| row.len() == m),
        "ragged constraint matrix"
    );
    assert!(
        upper.iter().all(|v| !v.is_negative()),
        "negative upper bound"
    );

    let width = 2 * m + r + 1;
    let rhs = width - 1;
    let mut rows = Vec::with_capacity(r + m);
    for (i, (arow, bi)) in a.iter().zip(b).enumerate() {
        let flip = bi.is_negative();
        let mut row = vec![Rational::zero(); width];
        for (k, v) in arow.iter().enumerate() {
            row[k] = if flip { -v } else { v.clone() };
        }
        row[2 * m + i] = Rational::one();
        row[rhs] = bi.abs();
        rows.push(row);
    }
    for (k, ub) in upper.iter().enumerate() {
        let mut row = vec![Rational::zero(); width];
        row[k] = Rational::one();
        row[m + k] = Rational::one();
        row[rhs] = ub.clone();
        rows.push(row);
    }
    let mut basis: Vec<usize> = (0..r).map(|i| 2 * m + i).collect();
    basis.extend((0..m).map(|k| m + k));

    // Reduced costs for min sum(artificials) with the artificials basic.
    let mut obj = vec![Rational::zero(); width];
    for row in &rows[..r] {
        for (j, v) in row.iter().enumerate() {
            if (2 * m..2 * m + r).contains(&j) {
                continue;
            }
            obj[j] -= v;
        }
    }

    let mut t = Tableau { rows, obj, basis };
    t.solve();
    if !t.obj[rhs].is_zero() {
        return None;
    }
    let mut y = vec![Rational::zero(); m];
    for (row, &var) in t.basis.iter().enumerate() {
        if var < m {
            y[var] = t.rows[row][rhs].clone();
        }
    }
    Some(y)
}
