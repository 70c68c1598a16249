//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Solves `maximize c·x` subject to `A_eq x = b_eq`, `A_ge x ≥ b_ge`,
//! `x ≥ 0`, where every right-hand side is nonnegative. Only used for the
//! small constraint systems of the hidden-variable audit (tens of rows at
//! most), so no attempt is made at sparsity or numerical tricks.

use num_traits::{One, Signed, Zero};

use super::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowKind {
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<Rational>,
    pub kind: RowKind,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    /// Multipliers `y` (one per row) with `y·A_j ≤ 0` for every column,
    /// `y_i ≥ 0` on `Ge` rows, and `y·b > 0`.
    Infeasible {
        farkas: Vec<Rational>,
    },
    Optimal {
        x: Vec<Rational>,
        value: Rational,
    },
    Unbounded,
}

struct Tableau {
    /// `m` rows of `[structural | surplus | artificial | rhs]`.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    n: usize,
    surplus: usize,
    /// Number of artificial columns; fixed even after redundant rows go.
    arts: usize,
    m: usize,
}

impl Tableau {
    fn art(&self, r: usize) -> usize {
        self.n + self.surplus + r
    }

    fn width(&self) -> usize {
        self.n + self.surplus + self.arts
    }

    fn rhs(&self, i: usize) -> &Rational {
        &self.t[i][self.width()]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let f = r[col];
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost·x` over columns where `allowed(j)`; Bland's rule
    /// prevents cycling. Returns false when unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: impl Fn(usize) -> bool) -> bool {
        loop {
            let mut entering = None;
            for j in 0..self.width() {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    rc -= cost[b] * self.t[i][j];
                }
                if rc.is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return true };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                let a = self.t[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = *self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((i, _)) => self.pivot(i, j),
                None => return false,
            }
        }
    }

    fn objective(&self, cost: &[Rational]) -> Rational {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rhs(i))
            .fold(Rational::zero(), |a, b| a + b)
    }
}

/// Solves the program. `objective` of `None` means a pure feasibility check.
pub(crate) fn solve(n: usize, rows: &[Row], objective: Option<&[Rational]>) -> LpOutcome {
    let m = rows.len();
    let surplus_of: Vec<Option<usize>> = {
        let mut k = 0;
        rows.iter()
            .map(|r| {
                (r.kind == RowKind::Ge).then(|| {
                    k += 1;
                    k - 1
                })
            })
            .collect()
    };
    let surplus = surplus_of.iter().flatten().count();
    let width = n + surplus + m;
    let mut t = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.coeffs.len(), n);
        assert!(!row.rhs.is_negative(), "right-hand sides must be nonnegative");
        let mut r = vec![Rational::zero(); width + 1];
        r[..n].copy_from_slice(&row.coeffs);
        if let Some(s) = surplus_of[i] {
            r[n + s] = -Rational::one();
        }
        r[n + surplus + i] = Rational::one();
        r[width] = row.rhs;
        t.push(r);
    }
    let mut tab = Tableau {
        t,
        basis: (0..m).map(|i| n + surplus + i).collect(),
        n,
        surplus,
        arts: m,
        m,
    };

    // phase 1: maximize -Σ artificials
    let mut phase1 = vec![Rational::zero(); width];
    for i in 0..m {
        phase1[tab.art(i)] = -Rational::one();
    }
    tab.optimize(&phase1, |_| true);
    if tab.objective(&phase1).is_negative() {
        // y = c_B B^{-1}; B^{-1} sits in the artificial columns.
        let farkas = (0..m)
            .map(|r| {
                let col = tab.art(r);
                let y = tab
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| phase1[b] * tab.t[i][col])
                    .fold(Rational::zero(), |a, b| a + b);
                -y
            })
            .collect();
        return LpOutcome::Infeasible { farkas };
    }

    // drive zero-level artificials out of the basis, dropping redundant rows
    let first_art = n + surplus;
    let mut i = 0;
    while i < tab.m {
        if tab.basis[i] >= first_art {
            match (0..first_art).find(|&j| !tab.t[i][j].is_zero()) {
                Some(j) => {
                    tab.pivot(i, j);
                    i += 1;
                }
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    tab.m -= 1;
                }
            }
        } else {
            i += 1;
        }
    }

    let mut cost = vec![Rational::zero(); width];
    if let Some(c) = objective {
        cost[..n].copy_from_slice(c);
    }
    if !tab.optimize(&cost, |j| j < first_art) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = *tab.rhs(i);
        }
    }
    let value = tab.objective(&cost);
    LpOutcome::Optimal { x, value }
}
