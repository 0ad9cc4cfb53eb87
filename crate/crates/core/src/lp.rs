//! Small dense exact-rational linear programming (two-phase simplex with
//! Bland's rule). Used for closure tests and certificates where a float
//! misclassification would change the stratification.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<BigRational>,
    pub relation: Relation,
    pub rhs: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { x: Vec<BigRational>, value: BigRational },
    Infeasible,
    Unbounded,
}

/// `minimize c.x` over the constraints; `free[j]` marks variables without a
/// sign restriction, the others are `x_j >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    nvars: usize,
    free: Vec<bool>,
    objective: Vec<BigRational>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(nvars: usize) -> Self {
        LinearProgram {
            nvars,
            free: vec![false; nvars],
            objective: vec![BigRational::zero(); nvars],
            constraints: Vec::new(),
        }
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    pub fn set_all_free(&mut self) {
        self.free.iter_mut().for_each(|f| *f = true);
    }

    pub fn set_objective(&mut self, c: Vec<BigRational>) {
        assert_eq!(c.len(), self.nvars);
        self.objective = c;
    }

    pub fn add(&mut self, coeffs: Vec<BigRational>, relation: Relation, rhs: BigRational) {
        assert_eq!(coeffs.len(), self.nvars);
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn feasible(&self) -> Option<Vec<BigRational>> {
        let mut lp = self.clone();
        lp.objective = vec![BigRational::zero(); self.nvars];
        match lp.solve() {
            LpResult::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn solve(&self) -> LpResult {
        // Column layout: split free variables, then one slack per inequality,
        // then one artificial per row.
        let mut col_of = Vec::with_capacity(self.nvars);
        let mut ncols = 0;
        for &f in &self.free {
            col_of.push(ncols);
            ncols += if f { 2 } else { 1 };
        }
        let nslack = self
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let first_slack = ncols;
        let first_art = first_slack + nslack;
        let nrows = self.constraints.len();
        let width = first_art + nrows;

        let zero = BigRational::zero();
        let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(nrows);
        let mut rhs: Vec<BigRational> = Vec::with_capacity(nrows);
        let mut slack = first_slack;
        for (i, c) in self.constraints.iter().enumerate() {
            let mut row = vec![zero.clone(); width];
            for (j, a) in c.coeffs.iter().enumerate() {
                row[col_of[j]] = a.clone();
                if self.free[j] {
                    row[col_of[j] + 1] = -a;
                }
            }
            match c.relation {
                Relation::Le => {
                    row[slack] = BigRational::from_integer(1.into());
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = BigRational::from_integer((-1).into());
                    slack += 1;
                }
                Relation::Eq => {}
            }
            let mut b = c.rhs.clone();
            if b.is_negative() {
                row.iter_mut().for_each(|v| *v = -&*v);
                b = -b;
            }
            row[first_art + i] = BigRational::from_integer(1.into());
            rows.push(row);
            rhs.push(b);
        }

        let mut t = Tableau {
            rows,
            rhs,
            basis: (first_art..width).collect(),
            width,
        };

        // Phase 1: minimize the sum of artificials.
        let mut phase1 = vec![zero.clone(); width];
        for c in phase1.iter_mut().skip(first_art) {
            *c = BigRational::from_integer(1.into());
        }
        if t.optimize(&phase1, width).is_err() {
            // Phase 1 is bounded below by zero.
            unreachable!("phase 1 objective is bounded");
        }
        let infeasibility: BigRational = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&b, _)| b >= first_art)
            .map(|(_, v)| v.clone())
            .sum();
        if infeasibility.is_positive() {
            return LpResult::Infeasible;
        }
        // Drive zero-level artificials out of the basis where possible.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= first_art {
                match (0..first_art).find(|&j| !t.rows[r][j].is_zero()) {
                    Some(j) => t.pivot(r, j),
                    None => {
                        t.rows.remove(r);
                        t.rhs.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }

        // Phase 2 over the non-artificial columns.
        let mut cost = vec![zero.clone(); width];
        for j in 0..self.nvars {
            cost[col_of[j]] = self.objective[j].clone();
            if self.free[j] {
                cost[col_of[j] + 1] = -&self.objective[j];
            }
        }
        if t.optimize(&cost, first_art).is_err() {
            return LpResult::Unbounded;
        }

        let mut value_of_col = vec![zero.clone(); width];
        for (r, &b) in t.basis.iter().enumerate() {
            value_of_col[b] = t.rhs[r].clone();
        }
        let x: Vec<BigRational> = (0..self.nvars)
            .map(|j| {
                let mut v = value_of_col[col_of[j]].clone();
                if self.free[j] {
                    v -= &value_of_col[col_of[j] + 1];
                }
                v
            })
            .collect();
        let value = x
            .iter()
            .zip(&self.objective)
            .map(|(a, b)| a * b)
            .sum();
        LpResult::Optimal { x, value }
    }
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Bland's rule over columns `< allowed`. `Err` means unbounded.
    fn optimize(&mut self, cost: &[BigRational], allowed: usize) -> Result<(), ()> {
        loop {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut reduced = cost[j].clone();
                for (r, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.rows[r][j].is_zero() {
                        reduced -= &cost[b] * &self.rows[r][j];
                    }
                }
                reduced.is_negative()
            });
            let Some(c) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, BigRational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &best {
                    None => true,
                    Some((br, bv)) => {
                        ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(()),
            }
            debug_assert!(self.basis.iter().all(|&b| b < self.width));
        }
    }
}
