//! Restricted families of wealth profiles: halfspaces `a.W <= b` on top of
//! the budget simplex.
//!
//! On a stratum with upper set `A` (counts ranked at or above the active
//! one), the quantile is bounded below by `min_{k in A} W^k` everywhere the
//! upper set has mass at least alpha. Maximizing that minimum of concave
//! log-monomials over `{W_S > 0, q.W = 1, family}` is a convex program,
//! solved here by a log-barrier method in `(W_S, t)`.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpResult, Relation};
use crate::problem::{CountVector, SupportSet};
use crate::rational::{from_f64, parse_rational, to_f64};

fn fr(v: f64) -> BigRational {
    from_f64(v).expect("finite family coefficient")
}

/// `a.W <= b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Halfspace {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Halfspace { a, b }
    }

    pub fn slack(&self, w: &[f64]) -> f64 {
        self.b - self.a.iter().zip(w).map(|(x, y)| x * y).sum::<f64>()
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        self.slack(w) >= -tol * (1.0 + self.b.abs())
    }
}

impl std::str::FromStr for Halfspace {
    type Err = Error;

    /// `"a1,...,am<=b"`; entries may be decimals or fractions.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Instance(crate::error::InstanceError::BadLiteral(text.to_string()));
        let (lhs, rhs) = text.split_once("<=").ok_or_else(bad)?;
        let num = |t: &str| parse_rational(t).map(|r| to_f64(&r)).map_err(|_| bad());
        let a = lhs.split(',').map(num).collect::<Result<Vec<f64>>>()?;
        Ok(Halfspace { a, b: num(rhs)? })
    }
}

impl std::fmt::Display for Halfspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a: Vec<String> = self.a.iter().map(|v| v.to_string()).collect();
        write!(f, "{}<={}", a.join(","), self.b)
    }
}

/// Exact check that `{W >= 0, q.W = 1, family}` is nonempty.
pub fn family_nonempty(q: &[f64], family: &[Halfspace]) -> bool {
    let m = q.len();
    let mut lp = LinearProgram::new(m);
    lp.add(q.iter().map(|&v| fr(v)).collect(), Relation::Eq, BigRational::one());
    for h in family {
        lp.add(h.a.iter().map(|&v| fr(v)).collect(), Relation::Le, fr(h.b));
    }
    lp.feasible().is_some()
}

#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    /// Full-length wealth profile, zero off the support.
    pub w: Vec<f64>,
    /// `min_{k in A} sum k_i log W_i` at `w`.
    pub log_value: f64,
    pub iterations: usize,
    /// Barrier duality gap bound at termination.
    pub gap: f64,
}

/// Strictly feasible start on support `s`: maximizes the common slack.
fn strict_start(s: &SupportSet, q: &[f64], family: &[Halfspace]) -> Option<Vec<f64>> {
    let d = s.len();
    // Variables: W_S (d), slack.
    let mut lp = LinearProgram::new(d + 1);
    let mut budget: Vec<BigRational> = s.indices().iter().map(|&i| fr(q[i])).collect();
    budget.push(BigRational::zero());
    lp.add(budget, Relation::Eq, BigRational::one());
    for pos in 0..d {
        let mut row = vec![BigRational::zero(); d + 1];
        row[pos] = BigRational::one();
        row[d] = -BigRational::one();
        lp.add(row, Relation::Ge, BigRational::zero());
    }
    for h in family {
        let mut row: Vec<BigRational> = s.indices().iter().map(|&i| fr(h.a[i])).collect();
        row.push(BigRational::one());
        lp.add(row, Relation::Le, fr(h.b));
    }
    let mut cap = vec![BigRational::zero(); d + 1];
    cap[d] = BigRational::one();
    lp.add(cap.clone(), Relation::Le, BigRational::one());
    lp.set_objective(cap.into_iter().map(|c| -c).collect());
    match lp.solve() {
        LpResult::Optimal { x, value } if to_f64(&value) < -1e-12 => {
            let mut w = vec![0.0; q.len()];
            for (pos, &i) in s.indices().iter().enumerate() {
                w[i] = to_f64(&x[pos]);
            }
            Some(w)
        }
        _ => None,
    }
}

struct Barrier<'a> {
    s: &'a SupportSet,
    upper: Vec<Vec<f64>>,
    family: Vec<(Vec<f64>, f64)>,
    /// Columns span `{x : q_S.x = 0}`.
    basis: DMatrix<f64>,
    w0: DVector<f64>,
}

impl Barrier<'_> {
    fn wealth(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.w0 + &self.basis * y
    }

    fn logs(&self, w: &DVector<f64>) -> Vec<f64> {
        self.upper
            .iter()
            .map(|k| k.iter().zip(w.iter()).filter(|(ki, _)| **ki > 0.0).map(|(ki, wi)| ki * wi.ln()).sum())
            .collect()
    }

    fn slacks(&self, w: &DVector<f64>) -> Vec<f64> {
        self.family
            .iter()
            .map(|(a, b)| b - a.iter().zip(w.iter()).map(|(x, y)| x * y).sum::<f64>())
            .collect()
    }

    fn feasible(&self, w: &DVector<f64>, t: f64) -> bool {
        w.iter().all(|v| *v > 0.0)
            && self.slacks(w).iter().all(|v| *v > 0.0)
            && self.logs(w).iter().all(|g| g - t > 0.0)
    }

    fn phi(&self, w: &DVector<f64>, t: f64, mu: f64) -> f64 {
        let mut acc = 0.0;
        for g in self.logs(w) {
            acc += (g - t).ln();
        }
        for sl in self.slacks(w) {
            acc += sl.ln();
        }
        for v in w.iter() {
            acc += v.ln();
        }
        t + mu * acc
    }

    /// Gradient and Hessian in `(y, t)`.
    fn derivatives(&self, w: &DVector<f64>, t: f64, mu: f64) -> (DVector<f64>, DMatrix<f64>) {
        let d = w.len();
        let mut gw = DVector::zeros(d);
        let mut hww = DMatrix::zeros(d, d);
        let mut hwt = DVector::zeros(d);
        let mut gt = 1.0;
        let mut htt = 0.0;
        for (k, g) in self.upper.iter().zip(self.logs(w)) {
            let gap = g - t;
            let grad = DVector::from_iterator(d, k.iter().zip(w.iter()).map(|(ki, wi)| ki / wi));
            gw += &grad * (mu / gap);
            for i in 0..d {
                hww[(i, i)] -= mu * k[i] / (w[i] * w[i]) / gap;
            }
            hww -= &grad * grad.transpose() * (mu / (gap * gap));
            hwt += &grad * (mu / (gap * gap));
            gt -= mu / gap;
            htt -= mu / (gap * gap);
        }
        for ((a, _), sl) in self.family.iter().zip(self.slacks(w)) {
            let av = DVector::from_column_slice(a);
            gw -= &av * (mu / sl);
            hww -= &av * av.transpose() * (mu / (sl * sl));
        }
        for i in 0..d {
            gw[i] += mu / w[i];
            hww[(i, i)] -= mu / (w[i] * w[i]);
        }
        let r = self.basis.ncols();
        let mut g = DVector::zeros(r + 1);
        g.rows_mut(0, r).copy_from(&(self.basis.transpose() * &gw));
        g[r] = gt;
        let mut h = DMatrix::zeros(r + 1, r + 1);
        h.view_mut((0, 0), (r, r))
            .copy_from(&(self.basis.transpose() * &hww * &self.basis));
        let cross = self.basis.transpose() * &hwt;
        h.view_mut((0, r), (r, 1)).copy_from(&cross);
        h.view_mut((r, 0), (1, r)).copy_from(&cross.transpose());
        h[(r, r)] = htt;
        (g, h)
    }
}

const MU_START: f64 = 1.0;
const MU_END: f64 = 1e-11;
const INNER_CAP: usize = 500;

/// Maximizes `min_{k in upper} sum k_i log W_i` over the relative interior of
/// face `s` of the budget simplex intersected with `family`. `None` when that
/// set is empty.
pub fn relaxed_max(
    upper: &[CountVector],
    s: &SupportSet,
    q: &[f64],
    family: &[Halfspace],
) -> Result<Option<RelaxedSolution>> {
    if upper.is_empty() {
        return Err(Error::Internal("empty upper set".into()));
    }
    let Some(start) = strict_start(s, q, family) else {
        return Ok(None);
    };
    let idx = s.indices();
    let d = idx.len();
    let r = idx[0];
    let mut basis = DMatrix::zeros(d, d - 1);
    for (col, &i) in idx[1..].iter().enumerate() {
        basis[(col + 1, col)] = 1.0;
        basis[(0, col)] = -q[i] / q[r];
    }
    let bar = Barrier {
        s,
        upper: upper
            .iter()
            .map(|k| idx.iter().map(|&i| k.get(i) as f64).collect())
            .collect(),
        family: family
            .iter()
            .map(|h| {
                let norm = h.a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
                (idx.iter().map(|&i| h.a[i] / norm).collect(), h.b / norm)
            })
            .collect(),
        basis,
        w0: DVector::from_iterator(d, idx.iter().map(|&i| start[i])),
    };
    let mut y = DVector::zeros(d - 1);
    let w = bar.wealth(&y);
    let mut t = bar.logs(&w).into_iter().fold(f64::INFINITY, f64::min) - 1.0;
    let terms = (bar.upper.len() + bar.family.len() + d) as f64;
    let mut mu = MU_START;
    let mut iterations = 0;
    loop {
        for inner in 0.. {
            if inner == INNER_CAP {
                return Err(Error::IterationCap {
                    iterations,
                    residual: mu,
                });
            }
            let w = bar.wealth(&y);
            let (g, h) = bar.derivatives(&w, t, mu);
            let neg = -h;
            let step = match neg.clone().cholesky() {
                Some(ch) => ch.solve(&g),
                None => {
                    let reg = neg + DMatrix::identity(d, d) * 1e-12;
                    reg.cholesky().map(|ch| ch.solve(&g)).unwrap_or_else(|| g.clone())
                }
            };
            let decrement = g.dot(&step);
            let f = bar.phi(&w, t, mu);
            // Past float resolution of phi, or centred well enough for this mu.
            if decrement <= 1e-10 * mu || decrement <= 1e-15 * (1.0 + f.abs()) {
                break;
            }
            iterations += 1;
            let quadratic = decrement <= 1e-13 * (1.0 + f.abs());
            let mut a = 1.0;
            let mut moved = false;
            loop {
                let yn = &y + step.rows(0, d - 1) * a;
                let tn = t + step[d - 1] * a;
                let wn = bar.wealth(&yn);
                if bar.feasible(&wn, tn) && (quadratic || bar.phi(&wn, tn, mu) >= f + 1e-4 * a * decrement) {
                    moved = yn != y || tn != t;
                    y = yn;
                    t = tn;
                    break;
                }
                a *= 0.5;
                if a < 1e-16 {
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        if mu <= MU_END {
            break;
        }
        mu *= 0.1;
    }
    let w = bar.wealth(&y);
    let log_value = bar.logs(&w).into_iter().fold(f64::INFINITY, f64::min);
    let mut full = vec![0.0; q.len()];
    for (pos, &i) in bar.s.indices().iter().enumerate() {
        full[i] = w[pos];
    }
    Ok(Some(RelaxedSolution {
        w: full,
        log_value,
        iterations,
        gap: mu * terms,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: &[u32]) -> CountVector {
        CountVector::new(v.to_vec())
    }

    #[test]
    fn unconstrained_matches_shadow_point() {
        let s = SupportSet::full(2);
        let sol = relaxed_max(&[k(&[2, 1])], &s, &[1.0, 1.0], &[]).unwrap().unwrap();
        assert!((sol.w[0] - 2.0 / 3.0).abs() < 1e-8, "{:?}", sol.w);
        assert!((sol.log_value - (4.0f64 / 27.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn min_of_two_monomials_meets_at_the_wall() {
        // min(W1^2 W2, W1 W2^2) on W1 + W2 = 1 peaks at W1 = W2.
        let s = SupportSet::full(2);
        let sol = relaxed_max(&[k(&[2, 1]), k(&[1, 2])], &s, &[1.0, 1.0], &[]).unwrap().unwrap();
        assert!((sol.w[0] - 0.5).abs() < 1e-6, "{:?}", sol.w);
        assert!((sol.log_value - 0.125f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn halfspace_binds() {
        let s = SupportSet::full(2);
        let fam = [Halfspace::new(vec![1.0, 0.0], 0.55)];
        let sol = relaxed_max(&[k(&[2, 1])], &s, &[1.0, 1.0], &fam).unwrap().unwrap();
        assert!((sol.w[0] - 0.55).abs() < 1e-8, "{:?}", sol.w);
        let exact = 2.0 * 0.55f64.ln() + 0.45f64.ln();
        assert!((sol.log_value - exact).abs() < 1e-9);
    }

    #[test]
    fn parse_halfspace() {
        let h: Halfspace = "1, 1/2 <= 0.75".parse().unwrap();
        assert_eq!(h, Halfspace::new(vec![1.0, 0.5], 0.75));
        assert!("1,2".parse::<Halfspace>().is_err());
        assert!("1,x<=2".parse::<Halfspace>().is_err());
    }

    #[test]
    fn empty_face_and_family() {
        let s = SupportSet::full(2);
        let fam = [Halfspace::new(vec![-1.0, 0.0], -1.0)];
        assert!(relaxed_max(&[k(&[2, 1])], &s, &[1.0, 1.0], &fam).unwrap().is_none());
        assert!(family_nonempty(&[1.0, 1.0], &fam));
        let fam = [Halfspace::new(vec![-1.0, 0.0], -2.0)];
        assert!(!family_nonempty(&[1.0, 1.0], &fam));
    }
}
