//! Wealth profiles on the closed simplex `q.W = 1, W >= 0` and the ratio
//! chart `z_i = log(W_i / W_r)` of a support face.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::problem::{CountVector, SupportSet};
use crate::rational::{self, to_f64};

/// Float-mode zero threshold, scaled by `1/q_i`.
pub const ZERO_TOL: f64 = 1e-12;
/// Ratio coordinates are clamped to this magnitude before exponentiation.
pub const Z_CLAMP: f64 = 700.0;

/// A point of the closed wealth simplex. The exact coordinates are present
/// whenever the point is known in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthProfile {
    values: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl WealthProfile {
    pub fn new(values: Vec<f64>) -> Self {
        WealthProfile {
            values,
            exact: None,
        }
    }

    pub fn exact(values: Vec<BigRational>) -> Self {
        WealthProfile {
            values: values.iter().map(to_f64).collect(),
            exact: Some(values),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exact_values(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// `q.W`.
    pub fn budget(&self, q: &[f64]) -> f64 {
        self.values.iter().zip(q).map(|(w, q)| w * q).sum()
    }

    pub fn distance_inf(&self, other: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Coordinates as strings: exact `a/b` when available.
    pub fn to_strings(&self) -> Vec<String> {
        match &self.exact {
            Some(ex) => ex.iter().map(rational::format).collect(),
            None => self.values.iter().map(|v| v.to_string()).collect(),
        }
    }
}

impl fmt::Display for WealthProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.to_strings().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match &self.exact {
                Some(_) => write!(f, "{s}")?,
                None => write!(f, "{:.6}", self.values[i])?,
            }
        }
        write!(f, ")")
    }
}

impl Serialize for WealthProfile {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

/// A point of a support face in ratio coordinates. `z[j]` belongs to
/// `support.free()[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    pub support: SupportSet,
    pub z: Vec<f64>,
}

pub fn support_of(w: &WealthProfile, q: &[f64]) -> SupportSet {
    let idx: Vec<usize> = match &w.exact {
        Some(ex) => (0..ex.len()).filter(|&i| !ex[i].is_zero()).collect(),
        None => (0..w.values.len())
            .filter(|&i| w.values[i] >= ZERO_TOL / q[i])
            .collect(),
    };
    SupportSet::new(idx).expect("a feasible profile has a positive coordinate")
}

/// `W^k` with `0^0 = 1`.
pub fn monomial_value(w: &WealthProfile, k: &CountVector) -> f64 {
    let lv = log_monomial(w.values(), k);
    if lv == f64::NEG_INFINITY {
        0.0
    } else {
        lv.exp()
    }
}

pub fn monomial_value_exact(w: &[BigRational], k: &CountVector) -> BigRational {
    let mut v = BigRational::one();
    for (wi, &ki) in w.iter().zip(k.as_slice()) {
        if ki > 0 {
            v *= rational::pow(wi, ki as i64);
        }
    }
    v
}

/// `log W^k`; `-inf` when a zero coordinate carries a positive exponent.
pub fn log_monomial(w: &[f64], k: &CountVector) -> f64 {
    let mut acc = 0.0;
    for (&wi, &ki) in w.iter().zip(k.as_slice()) {
        if ki == 0 {
            continue;
        }
        if wi <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += ki as f64 * wi.ln();
    }
    acc
}

pub fn to_ratio(w: &WealthProfile, q: &[f64]) -> RatioPoint {
    let support = support_of(w, q);
    let r = support.anchor();
    let z = support
        .free()
        .iter()
        .map(|&i| (w.values[i] / w.values[r]).ln())
        .collect();
    RatioPoint { support, z }
}

pub fn from_ratio(zp: &RatioPoint, q: &[f64]) -> WealthProfile {
    let m = q.len();
    let s = &zp.support;
    let z: Vec<f64> = zp.z.iter().map(|v| v.clamp(-Z_CLAMP, Z_CLAMP)).collect();
    // Shift by the largest exponent so nothing overflows.
    let shift = z.iter().fold(0.0f64, |a, &b| a.max(b));
    let r = s.anchor();
    let mut denom = q[r] * (-shift).exp();
    for (&i, &zi) in s.free().iter().zip(&z) {
        denom += q[i] * (zi - shift).exp();
    }
    let mut w = vec![0.0; m];
    w[r] = (-shift).exp() / denom;
    for (&i, &zi) in s.free().iter().zip(&z) {
        w[i] = (zi - shift).exp() / denom;
    }
    WealthProfile::new(w)
}

/// Exact inverse chart for rational ratios `rho_i = W_i / W_r`.
pub fn from_ratios_exact(s: &SupportSet, rho: &[BigRational], q: &[BigRational]) -> WealthProfile {
    let r = s.anchor();
    let mut denom = q[r].clone();
    for (&i, ri) in s.free().iter().zip(rho) {
        denom += &q[i] * ri;
    }
    let wr = denom.recip();
    let mut w = vec![BigRational::zero(); q.len()];
    for (&i, ri) in s.free().iter().zip(rho) {
        w[i] = ri * &wr;
    }
    w[r] = wr;
    WealthProfile::exact(w)
}

pub fn budget_residual(w: &WealthProfile, q: &[f64]) -> f64 {
    w.budget(q) - 1.0
}

pub fn budget_residual_exact(w: &[BigRational], q: &[BigRational]) -> BigRational {
    w.iter().zip(q).map(|(a, b)| a * b).sum::<BigRational>() - BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational as pr;

    fn ex(xs: &[&str]) -> WealthProfile {
        WealthProfile::exact(xs.iter().map(|s| pr(s).unwrap()).collect())
    }

    #[test]
    fn supports() {
        let q3 = [1.0 / 3.0; 3];
        assert_eq!(support_of(&ex(&["3/2", "3/2", "0"]), &q3).indices(), &[0, 1]);
        assert_eq!(support_of(&WealthProfile::new(vec![1.8, 0.9, 0.3]), &q3).indices(), &[0, 1, 2]);
        assert_eq!(support_of(&WealthProfile::new(vec![0.0, 0.0, 3.0]), &q3).indices(), &[2]);
        assert_eq!(support_of(&WealthProfile::new(vec![1e-14, 1.0]), &[1.0, 1.0]).indices(), &[1]);
    }

    #[test]
    fn monomials() {
        let k = |v: &[u32]| CountVector::new(v.to_vec());
        let w = ex(&["2/3", "1/3"]);
        assert_eq!(monomial_value_exact(w.exact_values().unwrap(), &k(&[2, 1])), pr("4/27").unwrap());
        assert!((monomial_value(&w, &k(&[2, 1])) - 4.0 / 27.0).abs() < 1e-15);
        let t = ex(&["3/2", "3/2", "0"]);
        assert_eq!(monomial_value_exact(t.exact_values().unwrap(), &k(&[1, 1, 0])), pr("9/4").unwrap());
        assert_eq!(monomial_value(&t, &k(&[1, 0, 1])), 0.0);
        assert_eq!(monomial_value(&t, &k(&[0, 0, 0])), 1.0);
    }

    #[test]
    fn chart_examples() {
        let q3 = [1.0 / 3.0; 3];
        let z = to_ratio(&WealthProfile::new(vec![1.8, 0.9, 0.3]), &q3);
        assert!((z.z[0] - 0.5f64.ln()).abs() < 1e-15);
        assert!((z.z[1] - (1.0f64 / 6.0).ln()).abs() < 1e-15);
        let back = from_ratio(&z, &q3);
        assert!(back.distance_inf(&[1.8, 0.9, 0.3]) < 1e-12);

        let s12 = SupportSet::new(vec![0, 1]).unwrap();
        let w = from_ratio(&RatioPoint { support: s12.clone(), z: vec![0.0] }, &q3);
        assert!(w.distance_inf(&[1.5, 1.5, 0.0]) < 1e-12);
        let w = from_ratio(&RatioPoint { support: s12, z: vec![0.0] }, &[1.0, 1.0]);
        assert!(w.distance_inf(&[0.5, 0.5]) < 1e-15);
    }

    #[test]
    fn budgets() {
        assert_eq!(budget_residual(&WealthProfile::new(vec![1.0, 1.0]), &[1.0, 1.0]), 1.0);
        let q = vec![pr("1/3").unwrap(); 3];
        let w = ex(&["1.8", "0.9", "0.3"]);
        assert!(budget_residual_exact(w.exact_values().unwrap(), &q).is_zero());
        assert!(budget_residual(&ex(&["2/3", "1/3"]), &[1.0, 1.0]).abs() < 1e-15);
    }

    #[test]
    fn extreme_ratios_do_not_overflow() {
        let s = SupportSet::full(3);
        let w = from_ratio(&RatioPoint { support: s, z: vec![900.0, -900.0] }, &[1.0, 1.0, 1.0]);
        assert!(w.values().iter().all(|v| v.is_finite()));
        assert!((w.budget(&[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-12);
    }
}
