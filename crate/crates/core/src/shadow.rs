//! Closed-form maximizer of a count monomial on the closed simplex, and the
//! ordinary Kelly point.

use num_rational::BigRational;
use num_traits::Zero;

use crate::geometry::WealthProfile;
use crate::problem::CountVector;
use crate::rational::{self, int};

/// Shadow-Kelly data for one count vector.
#[derive(Debug, Clone)]
pub struct ShadowSolution {
    pub k: CountVector,
    pub point: WealthProfile,
    pub value: f64,
    pub exact_value: Option<BigRational>,
    /// The empirical law `k / n`.
    pub shadow_law: Vec<f64>,
}

/// `W_i = k_i / (n q_i)`.
pub fn shadow_point(k: &CountVector, n: u32, q: &[f64]) -> WealthProfile {
    WealthProfile::new(
        k.as_slice()
            .iter()
            .zip(q)
            .map(|(&ki, qi)| ki as f64 / (n as f64 * qi))
            .collect(),
    )
}

pub fn shadow_point_exact(k: &CountVector, n: u32, q: &[BigRational]) -> WealthProfile {
    WealthProfile::exact(
        k.as_slice()
            .iter()
            .zip(q)
            .map(|(&ki, qi)| int(ki as i64) / (int(n as i64) * qi))
            .collect(),
    )
}

/// `log prod_{k_i>0} (k_i/(n q_i))^{k_i}`.
pub fn log_shadow_value(k: &CountVector, n: u32, q: &[f64]) -> f64 {
    k.as_slice()
        .iter()
        .zip(q)
        .filter(|(&ki, _)| ki > 0)
        .map(|(&ki, qi)| ki as f64 * (ki as f64 / (n as f64 * qi)).ln())
        .sum()
}

/// Evaluated in log space, so large horizons do not underflow before the
/// final exponentiation.
pub fn shadow_value(k: &CountVector, n: u32, q: &[f64]) -> f64 {
    log_shadow_value(k, n, q).exp()
}

pub fn shadow_value_exact(k: &CountVector, n: u32, q: &[BigRational]) -> BigRational {
    let mut v = BigRational::from_integer(1.into());
    for (&ki, qi) in k.as_slice().iter().zip(q) {
        if ki > 0 {
            v *= rational::pow(&(int(ki as i64) / (int(n as i64) * qi)), ki as i64);
        }
    }
    v
}

pub fn shadow_solution(k: &CountVector, n: u32, q: &[f64], q_exact: Option<&[BigRational]>) -> ShadowSolution {
    let point = match q_exact {
        Some(qe) => shadow_point_exact(k, n, qe),
        None => shadow_point(k, n, q),
    };
    ShadowSolution {
        k: k.clone(),
        point,
        value: shadow_value(k, n, q),
        exact_value: q_exact.map(|qe| shadow_value_exact(k, n, qe)),
        shadow_law: k.as_slice().iter().map(|&ki| ki as f64 / n as f64).collect(),
    }
}

/// `W^K_i = p_i / q_i`.
pub fn kelly_point(p: &[f64], q: &[f64]) -> WealthProfile {
    WealthProfile::new(p.iter().zip(q).map(|(a, b)| a / b).collect())
}

pub fn kelly_point_exact(p: &[BigRational], q: &[BigRational]) -> WealthProfile {
    WealthProfile::exact(p.iter().zip(q).map(|(a, b)| a / b).collect())
}

/// `L* = sum p_i log(p_i / q_i)`.
pub fn kelly_value(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| !pi.is_zero())
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational as pr;

    fn k(v: &[u32]) -> CountVector {
        CountVector::new(v.to_vec())
    }

    #[test]
    fn closed_forms() {
        let q1 = vec![pr("1").unwrap(); 2];
        let q3 = vec![pr("1/3").unwrap(); 3];
        assert_eq!(shadow_point_exact(&k(&[2, 1]), 3, &q1).to_strings(), ["2/3", "1/3"]);
        assert_eq!(shadow_point_exact(&k(&[1, 1, 0]), 2, &q3).to_strings(), ["3/2", "3/2", "0"]);
        assert_eq!(shadow_point(&k(&[3, 0]), 3, &[0.5, 2.0]).values(), &[2.0, 0.0]);
        assert_eq!(shadow_value_exact(&k(&[2, 1]), 3, &q1), pr("4/27").unwrap());
        assert_eq!(shadow_value_exact(&k(&[1, 1, 0]), 2, &q3), pr("9/4").unwrap());
        assert_eq!(shadow_value(&k(&[3, 0]), 3, &[1.0, 1.0]), 1.0);
    }

    #[test]
    fn kelly() {
        let p = [pr("0.6").unwrap(), pr("0.3").unwrap(), pr("0.1").unwrap()];
        let q = vec![pr("1/3").unwrap(); 3];
        assert_eq!(kelly_point_exact(&p, &q).to_strings(), ["9/5", "9/10", "3/10"]);
        assert_eq!(kelly_point(&[0.6, 0.4], &[1.0, 1.0]).values(), &[0.6, 0.4]);
        let l = 0.6 * 0.6f64.ln() + 0.4 * 0.4f64.ln();
        assert!((kelly_value(&[0.6, 0.4], &[1.0, 1.0]) - l).abs() < 1e-15);
        assert!((l + 0.67301).abs() < 1e-5);
    }
}
