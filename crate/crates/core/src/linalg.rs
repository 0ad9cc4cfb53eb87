//! Exact row reduction over the rationals and small integer-vector helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(rows: &mut Vec<Vec<BigRational>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// Basis of `{x : A x = 0}` for integer rows `A` with `ncols` columns.
///
/// Basis vector `j` carries a 1 in the `j`-th non-pivot column and 0 in the
/// other non-pivot columns, so coordinates of `x` in this basis are just its
/// non-pivot entries.
pub fn nullspace(rows: &[Vec<i64>], ncols: usize) -> Nullspace {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| BigRational::from_integer(v.into())).collect())
        .collect();
    let pivots = rref(&mut m, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let basis = free
        .iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::from_integer(1.into());
            for (row, &pc) in m.iter().zip(&pivots) {
                v[pc] = -&row[f];
            }
            v
        })
        .collect();
    Nullspace { basis, free }
}

pub struct Nullspace {
    pub basis: Vec<Vec<BigRational>>,
    pub free: Vec<usize>,
}

impl Nullspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Basis as a `ncols x dim` float matrix (column-major friendly rows).
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.basis
            .iter()
            .map(|v| v.iter().map(crate::rational::to_f64).collect())
            .collect()
    }
}

pub fn rank(rows: &[Vec<i64>], ncols: usize) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| BigRational::from_integer(v.into())).collect())
        .collect();
    rref(&mut m, ncols).len()
}

/// Divides by the gcd and flips so the first nonzero entry is positive.
/// Returns the primitive vector and the signed factor `c` with `v = c * out`.
pub fn canonicalize(v: &[i64]) -> Option<(Vec<i64>, i64)> {
    let g = v.iter().fold(0i64, |acc, &x| acc.gcd(&x));
    if g == 0 {
        return None;
    }
    let first = *v.iter().find(|&&x| x != 0)?;
    let c = if first < 0 { -g } else { g };
    Some((v.iter().map(|&x| x / c).collect(), c))
}

/// Makes an integer vector primitive (gcd 1) keeping its direction.
pub fn primitive(v: &mut [BigInt]) {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && g != BigInt::from(1) {
        for x in v.iter_mut() {
            *x /= &g;
        }
    }
}

pub fn dot_i64_big(a: &[i64], b: &[BigInt]) -> BigInt {
    a.iter()
        .zip(b)
        .filter(|(x, _)| **x != 0)
        .map(|(&x, y)| y * x)
        .sum()
}

pub fn dot_i64_rat(a: &[i64], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .filter(|(x, _)| **x != 0)
        .map(|(&x, y)| y * BigRational::from_integer(x.into()))
        .sum()
}

pub fn dot_i64_f64(a: &[i64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, y)| x as f64 * y).sum()
}

pub fn sign_of(x: &BigInt) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_plane() {
        let ns = nullspace(&[vec![1, 1, -2]], 3);
        assert_eq!(ns.dim(), 2);
        assert_eq!(ns.free, vec![1, 2]);
        for v in &ns.basis {
            let s: BigRational = v[0].clone() + v[1].clone() - v[2].clone() * BigRational::from_integer(2.into());
            assert!(s.is_zero());
        }
        assert_eq!(rank(&[vec![1, 2], vec![2, 4]], 2), 1);
        assert_eq!(nullspace(&[vec![1, 0], vec![0, 1]], 2).dim(), 0);
    }

    #[test]
    fn canonical_form() {
        assert_eq!(canonicalize(&[-2, 4]), Some((vec![1, -2], -2)));
        assert_eq!(canonicalize(&[0, 3, 6]), Some((vec![0, 1, 2], 3)));
        assert_eq!(canonicalize(&[0, 0]), None);
    }
}
