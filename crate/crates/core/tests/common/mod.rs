#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use qkelly::arrangement::{sign_vector_exact, Stratum};
use qkelly::geometry::WealthProfile;
use qkelly::problem::ProblemInstance;
use qkelly::rational::parse_rational;
use rand::Rng;

pub fn r(s: &str) -> BigRational {
    parse_rational(s).unwrap()
}

pub fn ri(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn exact(xs: &[&str]) -> WealthProfile {
    WealthProfile::exact(xs.iter().map(|s| r(s)).collect())
}

pub fn binary(alpha: &str) -> ProblemInstance {
    ProblemInstance::parse(&["0.6", "0.4"], &["1", "1"], 3, alpha).unwrap()
}

pub fn ternary() -> ProblemInstance {
    ProblemInstance::parse(&["0.6", "0.3", "0.1"], &["1/3", "1/3", "1/3"], 2, "1/2").unwrap()
}

/// Exact instance from integer weights: `p_i = a_i / sum(a)`, `q_i = b_i / 4`.
pub fn from_weights(a: &[u32], b: &[u32], n: u32, alpha: &BigRational) -> ProblemInstance {
    let total: i64 = a.iter().map(|&x| x as i64).sum();
    let p = a.iter().map(|&x| ri(x as i64, total)).collect();
    let q = b.iter().map(|&x| ri(x as i64, 4)).collect();
    ProblemInstance::exact(p, q, n, alpha.clone()).unwrap()
}

pub fn alpha_strategy() -> impl Strategy<Value = BigRational> {
    prop_oneof![Just(ri(1, 4)), Just(ri(1, 2)), Just(ri(4, 5)), (1i64..20).prop_map(|a| ri(a, 20))]
}

/// Random exact instance with `m` in the given range.
pub fn instance_strategy(ms: std::ops::RangeInclusive<usize>, ns: std::ops::RangeInclusive<u32>) -> impl Strategy<Value = ProblemInstance> {
    (ms, ns, alpha_strategy()).prop_flat_map(|(m, n, alpha)| {
        (prop::collection::vec(1u32..10, m), prop::collection::vec(1u32..9, m))
            .prop_map(move |(a, b)| from_weights(&a, &b, n, &alpha))
    })
}

/// Random exact profile on the budget plane with support `idx`.
pub fn random_profile(inst: &ProblemInstance, idx: &[usize], rng: &mut impl Rng) -> WealthProfile {
    let q = inst.q_exact().unwrap();
    let weights: Vec<BigRational> = idx.iter().map(|_| ri(rng.random_range(1..=60), 1)).collect();
    let spent: BigRational = idx.iter().zip(&weights).map(|(&i, w)| &q[i] * w).sum();
    let mut w = vec![ri(0, 1); inst.m()];
    for (&i, wi) in idx.iter().zip(&weights) {
        w[i] = wi / &spent;
    }
    WealthProfile::exact(w)
}

/// Exact points of a stratum: its interior point rescaled plus a rational move
/// inside the face's span, halved until the sign vector matches.
pub fn stratum_points(st: &Stratum, rng: &mut impl Rng, count: usize) -> Vec<Vec<BigRational>> {
    let eq: Vec<Vec<i64>> = st
        .normals()
        .iter()
        .zip(st.signs())
        .filter(|(_, s)| **s == 0)
        .map(|(g, _)| g.clone())
        .collect();
    let d = st.interior_exact().len();
    let basis = qkelly::linalg::nullspace(&eq, d).basis;
    let mut out = Vec::new();
    while out.len() < count {
        let scale = ri(rng.random_range(1..=40), 10);
        let mut step = vec![ri(0, 1); d];
        for b in &basis {
            let c = ri(rng.random_range(-100..=100), 50);
            for (si, bi) in step.iter_mut().zip(b) {
                *si += &c * bi;
            }
        }
        for _ in 0..60 {
            let z: Vec<BigRational> = st.interior_exact().iter().zip(&step).map(|(a, b)| a * &scale + b).collect();
            if sign_vector_exact(st.normals(), &z) == st.signs() {
                out.push(z);
                break;
            }
            step.iter_mut().for_each(|v| *v /= ri(2, 1));
        }
    }
    out
}

/// Direct quantile from its definition: the largest attained value `v` with
/// `P(W^K >= v) >= alpha`, else 0. Exact arithmetic throughout.
pub fn quantile_oracle(inst: &ProblemInstance, w: &[BigRational]) -> BigRational {
    let alpha = inst.alpha_exact().unwrap();
    let counts = inst.counts();
    let vals: Vec<BigRational> = counts
        .iter()
        .map(|k| {
            let mut v = ri(1, 1);
            for (wi, &ki) in w.iter().zip(k.as_slice()) {
                for _ in 0..ki {
                    v *= wi;
                }
            }
            v
        })
        .collect();
    let masses: Vec<BigRational> = counts.iter().map(|k| mass_oracle(inst, k.as_slice())).collect();
    let mut best = ri(0, 1);
    for v in &vals {
        if *v <= best {
            continue;
        }
        let tail: BigRational = vals.iter().zip(&masses).filter(|(u, _)| *u >= v).map(|(_, m)| m.clone()).sum();
        if tail >= *alpha {
            best = v.clone();
        }
    }
    best
}

/// Multinomial probability computed from factorials.
pub fn mass_oracle(inst: &ProblemInstance, k: &[u32]) -> BigRational {
    let fact = |n: u32| (1..=n).fold(BigInt::from(1), |a, i| a * BigInt::from(i));
    let n: u32 = k.iter().sum();
    let mut coef = BigRational::from_integer(fact(n));
    for (pi, &ki) in inst.p_exact().unwrap().iter().zip(k) {
        coef /= BigRational::from_integer(fact(ki));
        for _ in 0..ki {
            coef *= pi;
        }
    }
    coef
}
