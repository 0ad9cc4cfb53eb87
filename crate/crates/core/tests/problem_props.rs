mod common;

use common::*;
use num_rational::BigRational;
use proptest::prelude::*;
use qkelly::problem::{enumerate_counts, multinomial_mass, support_mass, support_sets, CountVector, ProblemInstance};
use qkelly::Error;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn count_table_size() {
    for m in 1..=5 {
        for n in 0..=8 {
            let counts = enumerate_counts(m, n);
            assert_eq!(counts.len() as u64, binomial(n as u64 + m as u64 - 1, m as u64 - 1), "m={m} n={n}");
            assert!(counts.iter().all(|k| k.total() == n));
        }
    }
    assert_eq!(enumerate_counts(5, 0), vec![CountVector::new(vec![0; 5])]);
}

#[test]
fn paper_tables() {
    let b = binary("1/2");
    let k: Vec<_> = enumerate_counts(2, 3).iter().map(|k| k.as_slice().to_vec()).collect();
    assert_eq!(k, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
    let m = multinomial_mass(&b, &CountVector::new(vec![2, 1])).unwrap();
    assert_eq!(m.exact(), Some(&r("0.432")));
    let t = ternary();
    let m = multinomial_mass(&t, &CountVector::new(vec![0, 0, 2])).unwrap();
    assert_eq!(m.exact(), Some(&r("0.01")));
    let s12 = qkelly::problem::SupportSet::new(vec![0, 1]).unwrap();
    assert_eq!(support_mass(&t, &s12).unwrap().exact(), Some(&r("0.81")));
    let s1 = qkelly::problem::SupportSet::new(vec![0]).unwrap();
    assert_eq!(support_mass(&b, &s1).unwrap().exact(), Some(&r("0.216")));
}

#[test]
fn rejects_bad_probabilities() {
    let e = ProblemInstance::parse(&["0.6", "0.5"], &["1", "1"], 3, "0.5").unwrap_err();
    assert!(matches!(e, Error::Instance(_)), "{e}");
    assert!(ProblemInstance::new(&[0.6, 0.5], &[1.0, 1.0], 3, 0.5).is_err());
    assert!(ProblemInstance::parse(&["0.6", "0.4"], &["1", "0"], 3, "0.5").is_err());
    assert!(ProblemInstance::parse(&["0.6", "0.4"], &["1", "1"], 3, "1").is_err());
    assert!(ProblemInstance::parse(&["1", "0"], &["1", "1"], 3, "1/2").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masses_sum_to_one_exactly(inst in instance_strategy(2..=5, 1..=8)) {
        let total: BigRational = inst.masses().iter().map(|p| p.exact().unwrap().clone()).sum();
        prop_assert_eq!(total, ri(1, 1));
        for (k, p) in inst.counts().iter().zip(inst.masses()) {
            prop_assert_eq!(p.exact().unwrap(), &mass_oracle(&inst, k.as_slice()));
        }
    }

    #[test]
    fn float_masses_sum_to_one(raw in prop::collection::vec(0.05f64..1.0, 2..=5), n in 1u32..=8) {
        let s: f64 = raw.iter().sum();
        let mut p: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let head: f64 = p[..p.len() - 1].iter().sum();
        *p.last_mut().unwrap() = 1.0 - head;
        let q = vec![1.0; p.len()];
        let inst = ProblemInstance::new(&p, &q, n, 0.5).unwrap();
        let total: f64 = inst.masses().iter().map(|m| m.value()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "{}", total);
    }

    #[test]
    fn support_mass_is_power_of_share(inst in instance_strategy(2..=4, 1..=6)) {
        let p = inst.p_exact().unwrap();
        for s in support_sets(inst.m()) {
            let share: BigRational = s.indices().iter().map(|&i| p[i].clone()).sum();
            let mut want = ri(1, 1);
            for _ in 0..inst.n() {
                want *= &share;
            }
            let got = support_mass(&inst, &s).unwrap();
            prop_assert_eq!(got.exact().unwrap(), &want, "S={}", s);
        }
    }
}
