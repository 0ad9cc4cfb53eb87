mod common;

use common::*;
use proptest::prelude::*;
use qkelly::geometry::{
    budget_residual, from_ratio, log_monomial, monomial_value, support_of, to_ratio, RatioPoint, WealthProfile,
};
use qkelly::problem::{enumerate_counts, SupportSet};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Support set as a mask over `m`, plus prices and ratio coordinates. With
/// three or more free values the spread is kept to 20 so every coordinate
/// stays above the float zero threshold.
fn chart_case() -> impl Strategy<Value = (usize, SupportSet, Vec<f64>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|m| {
        (1u64..(1 << m), prop::collection::vec(0.1f64..3.0, m)).prop_flat_map(move |(mask, q)| {
            let s = SupportSet::from_mask(mask);
            let bound = if s.len() <= 2 { 20.0 } else { 10.0 };
            let d = s.len() - 1;
            (Just(m), Just(s), Just(q), prop::collection::vec(-bound..bound, d))
        })
    })
}

#[test]
fn chart_examples() {
    let q = [1.0 / 3.0; 3];
    let w = from_ratio(&RatioPoint { support: SupportSet::new(vec![0, 1]).unwrap(), z: vec![0.0] }, &q);
    assert!(w.distance_inf(&[1.5, 1.5, 0.0]) < 1e-12);
    let z = to_ratio(&WealthProfile::new(vec![1.8, 0.9, 0.3]), &q).z;
    assert!(close(z[0], 0.5f64.ln(), 1e-14) && close(z[1], (1.0f64 / 6.0).ln(), 1e-14));
    let z = to_ratio(&WealthProfile::new(vec![2.0 / 3.0, 1.0 / 3.0]), &[1.0, 1.0]).z;
    assert!(close(z[0], 0.5f64.ln(), 1e-14));
    assert_eq!(budget_residual(&WealthProfile::new(vec![1.0, 1.0]), &[1.0, 1.0]), 1.0);
    assert!(budget_residual(&WealthProfile::new(vec![1.8, 0.9, 0.3]), &q).abs() < 1e-15);
    let k = qkelly::problem::CountVector::new(vec![1, 0, 1]);
    assert_eq!(monomial_value(&WealthProfile::new(vec![1.5, 1.5, 0.0]), &k), 0.0);
    assert_eq!(support_of(&exact(&["3/2", "3/2", "0"]), &q).indices(), &[0, 1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chart_is_a_bijection((m, s, q, z) in chart_case()) {
        let w = from_ratio(&RatioPoint { support: s.clone(), z: z.clone() }, &q);
        prop_assert_eq!(w.len(), m);
        prop_assert!(budget_residual(&w, &q).abs() < 1e-10);
        prop_assert_eq!(&support_of(&w, &q), &s);
        let back = to_ratio(&w, &q);
        for (a, b) in back.z.iter().zip(&z) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
        let again = from_ratio(&back, &q);
        prop_assert!(again.distance_inf(w.values()) < 1e-12 * (1.0 + w.values().iter().cloned().fold(0.0, f64::max)));
    }

    #[test]
    fn log_monomial_splits_over_anchor((_m, s, q, z) in chart_case(), n in 1u32..=5) {
        let w = from_ratio(&RatioPoint { support: s.clone(), z: z.clone() }, &q);
        let r = s.anchor();
        for k in enumerate_counts(q.len(), n).iter().filter(|k| k.supported_in(s.indices())) {
            let lin: f64 = s.free().iter().zip(&z).map(|(&i, zi)| k.get(i) as f64 * zi).sum();
            let want = lin + n as f64 * w.get(r).ln();
            let got = log_monomial(w.values(), k);
            prop_assert!(close(got, want, 1e-10), "{} vs {}", got, want);
        }
    }

    #[test]
    fn monomial_order_is_linear_in_ratios((_m, s, q, z) in chart_case(), n in 1u32..=4) {
        let w = from_ratio(&RatioPoint { support: s.clone(), z: z.clone() }, &q);
        let counts: Vec<_> = enumerate_counts(q.len(), n).into_iter().filter(|k| k.supported_in(s.indices())).collect();
        for k in &counts {
            for l in &counts {
                let lin: f64 = s.free().iter().zip(&z).map(|(&i, zi)| (k.get(i) as f64 - l.get(i) as f64) * zi).sum();
                if lin.abs() < 1e-8 {
                    continue;
                }
                let diff = log_monomial(w.values(), k) - log_monomial(w.values(), l);
                prop_assert_eq!(diff.signum(), lin.signum());
            }
        }
    }
}
