mod common;

use std::collections::HashSet;

use common::*;
use proptest::prelude::*;
use qkelly::arrangement::{child_strata, enumerate_strata, interior_point, sign_vector_f64, Stratification};
use qkelly::geometry::{from_ratio, log_monomial, RatioPoint};
use qkelly::problem::{support_sets, SupportSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn binary_and_vertex_lattices() {
    let b = binary("1/2");
    let lat = enumerate_strata(&b, &SupportSet::full(2)).unwrap();
    assert_eq!(lat.normals(), &[vec![1]]);
    assert_eq!(lat.len(), 3);
    let wall = lat.strata().iter().find(|s| s.dim() == 0).unwrap();
    assert_eq!(interior_point(wall).z, vec![0.0]);
    let v = enumerate_strata(&b, &SupportSet::new(vec![1]).unwrap()).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v.get(0).rank(), (1, 0));
}

#[test]
fn binary_chamber_children() {
    let b = binary("1/2");
    let strat = Stratification::new(&b).unwrap();
    let lat = strat.lattice(&SupportSet::full(2));
    let up = lat.strata().iter().find(|s| s.signs() == [-1]).unwrap();
    let kids = child_strata(up, &strat);
    let supports: Vec<Vec<usize>> = kids.iter().map(|k| k.support.indices().to_vec()).collect();
    assert!(supports.contains(&vec![0, 1]));
    assert!(supports.contains(&vec![0]));
    // The other vertex closes the opposite chamber.
    assert!(!supports.contains(&vec![1]));
    let vertex = strat.lattice(&SupportSet::new(vec![0]).unwrap()).get(0);
    assert!(child_strata(vertex, &strat).is_empty());
}

#[test]
fn ternary_chambers_match_sampling() {
    let t = ternary();
    let lat = enumerate_strata(&t, &SupportSet::full(3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..100_000 {
        let z = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        seen.insert(sign_vector_f64(lat.normals(), &z));
    }
    let chambers: std::collections::BTreeSet<Vec<i8>> =
        lat.strata().iter().filter(|s| s.dim() == 2).map(|s| s.signs().to_vec()).collect();
    assert_eq!(seen, chambers);
    assert_eq!(lat.strata().iter().filter(|s| s.dim() == 2).map(|s| s.rank()).next(), Some((3, 2)));
}

#[test]
fn kelly_chamber_interior_point() {
    let t = ternary();
    let strat = Stratification::new(&t).unwrap();
    let kelly = qkelly::shadow::kelly_point(t.p(), t.q());
    let z = qkelly::geometry::to_ratio(&kelly, t.q()).z;
    let lat = strat.lattice(&SupportSet::full(3));
    let st = lat.get(lat.locate(&z).unwrap());
    let w = from_ratio(&interior_point(st), t.q());
    let w = w.values();
    assert!(w[0] > w[1] && w[1] > w[2] && w[1] * w[1] > w[0] * w[2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn strata_partition_the_support_face(inst in instance_strategy(2..=4, 1..=4), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in support_sets(inst.m()) {
            let lat = enumerate_strata(&inst, &s).unwrap();
            let d = s.len() - 1;
            let bound = binomial(inst.counts().iter().filter(|k| k.supported_in(s.indices())).count() as u64, 2);
            prop_assert!(lat.len() as u64 <= (2 * bound + 1).pow(d as u32), "{} faces on {}", lat.len(), s);
            // Distinct sign vectors, so membership below means exactly one hit.
            let all: HashSet<&[i8]> = lat.strata().iter().map(|st| st.signs()).collect();
            prop_assert_eq!(all.len(), lat.len());
            for _ in 0..10_000 {
                let z: Vec<f64> = (0..d).map(|_| rng.random_range(-8.0..8.0)).collect();
                let signs = sign_vector_f64(lat.normals(), &z);
                prop_assert!(all.contains(signs.as_slice()));
            }
            for st in lat.strata() {
                let signs = qkelly::arrangement::sign_vector_exact(lat.normals(), st.interior_exact());
                prop_assert_eq!(signs.as_slice(), st.signs());
                let eq_rank = qkelly::linalg::nullspace(
                    &st.normals().iter().zip(st.signs()).filter(|(_, s)| **s == 0).map(|(g, _)| g.clone()).collect::<Vec<_>>(),
                    d,
                )
                .basis
                .len();
                prop_assert_eq!(st.dim(), eq_rank);
            }
        }
    }

    #[test]
    fn children_have_smaller_rank(inst in instance_strategy(2..=3, 1..=3)) {
        let strat = Stratification::new(&inst).unwrap();
        for s in strat.supports() {
            for st in strat.lattice(s).strata() {
                for c in child_strata(st, &strat) {
                    let child = strat.get(&c);
                    prop_assert!(child.rank() < st.rank(), "{} -> {}", st.label(), child.label());
                }
            }
        }
    }

    #[test]
    fn monomial_order_is_constant_on_strata(inst in instance_strategy(2..=3, 1..=3), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strat = Stratification::new(&inst).unwrap();
        for s in strat.supports() {
            let counts: Vec<_> = inst.counts().iter().filter(|k| k.supported_in(s.indices())).collect();
            for st in strat.lattice(s).strata() {
                let mut reference: Option<Vec<i8>> = None;
                for ze in stratum_points(st, &mut rng, 100) {
                    let z: Vec<f64> = ze.iter().map(qkelly::rational::to_f64).collect();
                    let w = from_ratio(&RatioPoint { support: s.clone(), z }, inst.q());
                    let logs: Vec<f64> = counts.iter().map(|k| log_monomial(w.values(), k)).collect();
                    let mut order = Vec::new();
                    for a in 0..logs.len() {
                        for b in 0..logs.len() {
                            let d = logs[a] - logs[b];
                            let tol = 1e-9 * (1.0 + logs[a].abs());
                            order.push(if d > tol { 1 } else if d < -tol { -1 } else { 0 });
                        }
                    }
                    match &reference {
                        None => reference = Some(order),
                        Some(r0) => prop_assert_eq!(r0, &order, "{}", st.label()),
                    }
                }
            }
        }
    }
}
