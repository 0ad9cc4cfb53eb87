mod common;

use common::*;
use proptest::prelude::*;
use qkelly::arrangement::Stratification;
use qkelly::problem::{CountVector, SupportSet};
use qkelly::quantile::analyze_stratum;
use qkelly::rational::to_f64;
use qkelly::shadow::shadow_value;
use qkelly::stratum::{maximize_on_face_with, FacePolyhedron, SolveOptions, SolveStatus, StratumObjective};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn forced(start: Option<Vec<f64>>) -> SolveOptions {
    SolveOptions {
        fast_path: false,
        start,
        ..SolveOptions::default()
    }
}

#[test]
fn binary_chambers() {
    let b = binary("1/2");
    let strat = Stratification::new(&b).unwrap();
    let s = SupportSet::full(2);
    let lat = strat.lattice(&s);
    let k = CountVector::new(vec![2, 1]);
    let obj = StratumObjective::new(k, s.clone(), b.q(), 3).unwrap();
    for (sign, interior) in [(-1, true), (1, false)] {
        let idx = lat.strata().iter().position(|st| st.signs() == [sign]).unwrap();
        let out = maximize_on_face_with(&obj, &FacePolyhedron::from_lattice(lat, idx), &forced(None)).unwrap();
        match out.status {
            SolveStatus::InteriorMax { value, .. } => {
                assert!(interior);
                assert!((value - 4.0 / 27.0).abs() < 1e-12);
                assert!(out.point.unwrap().distance_inf(&[2.0 / 3.0, 1.0 / 3.0]) < 1e-8);
            }
            SolveStatus::OnClosureBoundary { .. } => assert!(!interior),
            other => panic!("unexpected {other:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn newton_is_unique_monotone_and_matches_closed_form(inst in instance_strategy(2..=3, 1..=3), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strat = Stratification::new(&inst).unwrap();
        for s in strat.supports() {
            let lat = strat.lattice(s);
            for st in lat.strata() {
                if st.dim() == 0 {
                    continue;
                }
                let Some(k) = analyze_stratum(&inst, st).active.count().cloned() else { continue };
                let obj = StratumObjective::new(k.clone(), s.clone(), inst.q(), inst.n()).unwrap();
                let poly = FacePolyhedron::from_lattice(lat, st.index());
                let a = maximize_on_face_with(&obj, &poly, &forced(None)).unwrap();
                for w in a.psi_history.windows(2) {
                    prop_assert!(w[1] >= w[0] - 1e-14 * w[0].abs().max(1.0), "{}: psi fell {} -> {}", st.label(), w[0], w[1]);
                }
                let other: Vec<f64> = stratum_points(st, &mut rng, 1)[0].iter().map(to_f64).collect();
                let b = maximize_on_face_with(&obj, &poly, &forced(Some(other))).unwrap();
                if let (SolveStatus::InteriorMax { z: za, value: va }, SolveStatus::InteriorMax { z: zb, .. }) = (&a.status, &b.status) {
                    for (x, y) in za.iter().zip(zb) {
                        prop_assert!((x - y).abs() < 1e-8, "{}: {:?} vs {:?}", st.label(), za, zb);
                    }
                    if k.supported_in(s.indices()) && k.support().len() == s.len() {
                        let fast = maximize_on_face_with(&obj, &poly, &SolveOptions::default()).unwrap();
                        if fast.fast_path {
                            let sv = shadow_value(&k, inst.n(), inst.q());
                            prop_assert!((va - sv).abs() <= 1e-10 * sv, "{}: {} vs {}", st.label(), va, sv);
                        }
                    }
                } else {
                    prop_assert_eq!(
                        std::mem::discriminant(&a.status),
                        std::mem::discriminant(&b.status),
                        "{}: {:?} vs {:?}", st.label(), a.status, b.status
                    );
                }
            }
        }
    }
}
