//! Randomized algebraic invariants.

use num_traits::{Signed, Zero};
use proptest::prelude::*;

use derivlab_core::derivations::{canonicalize, inner_apply, inner_equal, sylvester_solve};
use derivlab_core::globalize::{globalize_direct, globalize_stitch};
use derivlab_core::jordan::{globalize_jordan, jordan_is_derivation, map_from_skew, SkewImplementer};
use derivlab_core::localcheck::{check_local_inner, is_derivation, map_from_inner, PointSet};
use derivlab_core::{smith_normal_form, solve_linear, Matrix, Ring, Scalar};

fn rings() -> Vec<Ring> {
    vec![
        Ring::prime_field(2).unwrap(),
        Ring::prime_field(7).unwrap(),
        Ring::extension_field(2, 3).unwrap(),
        Ring::extension_field(5, 2).unwrap(),
        Ring::rationals(),
        Ring::integers(),
        Ring::integers_mod(6).unwrap(),
        Ring::integers_mod(8).unwrap(),
    ]
}

/// Ring element built from a small integer seed.
fn element(ring: &Ring, v: i64) -> Scalar {
    match ring.cardinality() {
        Some(c) if ring.extension_degree() > 1 => ring.element(v.unsigned_abs() % c),
        _ => {
            if ring.name() == "Q" {
                ring.fraction(v, 1 + (v.unsigned_abs() % 4) as i64).unwrap()
            } else {
                ring.from_i64(v)
            }
        }
    }
}

fn matrix(ring: &Ring, n: usize, vals: &[i64]) -> Matrix {
    Matrix::from_fn(ring, n, n, |r, c| element(ring, vals[(r * n + c) % vals.len()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(ri in 0usize..8, a in -50i64..50, b in -50i64..50, c in -50i64..50) {
        let ring = &rings()[ri];
        let (a, b, c) = (element(ring, a), element(ring, b), element(ring, c));
        prop_assert_eq!(ring.add(&a, &b), ring.add(&b, &a));
        prop_assert_eq!(ring.mul(&a, &b), ring.mul(&b, &a));
        prop_assert_eq!(ring.mul(&ring.mul(&a, &b), &c), ring.mul(&a, &ring.mul(&b, &c)));
        prop_assert_eq!(ring.mul(&a, &ring.add(&b, &c)), ring.add(&ring.mul(&a, &b), &ring.mul(&a, &c)));
        prop_assert!(ring.is_zero(&ring.add(&a, &ring.neg(&a))));
        if let Some(inv) = ring.inv(&a) {
            prop_assert!(ring.is_one(&ring.mul(&a, &inv)));
        }
    }

    #[test]
    fn inner_maps_are_derivations_and_round_trip(
        ri in 0usize..8, n in 1usize..4, vals in prop::collection::vec(-9i64..10, 1..16)
    ) {
        let ring = &rings()[ri];
        let a = matrix(ring, n, &vals);
        let f = map_from_inner(&a);
        prop_assert!(is_derivation(&f));
        let d = globalize_direct(&f).unwrap();
        prop_assert!(inner_equal(&d, &a).unwrap());
        prop_assert_eq!(&globalize_stitch(&f).unwrap(), &d);
        prop_assert_eq!(canonicalize(&d), d);
    }

    #[test]
    fn inner_maps_pass_sampled_checks(ri in 0usize..8, seed in any::<u64>()) {
        let ring = &rings()[ri];
        let a = matrix(ring, 3, &[seed as i64 % 7, 3, -2, 5, 1]);
        let v = check_local_inner(&map_from_inner(&a), &PointSet::sampled(10, seed)).unwrap();
        prop_assert!(v.is_accept());
    }

    #[test]
    fn sylvester_solutions_reproduce_values(
        ri in 0usize..8, xs in prop::collection::vec(-9i64..10, 9), as_ in prop::collection::vec(-9i64..10, 9)
    ) {
        let ring = &rings()[ri];
        let x = matrix(ring, 3, &xs);
        let a = matrix(ring, 3, &as_);
        let y = inner_apply(&a, &x).unwrap();
        let sol = sylvester_solve(&x, &y).unwrap();
        let b = sol.particular_matrix(ring, 3).unwrap();
        prop_assert_eq!(inner_apply(&b, &x).unwrap(), y.clone());
        for h in &sol.homogeneous {
            let k = Matrix::from_vec(ring, 3, h);
            prop_assert!(inner_apply(&k, &x).unwrap().is_zero());
        }
    }

    #[test]
    fn smith_form_invariants(rows in 1usize..5, cols in 1usize..5, vals in prop::collection::vec(-20i64..21, 16)) {
        let z = Ring::integers();
        let a = Matrix::from_fn(&z, rows, cols, |r, c| z.from_i64(vals[r * 4 + c]));
        let snf = smith_normal_form(&a).unwrap();
        prop_assert_eq!(snf.u.mul(&snf.s).unwrap().mul(&snf.v).unwrap(), a);
        let d = snf.diagonal();
        for w in d.windows(2) {
            prop_assert!(w[0].is_zero() && w[1].is_zero() || (!w[0].is_zero() && (&w[1] % &w[0]).is_zero()));
        }
        prop_assert!(d.iter().all(|x| !x.is_negative()));
        for r in 0..rows {
            for c in 0..cols {
                if r != c {
                    prop_assert!(z.is_zero(snf.s.at(r, c)));
                }
            }
        }
    }

    #[test]
    fn modular_solutions_are_solutions(m in 2u64..30, vals in prop::collection::vec(0i64..30, 12), b in prop::collection::vec(0i64..30, 3)) {
        let ring = Ring::integers_mod(m).unwrap();
        let a = Matrix::from_fn(&ring, 3, 4, |r, c| ring.from_i64(vals[r * 4 + c]));
        let rhs: Vec<Scalar> = b.iter().map(|&v| ring.from_i64(v)).collect();
        let sol = solve_linear(&a, &rhs).unwrap();
        if let Some(x) = &sol.particular {
            let col = Matrix::column(&ring, x.clone());
            prop_assert_eq!(a.mul(&col).unwrap().into_entries(), rhs);
        } else {
            // Unsolvable: confirm by exhausting Z/m^4 when small.
            if m.pow(4) <= 50_000 {
                let mut found = false;
                for idx in 0..m.pow(4) {
                    let x: Vec<Scalar> = (0..4).map(|t| ring.from_i64(((idx / m.pow(t)) % m) as i64)).collect();
                    if a.mul(&Matrix::column(&ring, x)).unwrap().into_entries() == rhs {
                        found = true;
                        break;
                    }
                }
                prop_assert!(!found);
            }
        }
    }

    #[test]
    fn skew_maps_are_jordan_derivations(ri in 0usize..8, n in 1usize..5, vals in prop::collection::vec(-9i64..10, 10)) {
        let ring = &rings()[ri];
        let t: Vec<Scalar> = vals.iter().take(n * (n - 1) / 2).map(|&v| element(ring, v)).collect();
        let c = SkewImplementer::from_upper(ring, n, &t);
        let f = map_from_skew(&c);
        prop_assert!(jordan_is_derivation(&f));
        prop_assert_eq!(globalize_jordan(&f).unwrap(), c);
    }
}
