use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use tnm_core::classify::GitDimension;
use tnm_core::{
    big_r, castle_step, castling_equivalent, classify_closed_form, classify_recursive, explain,
    g_max, git_dimension, mle_profile, reduce_to_minimal, thresholds, Datum, StabilityClass,
};

fn datum(dims: &[u64], m: u64) -> Datum {
    Datum::new(dims.to_vec(), m).unwrap()
}

fn sorted_dims(max_k: usize, lo: u64, hi: u64) -> Vec<Vec<u64>> {
    fn rec(prefix: &mut Vec<u64>, max_k: usize, hi: u64, out: &mut Vec<Vec<u64>>, lo: u64) {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        if prefix.len() == max_k {
            return;
        }
        let start = prefix.last().copied().unwrap_or(lo);
        for d in start..=hi {
            prefix.push(d);
            rec(prefix, max_k, hi, out, lo);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), max_k, hi, &mut out, lo);
    out
}

#[test]
fn stability_is_monotone_in_m() {
    for dims in sorted_dims(4, 2, 8) {
        for m in 1..6 {
            let now = classify_closed_form(&datum(&dims, m));
            let next = classify_closed_form(&datum(&dims, m + 1));
            if now == StabilityClass::Stable {
                assert_eq!(next, StabilityClass::Stable, "{dims:?} m={m}");
            }
            if now != StabilityClass::Unstable {
                assert_ne!(next, StabilityClass::Unstable, "{dims:?} m={m}");
            }
        }
    }
}

#[test]
fn git_dimension_tracks_class() {
    for dims in sorted_dims(4, 2, 8) {
        for m in 1..=6 {
            let d = datum(&dims, m);
            let git = git_dimension(&d);
            let class = classify_closed_form(&d);
            assert_eq!(
                git == GitDimension::Empty,
                class == StabilityClass::Unstable,
                "{d}"
            );
            if !big_r(&d).is_negative() {
                match git {
                    GitDimension::Dim(v) => assert!(v >= BigInt::zero(), "{d}"),
                    GitDimension::Empty => panic!("{d} should have a quotient"),
                }
            }
            if let Ok(c) = castle_step(&d) {
                assert_eq!(git_dimension(&c), git_dimension(&d), "{d}");
            }
        }
    }
}

#[test]
fn profile_implications() {
    for dims in sorted_dims(3, 1, 7) {
        for m in 1..=5 {
            let p = mle_profile(&datum(&dims, m));
            assert!(!p.unique_as || p.exists_as);
            assert!(!p.exists_as || p.bounded_as);
            assert_eq!(p.always_unbounded, !p.bounded_as);
        }
    }
}

#[test]
fn thresholds_consistent_with_classifier() {
    for dims in sorted_dims(3, 2, 9) {
        let t = thresholds(&dims).unwrap();
        assert!(t.mlt_b == t.mlt_e && t.mlt_e <= t.mlt_u);
        if t.mlt_b > 1 {
            assert_eq!(
                classify_closed_form(&datum(&dims, t.mlt_b - 1)),
                StabilityClass::Unstable
            );
        }
        assert_ne!(
            classify_closed_form(&datum(&dims, t.mlt_b)),
            StabilityClass::Unstable
        );
        assert_eq!(
            classify_closed_form(&datum(&dims, t.mlt_u)),
            StabilityClass::Stable
        );
        if t.mlt_u > 1 {
            assert_ne!(
                classify_closed_form(&datum(&dims, t.mlt_u - 1)),
                StabilityClass::Stable
            );
        }
    }
}

#[test]
fn large_data_classify_exactly() {
    // m·∏d_i ≈ 10^102, far past any machine word.
    let d = datum(&[999_983; 16], 1_000_000);
    assert_eq!(classify_closed_form(&d), classify_recursive(&d));
    // castles to (10^6, 10^6, 10^6; 1)
    let d = datum(&[1_000_000, 1_000_000, 999_999_000_000], 1);
    assert_eq!(classify_recursive(&d), StabilityClass::Stable);
    assert_eq!(classify_closed_form(&d), StabilityClass::Stable);
    // d_k = N with other factors present
    let d = datum(&[1_000_000, 1_000_000, 1_000_000_000_000], 1);
    assert_eq!(classify_recursive(&d), StabilityClass::PolystableNotStable);
    assert_eq!(
        classify_closed_form(&d),
        StabilityClass::PolystableNotStable
    );
}

#[test]
fn explain_is_consistent() {
    for dims in sorted_dims(3, 1, 6) {
        for m in 1..=3 {
            let rep = explain(&datum(&dims, m));
            assert!(rep.classifiers_agree());
            assert_eq!(rep.g_max, g_max(&rep.normalized));
            assert_eq!(
                rep.castling_trace.minimal(),
                reduce_to_minimal(&rep.datum).minimal()
            );
        }
    }
}

proptest! {
    #[test]
    fn castling_preserves_class(dims in prop::collection::vec(1u64..=12, 1..=4), m in 1u64..=5) {
        let d = datum(&dims, m);
        if let Ok(c) = castle_step(&d) {
            prop_assert_eq!(classify_closed_form(&c), classify_closed_form(&d));
            prop_assert!(castling_equivalent(&c, &d) || c.dim_product() > d.dim_product());
        }
    }

    #[test]
    fn classifiers_agree_on_random_data(dims in prop::collection::vec(1u64..=40, 1..=5), m in 1u64..=10) {
        let d = datum(&dims, m);
        prop_assert_eq!(classify_closed_form(&d), classify_recursive(&d));
    }
}
