//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use shiftlab_core::enumerate::{count_patterns, EnumOptions};
use shiftlab_core::geometry::SiteSet;
use shiftlab_core::lattice::IntegerLattice;
use shiftlab_core::models;
use shiftlab_core::relations::{cocycle_value_int, SiteFunction};
use shiftlab_core::shift::{shift_pattern, Pattern};

proptest! {
    #[test]
    fn shift_is_a_group_action(
        sites in proptest::collection::vec((-6i64..6, -6i64..6), 1..6),
        values in proptest::collection::vec(0u8..3, 6),
        k1 in (-5i64..5, -5i64..5),
        k2 in (-5i64..5, -5i64..5),
    ) {
        let mut pairs: Vec<(Vec<i64>, u8)> = Vec::new();
        for (i, (a, b)) in sites.iter().enumerate() {
            pairs.push((vec![*a, *b], values[i % values.len()]));
        }
        pairs.sort();
        pairs.dedup_by(|a, b| a.0 == b.0);
        let p = Pattern::from_pairs(2, &pairs).unwrap();
        let k1 = vec![k1.0, k1.1];
        let k2 = vec![k2.0, k2.1];
        // identity
        prop_assert_eq!(shift_pattern(&p, &[0, 0]), p.clone());
        // composition
        let lhs = shift_pattern(&shift_pattern(&p, &k1), &k2);
        let sum: Vec<i64> = k1.iter().zip(&k2).map(|(a, b)| a + b).collect();
        prop_assert_eq!(lhs, shift_pattern(&p, &sum));
    }

    #[test]
    fn hnf_span_is_idempotent_and_contains_generators(
        vectors in proptest::collection::vec(
            proptest::collection::vec(-20i64..20, 4), 0..7)
    ) {
        let l = IntegerLattice::span(4, &vectors).unwrap();
        let again = IntegerLattice::span(4, l.basis()).unwrap();
        prop_assert_eq!(&l, &again);
        for v in &vectors {
            prop_assert!(l.contains(v).unwrap());
        }
        // closure under subtraction of generator pairs
        if vectors.len() >= 2 {
            let diff: Vec<i64> = vectors[0].iter().zip(&vectors[1]).map(|(a, b)| a - b).collect();
            prop_assert!(l.contains(&diff).unwrap());
        }
    }

    #[test]
    fn cocycle_additivity_on_random_triples(
        a in proptest::collection::vec(0u8..2, 6),
        b in proptest::collection::vec(0u8..2, 6),
        c in proptest::collection::vec(0u8..2, 6),
        cols in proptest::collection::vec(proptest::collection::vec(-9i64..9, 2), 2),
    ) {
        let sup = SiteSet::interval(0, 5).unwrap();
        let pa = Pattern::new(sup.clone(), a).unwrap();
        let pb = Pattern::new(sup.clone(), b).unwrap();
        let pc = Pattern::new(sup, c).unwrap();
        let g = SiteFunction::from_columns(cols).unwrap();
        let ab = cocycle_value_int(&g, &pa, &pb).unwrap();
        let bc = cocycle_value_int(&g, &pb, &pc).unwrap();
        let ac = cocycle_value_int(&g, &pa, &pc).unwrap();
        let sum: Vec<i64> = ab.iter().zip(&bc).map(|(x, y)| x + y).collect();
        prop_assert_eq!(sum, ac);
    }

    #[test]
    fn margin_counts_never_increase(len in 2i64..7, m1 in 0i64..3, extra in 1i64..3) {
        let x = models::golden_mean();
        let f = SiteSet::interval(0, len).unwrap();
        let lo = count_patterns(&x, &f, None, EnumOptions::with_margin(m1 + extra)).unwrap();
        let hi = count_patterns(&x, &f, None, EnumOptions::with_margin(m1)).unwrap();
        prop_assert!(lo <= hi);
    }
}
