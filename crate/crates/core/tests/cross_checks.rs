//! Cross-module identities: the block-recoded Gibbs measure of a periodic
//! chain, the shifted holonomy defect against an independent full-window
//! oracle, and the pushforward route to twisted cocycle subgroups.

use shiftlab_core::aperiodicity::{estimate_h, pushforward_h, SampleOpts};
use shiftlab_core::enumerate::{enumerate_patterns, EnumOptions};
use shiftlab_core::geometry::SiteSet;
use shiftlab_core::models;
use shiftlab_core::onedim::{
    block_recode, gibbs_markov, parry_measure, periodic_decomposition, TransitionMatrix,
};
use shiftlab_core::relations::{
    apply_involution, cocycle_value_int, shifted_holonomy_defect, CylinderSwap,
    SiteFunction,
};
use shiftlab_core::{Pattern, SymbolId};

/// Period-2 chain: symbols {0,1} feed 2, and 2 feeds both.
fn period_two_matrix() -> TransitionMatrix {
    TransitionMatrix::new(vec![
        vec![false, false, true],
        vec![false, false, true],
        vec![true, true, false],
    ])
    .unwrap()
}

#[test]
fn block_gibbs_measure_obeys_the_lifted_conformality_identity() {
    // the two-step recoding of a period-2 chain, twisted by the linear
    // functional H applied to the block weight sums
    let a = period_two_matrix();
    let d = periodic_decomposition(&a).unwrap();
    assert_eq!(d.period, 2);
    let coding = block_recode(&a, &d.classes[0], 2, 10_000).unwrap();

    // integer weights per original symbol, and a linear functional H
    let g_values: Vec<Vec<i64>> = vec![vec![1, 0], vec![0, 1], vec![2, -1]];
    let g = SiteFunction::from_columns(g_values.clone()).unwrap();
    let h = [0.35f64, -0.2];
    let phi_blocks: Vec<f64> = coding
        .blocks
        .iter()
        .map(|block| {
            let mut acc = [0i64; 2];
            for &s in block {
                for r in 0..2 {
                    acc[r] += g_values[s as usize][r];
                }
            }
            h[0] * acc[0] as f64 + h[1] * acc[1] as f64
        })
        .collect();
    let mu = gibbs_markov(&coding.matrix, &phi_blocks).unwrap();

    // over same-endpoint equal-length block words: the log ratio equals H of
    // the counting-cocycle value of the flattened words
    let words = |len: usize| -> Vec<Vec<SymbolId>> {
        let mut out: Vec<Vec<SymbolId>> = (0..coding.matrix.n as u16)
            .map(|s| vec![s as SymbolId])
            .collect();
        for _ in 1..len {
            let mut next = Vec::new();
            for w in &out {
                let last = *w.last().unwrap() as usize;
                for t in 0..coding.matrix.n {
                    if coding.matrix.allowed[last][t] {
                        let mut w2 = w.clone();
                        w2.push(t as SymbolId);
                        next.push(w2);
                    }
                }
            }
            out = next;
        }
        out
    };
    let flatten = |w: &[SymbolId]| -> Pattern {
        let mut symbols = Vec::new();
        for &b in w {
            symbols.extend_from_slice(&coding.blocks[b as usize]);
        }
        Pattern::new(
            SiteSet::interval(0, symbols.len() as i64 - 1).unwrap(),
            symbols,
        )
        .unwrap()
    };
    let mut pairs_checked = 0;
    for len in 2..=4usize {
        let ws = words(len);
        for u in &ws {
            for v in &ws {
                if u[0] != v[0] || u.last() != v.last() {
                    continue;
                }
                let pu = mu.word_prob(u);
                let pv = mu.word_prob(v);
                if pu <= 0.0 || pv <= 0.0 {
                    continue;
                }
                let psi = cocycle_value_int(&g, &flatten(u), &flatten(v)).unwrap();
                let expect = h[0] * psi[0] as f64 + h[1] * psi[1] as f64;
                assert!(
                    ((pv / pu).ln() - expect).abs() <= 1e-10,
                    "u {u:?} v {v:?}"
                );
                // weight-preserving pairs have equal measure
                if psi.iter().all(|&x| x == 0) {
                    assert!((pu - pv).abs() <= 1e-12 * pu.max(pv));
                }
                pairs_checked += 1;
            }
        }
    }
    assert!(pairs_checked > 10);
}

fn golden_swap() -> (shiftlab_core::ShiftSpace, CylinderSwap) {
    let x = models::golden_mean();
    let sup = SiteSet::interval(0, 2).unwrap();
    let sw = CylinderSwap::new(
        &x,
        Pattern::new(sup.clone(), vec![0, 1, 0]).unwrap(),
        Pattern::new(sup, vec![0, 0, 0]).unwrap(),
    )
    .unwrap();
    (x, sw)
}

/// Independent oracle: the defect evaluated by enumerating the full hull
/// interval with plain word probabilities (no gap marginalization).
fn defect_oracle(
    x: &shiftlab_core::ShiftSpace,
    mu: &shiftlab_core::onedim::MarkovMeasure,
    sw: &CylinderSwap,
    target: &Pattern,
    n: i64,
) -> f64 {
    let moved = sw.shifted(&[n]);
    let union = target.support().union(moved.support()).unwrap();
    let lo = union.site(0)[0];
    let hi = union.site(union.len() - 1)[0];
    let hull = SiteSet::interval(lo, hi).unwrap();
    let mut total = 0.0;
    for u in enumerate_patterns(x, &hull, None, EnumOptions::default()).unwrap() {
        let f = |p: &Pattern| -> f64 {
            if target.support().iter().all(|s| p.get(s) == target.get(s)) {
                1.0
            } else {
                0.0
            }
        };
        let fu = f(&u);
        let gu = f(&apply_involution(&moved, &u).unwrap());
        if (fu - gu).abs() > 0.0 {
            total += mu.word_prob(u.values()) * (fu - gu).abs();
        }
    }
    total
}

#[test]
fn holonomy_defect_vanishes_exactly_once_supports_separate() {
    let (x, sw) = golden_swap();
    let a = TransitionMatrix::from_space(&x).unwrap();
    let mu = parry_measure(&a).unwrap();
    let target = Pattern::new(SiteSet::interval(0, 2).unwrap(), vec![0, 1, 0]).unwrap();
    // moved support = [0,2] - n: disjoint from [0,2] once |n| >= 3
    for n in [3i64, 4, 7, -3, -10] {
        let d = shifted_holonomy_defect(&x, &mu, &sw, &target, &[n]).unwrap();
        assert_eq!(d, 0.0, "n = {n}");
    }
}

#[test]
fn holonomy_defect_matches_oracle_and_decays() {
    let (x, sw) = golden_swap();
    let a = TransitionMatrix::from_space(&x).unwrap();
    let mu = parry_measure(&a).unwrap();
    let target = Pattern::new(SiteSet::interval(0, 2).unwrap(), vec![0, 1, 0]).unwrap();
    let mut values = Vec::new();
    for n in 0..=10i64 {
        let fast = shifted_holonomy_defect(&x, &mu, &sw, &target, &[n]).unwrap();
        let slow = defect_oracle(&x, &mu, &sw, &target, n);
        assert!((fast - slow).abs() <= 1e-12, "n = {n}: {fast} vs {slow}");
        values.push(fast);
    }
    // positive where the swap meets the window, then exactly zero
    assert!(values[0] > 0.0);
    for w in values.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "defect not vanishing monotonically: {values:?}");
    }
    assert_eq!(values[3], 0.0);
}

#[test]
fn twisted_subgroups_via_pushforward_match_direct_estimates() {
    // H_G = pi_G H_sharp, checked for integer site functions on two models
    for (space, seed) in [(models::golden_mean(), 3u64), (models::iceberg(2, 1), 4u64)] {
        let n = space.symbol_count();
        let sharp = SiteFunction::counting(n);
        let opts = SampleOpts {
            samples: 60,
            ..Default::default()
        };
        let est_sharp = estimate_h(&space, &sharp, &[1, 2], &opts, seed).unwrap();
        assert!(est_sharp.stabilized);
        let columns: Vec<Vec<i64>> = (0..n as i64).map(|s| vec![s, s * s - 1]).collect();
        let g = SiteFunction::from_columns(columns).unwrap();
        let est_g = estimate_h(&space, &g, &[1, 2], &opts, seed + 1).unwrap();
        let pushed = pushforward_h(&g.matrix().unwrap(), &est_sharp.lattice).unwrap();
        assert_eq!(est_g.lattice, pushed);
    }
}
