//! Tail swaps, cocycles over them, and the exchangeability kernel.
//!
//! A tail swap is a pair of admissible patterns on a common support agreeing
//! on the support boundary; it acts on configurations as a clopen holonomy of
//! the tail relation. Cocycles sum per-site weight differences; the counting
//! cocycle (weight `e_s` per symbol `s`) has the exchangeable relation as its
//! kernel, which is both asserted and cross-checked here by an independent
//! multiset comparison.

use rand::Rng;

use crate::enumerate::{first_pattern, EnumOptions};
use crate::error::{Error, Result};
use crate::geometry::{Coord, SiteSet};
use crate::potential::LocalPotential;
use crate::shift::{shift_pattern, Pattern, ShiftSpace};

/// A per-symbol weight with values in `Z^k` or in the reals.
#[derive(Clone, Debug)]
pub enum SiteFunction {
    IntVec { rank: usize, values: Vec<Vec<i64>> },
    Real { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupValue {
    Int(Vec<i64>),
    Real(f64),
}

impl SiteFunction {
    /// The counting function: symbol `s` maps to the unit vector `e_s`.
    pub fn counting(symbols: usize) -> Self {
        let values = (0..symbols)
            .map(|s| {
                let mut e = vec![0i64; symbols];
                e[s] = 1;
                e
            })
            .collect();
        SiteFunction::IntVec {
            rank: symbols,
            values,
        }
    }

    pub fn constant(symbols: usize, rank: usize) -> Self {
        SiteFunction::IntVec {
            rank,
            values: vec![vec![0; rank]; symbols],
        }
    }

    /// Integer-vector site function from per-symbol columns.
    pub fn from_columns(columns: Vec<Vec<i64>>) -> Result<Self> {
        let rank = columns.first().map(|c| c.len()).unwrap_or(0);
        for c in &columns {
            if c.len() != rank {
                return Err(Error::RankMismatch {
                    expected: rank,
                    got: c.len(),
                });
            }
        }
        Ok(SiteFunction::IntVec {
            rank,
            values: columns,
        })
    }

    pub fn symbols(&self) -> usize {
        match self {
            SiteFunction::IntVec { values, .. } => values.len(),
            SiteFunction::Real { values } => values.len(),
        }
    }

    /// The homomorphism matrix `Z^S -> Z^k` whose column `s` is the value at
    /// `s` (defined for integer-vector functions).
    pub fn matrix(&self) -> Result<Vec<Vec<i64>>> {
        match self {
            SiteFunction::IntVec { rank, values } => {
                let mut m = vec![vec![0i64; values.len()]; *rank];
                for (s, col) in values.iter().enumerate() {
                    for (r, &x) in col.iter().enumerate() {
                        m[r][s] = x;
                    }
                }
                Ok(m)
            }
            SiteFunction::Real { .. } => Err(Error::InvalidParameter(
                "real-valued site function has no integer matrix".into(),
            )),
        }
    }
}

fn check_shared_support(a: &Pattern, b: &Pattern) -> Result<()> {
    if a.support() != b.support() {
        return Err(Error::SupportMismatch(
            "cocycle arguments must share a support".into(),
        ));
    }
    Ok(())
}

/// The additive weight `sum_j (G(b_j) - G(a_j))` of a same-support pair.
/// Integer arithmetic is checked; overflow fails loudly.
pub fn cocycle_value(g: &SiteFunction, a: &Pattern, b: &Pattern) -> Result<GroupValue> {
    check_shared_support(a, b)?;
    let n_syms = g.symbols();
    for &v in a.values().iter().chain(b.values()) {
        if v as usize >= n_syms {
            return Err(Error::SymbolOutOfRange {
                symbol: v as usize,
                alphabet: n_syms,
            });
        }
    }
    match g {
        SiteFunction::IntVec { rank, values } => {
            let mut acc = vec![0i64; *rank];
            for (&va, &vb) in a.values().iter().zip(b.values()) {
                for r in 0..*rank {
                    let d = values[vb as usize][r] as i128 - values[va as usize][r] as i128;
                    let v = acc[r] as i128 + d;
                    acc[r] = i64::try_from(v).map_err(|_| Error::Overflow)?;
                }
            }
            Ok(GroupValue::Int(acc))
        }
        SiteFunction::Real { values } => {
            let mut acc = 0.0;
            for (&va, &vb) in a.values().iter().zip(b.values()) {
                acc += values[vb as usize] - values[va as usize];
            }
            Ok(GroupValue::Real(acc))
        }
    }
}

/// Integer-vector cocycle value (errors on real-valued functions).
pub fn cocycle_value_int(g: &SiteFunction, a: &Pattern, b: &Pattern) -> Result<Vec<i64>> {
    match cocycle_value(g, a, b)? {
        GroupValue::Int(v) => Ok(v),
        GroupValue::Real(_) => Err(Error::InvalidParameter(
            "expected an integer-valued site function".into(),
        )),
    }
}

/// Cocycle of a local potential across a boundary-matching pair, evaluated
/// with the window collar fixed: the sum over every window meeting a changed
/// site of the potential difference between the `b`-side and the `a`-side.
///
/// `collar` must determine all sites within distance `r` of the support that
/// lie outside it; missing sites are reported.
pub fn markov_cocycle_value(
    space: &ShiftSpace,
    g: &LocalPotential,
    a: &Pattern,
    b: &Pattern,
    collar: &Pattern,
) -> Result<f64> {
    check_shared_support(a, b)?;
    let f = a.support();
    let (_, bdy) = f.frontier()?;
    if !a.agrees_with(b, &bdy) {
        return Err(Error::BoundaryMismatch);
    }
    g.validate(space)?;
    let numeric = match g {
        LocalPotential::ThreeSpin { .. } => space.numeric_values()?,
        _ => Vec::new(),
    };
    let r = g.radius();
    let dim = space.dim();

    // sites where the two sides differ
    let changed: Vec<&Vec<Coord>> = f
        .iter()
        .enumerate()
        .filter(|(i, _)| a.values()[*i] != b.values()[*i])
        .map(|(_, s)| s)
        .collect();
    if changed.is_empty() {
        return Ok(0.0);
    }

    // window centers whose window meets a changed site
    let mut centers: Vec<Vec<Coord>> = Vec::new();
    for s in changed {
        for c in SiteSet::sup_ball(s, r).iter() {
            centers.push(c.clone());
        }
    }
    centers.sort();
    centers.dedup();

    let mut missing: Vec<Vec<Coord>> = Vec::new();
    let mut total = 0.0;
    for c in &centers {
        let read_b = |site: &[Coord]| b.get(site).or_else(|| collar.get(site));
        let read_a = |site: &[Coord]| a.get(site).or_else(|| collar.get(site));
        match (
            g.eval(dim, &numeric, c, read_b),
            g.eval(dim, &numeric, c, read_a),
        ) {
            (Ok(vb), Ok(va)) => total += vb - va,
            (Err(Error::MissingCollar(mut m)), _) | (_, Err(Error::MissingCollar(mut m))) => {
                missing.append(&mut m);
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::MissingCollar(missing));
    }
    Ok(total)
}

/// Membership in the exchangeable relation, decided through the kernel of the
/// counting cocycle and cross-checked against the direct permutation test
/// (sorted multiset comparison). The two characterizations always agree.
pub fn exchangeable_equivalent(a: &Pattern, b: &Pattern) -> Result<bool> {
    check_shared_support(a, b)?;
    let (_, bdy) = a.support().frontier()?;
    let boundary_match = a.agrees_with(b, &bdy);

    let n_syms = a
        .values()
        .iter()
        .chain(b.values())
        .map(|&v| v as usize + 1)
        .max()
        .unwrap_or(1);
    let sharp = SiteFunction::counting(n_syms);
    let kernel_verdict = boundary_match
        && match cocycle_value(&sharp, a, b)? {
            GroupValue::Int(v) => v.iter().all(|&x| x == 0),
            GroupValue::Real(_) => unreachable!(),
        };

    let mut sa = a.values().to_vec();
    let mut sb = b.values().to_vec();
    sa.sort_unstable();
    sb.sort_unstable();
    let permutation_verdict = boundary_match && sa == sb;

    assert_eq!(
        kernel_verdict, permutation_verdict,
        "counting-kernel and permutation tests disagree"
    );
    Ok(kernel_verdict)
}

/// A clopen tail holonomy: swaps two boundary-matching admissible patterns on
/// a common support.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderSwap {
    source: Pattern,
    target: Pattern,
}

impl CylinderSwap {
    pub fn new(space: &ShiftSpace, source: Pattern, target: Pattern) -> Result<Self> {
        if source.support() != target.support() {
            return Err(Error::SupportMismatch(
                "swap source and target must share a support".into(),
            ));
        }
        let (_, bdy) = source.support().frontier()?;
        if !source.agrees_with(&target, &bdy) {
            return Err(Error::BoundaryMismatch);
        }
        if !space.is_locally_admissible(&source)? {
            return Err(Error::NotAdmissible("swap source".into()));
        }
        if !space.is_locally_admissible(&target)? {
            return Err(Error::NotAdmissible("swap target".into()));
        }
        Ok(CylinderSwap { source, target })
    }

    pub fn support(&self) -> &SiteSet {
        self.source.support()
    }

    pub fn source(&self) -> &Pattern {
        &self.source
    }

    pub fn target(&self) -> &Pattern {
        &self.target
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target
    }

    pub fn reversed(&self) -> CylinderSwap {
        CylinderSwap {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }

    /// The swap translated by `k` (acts on the cylinder over `support - k`).
    pub fn shifted(&self, k: &[Coord]) -> CylinderSwap {
        CylinderSwap {
            source: shift_pattern(&self.source, k),
            target: shift_pattern(&self.target, k),
        }
    }
}

/// Applies the holonomy to a configuration containing the swap support.
/// The configuration must restrict to the swap source.
pub fn apply_swap(swap: &CylinderSwap, x: &Pattern) -> Result<Pattern> {
    if !swap.support().is_subset_of(x.support()) {
        return Err(Error::SupportMismatch(
            "configuration does not cover the swap support".into(),
        ));
    }
    if &x.restrict(swap.support())? != swap.source() {
        return Err(Error::HolonomyDomain);
    }
    x.patched(swap.target())
}

/// The involution extension of a swap: swaps source and target cylinders,
/// identity elsewhere. This is the full-group element used in the shifted
/// holonomy defect.
pub fn apply_involution(swap: &CylinderSwap, x: &Pattern) -> Result<Pattern> {
    if !swap.support().is_subset_of(x.support()) {
        return Err(Error::SupportMismatch(
            "configuration does not cover the swap support".into(),
        ));
    }
    let restricted = x.restrict(swap.support())?;
    if &restricted == swap.source() {
        x.patched(swap.target())
    } else if &restricted == swap.target() {
        x.patched(swap.source())
    } else {
        Ok(x.clone())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EmbedBudget {
    /// Maximum sup-norm of the tried translations.
    pub max_radius: Coord,
    /// Extendability margin for the joint fill.
    pub margin: Coord,
}

impl Default for EmbedBudget {
    fn default() -> Self {
        EmbedBudget {
            max_radius: 16,
            margin: 1,
        }
    }
}

/// Result of embedding a swap next to a pattern: a joint admissible pattern
/// and its swapped partner, agreeing outside the translated swap interior.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub offset: Vec<Coord>,
    pub joint: Pattern,
    pub swapped: Pattern,
}

/// Finds a translation `k` making the swap support disjoint from `a`'s
/// support and a joint admissible pattern extending both `a` and the
/// translated swap source. The swapped partner agrees with the joint pattern
/// on the joint boundary, and every site-function cocycle takes the same
/// value on (joint, swapped) as on (source, target).
pub fn embed_tail_pair(
    space: &ShiftSpace,
    a: &Pattern,
    swap: &CylinderSwap,
    budget: EmbedBudget,
) -> Result<Embedding> {
    let dim = space.dim();
    if a.support().dim() != dim || swap.support().dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.support().dim(),
        });
    }
    for radius in 0..=budget.max_radius {
        // shell of translations at sup-norm `radius`, lex order
        for k in SiteSet::sup_ball(&vec![0; dim], radius).iter() {
            if k.iter().map(|c| c.abs()).max().unwrap_or(0) != radius {
                continue;
            }
            let neg: Vec<Coord> = k.iter().map(|c| -c).collect();
            let moved_source = shift_pattern(swap.source(), &neg);
            if !moved_source.support().is_disjoint_from(a.support()) {
                continue;
            }
            let fixed = match a.merge(&moved_source) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let window = fixed.support().clone();
            if let Some(joint) = first_pattern(
                space,
                &window,
                Some(&fixed),
                EnumOptions {
                    margin: budget.margin,
                    cap: u64::MAX,
                },
            )? {
                let moved_target = shift_pattern(swap.target(), &neg);
                let swapped = joint.patched(&moved_target)?;
                return Ok(Embedding {
                    offset: k.clone(),
                    joint,
                    swapped,
                });
            }
        }
    }
    Err(Error::BudgetExhausted(format!(
        "no embedding found within radius {}",
        budget.max_radius
    )))
}

/// Exact cylinder-probability evaluator; implemented by the 1D Markov
/// measures, the exact finite-volume tables and the product fields.
pub trait CylinderEvaluator {
    fn dim(&self) -> usize;
    fn prob(&self, p: &Pattern) -> Result<f64>;
}

/// Exact L1 distance between the indicator of the cylinder `[w]` and its
/// pull-back through the shift-conjugated swap involution,
/// computed from cylinder probabilities.
///
/// Vanishes identically as soon as the conjugated swap support is disjoint
/// from the observable window.
pub fn shifted_holonomy_defect(
    space: &ShiftSpace,
    mu: &dyn CylinderEvaluator,
    swap: &CylinderSwap,
    target_cylinder: &Pattern,
    n: &[Coord],
) -> Result<f64> {
    let dim = space.dim();
    if n.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: n.len(),
        });
    }
    // the conjugated involution acts on the swap support translated by -n
    let moved = swap.shifted(n);
    let w = target_cylinder.support();
    if moved.support().is_disjoint_from(w) {
        return Ok(0.0);
    }
    let union = w.union(moved.support())?;
    let mut total = 0.0;
    crate::enumerate::for_each_pattern(
        space,
        &union,
        None,
        EnumOptions::default(),
        |u| {
            let f_of = |p: &Pattern| -> f64 {
                if target_cylinder
                    .support()
                    .iter()
                    .all(|s| p.get(s) == target_cylinder.get(s))
                {
                    1.0
                } else {
                    0.0
                }
            };
            let fu = f_of(u);
            let gu = match apply_involution(&moved, u) {
                Ok(v) => f_of(&v),
                Err(_) => fu,
            };
            if (fu - gu).abs() > 0.0 {
                let p = mu.prob(u).unwrap_or(0.0);
                total += p * (fu - gu).abs();
            }
            std::ops::ControlFlow::Continue(())
        },
    )?;
    Ok(total)
}

/// Draws a uniformly random admissible partner for `a`: a pattern with the
/// same boundary values (used by the cross-check suites).
pub fn random_partner<R: Rng>(
    space: &ShiftSpace,
    a: &Pattern,
    rng: &mut R,
) -> Result<Option<Pattern>> {
    let (interior, bdy) = a.support().frontier()?;
    if interior.is_empty() {
        return Ok(Some(a.clone()));
    }
    let fixed = a.restrict(&bdy)?;
    crate::enumerate::sample_pattern(space, a.support(), Some(&fixed), 0, rng, 64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_patterns, EnumOptions};
    use crate::models;
    use crate::shift::SymbolId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interval_pattern(values: &[SymbolId]) -> Pattern {
        Pattern::new(
            SiteSet::interval(0, values.len() as Coord - 1).unwrap(),
            values.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn counting_cocycle_counts() {
        let sharp = SiteFunction::counting(2);
        let a = interval_pattern(&[0, 0]);
        let b = interval_pattern(&[1, 1]);
        let v = cocycle_value_int(&sharp, &a, &b).unwrap();
        assert_eq!(v, vec![-2, 2]); // 2(e_1 - e_0)
        assert_eq!(
            cocycle_value_int(&sharp, &a, &a).unwrap(),
            vec![0, 0]
        );
    }

    #[test]
    fn cocycle_additivity_and_antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = models::full_shift(1, 3);
        let f = SiteSet::interval(0, 5).unwrap();
        let g = SiteFunction::from_columns(vec![vec![1, -2], vec![0, 3], vec![2, 2]]).unwrap();
        let pats = enumerate_patterns(&x, &f, None, EnumOptions::default()).unwrap();
        for _ in 0..100 {
            let a = &pats[rng.gen_range(0..pats.len())];
            let b = &pats[rng.gen_range(0..pats.len())];
            let c = &pats[rng.gen_range(0..pats.len())];
            let ab = cocycle_value_int(&g, a, b).unwrap();
            let bc = cocycle_value_int(&g, b, c).unwrap();
            let ac = cocycle_value_int(&g, a, c).unwrap();
            let sum: Vec<i64> = ab.iter().zip(&bc).map(|(x, y)| x + y).collect();
            assert_eq!(sum, ac);
            let ba = cocycle_value_int(&g, b, a).unwrap();
            let neg: Vec<i64> = ab.iter().map(|x| -x).collect();
            assert_eq!(ba, neg);
        }
    }

    #[test]
    fn mismatched_support_is_error() {
        let sharp = SiteFunction::counting(2);
        let a = interval_pattern(&[0, 0]);
        let b = Pattern::new(SiteSet::interval(1, 2).unwrap(), vec![0, 0]).unwrap();
        assert!(cocycle_value(&sharp, &a, &b).is_err());
    }

    #[test]
    fn exchangeable_pair_by_swap_of_equal_symbols() {
        // interior permutation of a window word
        let a = interval_pattern(&[0, 0, 1, 0]);
        let b = interval_pattern(&[0, 1, 0, 0]);
        assert!(exchangeable_equivalent(&a, &b).unwrap());
        // different counts
        let c = interval_pattern(&[0, 1, 1, 0]);
        assert!(!exchangeable_equivalent(&a, &c).unwrap());
    }

    #[test]
    fn exchangeable_requires_boundary_match() {
        let a = interval_pattern(&[0, 1, 0]);
        let b = interval_pattern(&[0, 0, 1]); // same multiset, endpod differs
        assert!(!exchangeable_equivalent(&a, &b).unwrap());
    }

    #[test]
    fn random_pairs_cross_check() {
        // kernel test vs multiset test on random admissible pairs
        let x = models::golden_mean();
        let f = SiteSet::interval(0, 7).unwrap();
        let pats = enumerate_patterns(&x, &f, None, EnumOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let a = &pats[rng.gen_range(0..pats.len())];
            let b = &pats[rng.gen_range(0..pats.len())];
            // the assert inside exchangeable_equivalent is the cross-check
            let _ = exchangeable_equivalent(a, b).unwrap();
        }
    }

    #[test]
    fn swap_apply_and_reverse() {
        let x = models::golden_mean();
        let f = SiteSet::interval(1, 3).unwrap();
        let sw = CylinderSwap::new(
            &x,
            Pattern::new(f.clone(), vec![0, 1, 0]).unwrap(),
            Pattern::new(f.clone(), vec![0, 0, 0]).unwrap(),
        )
        .unwrap();
        // 0 010 0 -> 0 000 0
        let word = interval_pattern(&[0, 0, 1, 0, 0]);
        let out = apply_swap(&sw, &word).unwrap();
        assert_eq!(out.values(), &[0, 0, 0, 0, 0]);
        assert!(x.is_locally_admissible(&out).unwrap());
        let back = apply_swap(&sw.reversed(), &out).unwrap();
        assert_eq!(back, word);
        // wrong domain
        let other = interval_pattern(&[0, 0, 0, 1, 0]);
        assert!(matches!(
            apply_swap(&sw, &other),
            Err(Error::HolonomyDomain)
        ));
    }

    #[test]
    fn identity_swap_is_identity() {
        let x = models::golden_mean();
        let f = SiteSet::interval(0, 2).unwrap();
        let p = Pattern::new(f, vec![0, 1, 0]).unwrap();
        let sw = CylinderSwap::new(&x, p.clone(), p.clone()).unwrap();
        assert!(sw.is_identity());
        let out = apply_swap(&sw, &p).unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn swap_requires_boundary_agreement() {
        let x = models::golden_mean();
        let f = SiteSet::interval(0, 2).unwrap();
        let res = CylinderSwap::new(
            &x,
            Pattern::new(f.clone(), vec![0, 1, 0]).unwrap(),
            Pattern::new(f, vec![0, 0, 1]).unwrap(),
        );
        assert!(matches!(res, Err(Error::BoundaryMismatch)));
    }

    #[test]
    fn swap_preserves_admissibility_exhaustively() {
        // all boundary-matching pairs on golden-mean windows and small
        // iceberg boxes; applying the swap keeps admissibility
        let gm = models::golden_mean();
        let f = SiteSet::interval(0, 4).unwrap();
        let pats = enumerate_patterns(&gm, &f, None, EnumOptions::default()).unwrap();
        let (_, bdy) = f.frontier().unwrap();
        for a in &pats {
            for b in &pats {
                if a.agrees_with(b, &bdy) {
                    let sw = CylinderSwap::new(&gm, a.clone(), b.clone()).unwrap();
                    let out = apply_swap(&sw, a).unwrap();
                    assert!(gm.is_locally_admissible(&out).unwrap());
                }
            }
        }

        let ib = models::iceberg(2, 1);
        let f = SiteSet::box_range(&[0, 0], &[2, 2]).unwrap();
        let pats = enumerate_patterns(&ib, &f, None, EnumOptions::default()).unwrap();
        let (_, bdy) = f.frontier().unwrap();
        for a in pats.iter().step_by(7) {
            for b in pats.iter() {
                if a.agrees_with(b, &bdy) {
                    let sw = CylinderSwap::new(&ib, a.clone(), b.clone()).unwrap();
                    let out = apply_swap(&sw, a).unwrap();
                    assert!(ib.is_locally_admissible(&out).unwrap());
                }
            }
        }
    }

    #[test]
    fn markov_cocycle_three_spin_flip() {
        // single interior flip in an all-plus sea: three windows read the
        // flipped site, each contributes -2*beta
        let x = models::three_spin_ising();
        let g = LocalPotential::ThreeSpin { beta: 1.0 };
        let f = SiteSet::sup_ball(&[0, 0], 1);
        let plus = Pattern::constant(f.clone(), 1);
        let mut flipped = plus.clone();
        let patch = Pattern::from_pairs(2, &[(vec![0, 0], 0)]).unwrap();
        flipped = flipped.patched(&patch).unwrap();
        let collar = Pattern::constant(f.collar(1), 1);
        let v = markov_cocycle_value(&x, &g, &plus, &flipped, &collar).unwrap();
        assert!((v + 6.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn markov_cocycle_missing_collar_lists_sites() {
        let x = models::three_spin_ising();
        let g = LocalPotential::ThreeSpin { beta: 1.0 };
        let f = SiteSet::sup_ball(&[0, 0], 1);
        let plus = Pattern::constant(f.clone(), 1);
        let flipped = plus
            .patched(&Pattern::from_pairs(2, &[(vec![0, 0], 0)]).unwrap())
            .unwrap();
        let empty = Pattern::empty(2);
        match markov_cocycle_value(&x, &g, &plus, &flipped, &empty) {
            Err(Error::MissingCollar(sites)) => assert!(!sites.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn site_potential_markov_cocycle_matches_plain_cocycle() {
        let x = models::golden_mean();
        let phi = vec![0.3, -0.7];
        let g = LocalPotential::Site { values: phi.clone() };
        let gf = SiteFunction::Real { values: phi };
        let f = SiteSet::interval(0, 4).unwrap();
        let pats = enumerate_patterns(&x, &f, None, EnumOptions::default()).unwrap();
        let (_, bdy) = f.frontier().unwrap();
        let collar = Pattern::constant(f.collar(1), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 100 {
            let a = &pats[rng.gen_range(0..pats.len())];
            let b = &pats[rng.gen_range(0..pats.len())];
            if !a.agrees_with(b, &bdy) {
                continue;
            }
            checked += 1;
            let v1 = markov_cocycle_value(&x, &g, a, b, &collar).unwrap();
            let v2 = match cocycle_value(&gf, a, b).unwrap() {
                GroupValue::Real(v) => v,
                _ => unreachable!(),
            };
            assert!((v1 - v2).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_in_full_shift_succeeds_immediately() {
        let x = models::full_shift(1, 2);
        let a = Pattern::from_pairs(1, &[(vec![0], 1)]).unwrap();
        let b_sup = SiteSet::interval(0, 2).unwrap();
        let sw = CylinderSwap::new(
            &x,
            Pattern::new(b_sup.clone(), vec![0, 1, 0]).unwrap(),
            Pattern::new(b_sup, vec![0, 0, 0]).unwrap(),
        )
        .unwrap();
        let emb = embed_tail_pair(&x, &a, &sw, EmbedBudget::default()).unwrap();
        assert!(emb.joint.support().len() == 4);
        assert_eq!(emb.joint.get(&[0]), Some(1));
    }

    #[test]
    fn embed_golden_mean_and_cocycle_preserved() {
        let x = models::golden_mean();
        let a = Pattern::from_pairs(1, &[(vec![0], 1)]).unwrap();
        let b_sup = SiteSet::interval(0, 2).unwrap();
        let sw = CylinderSwap::new(
            &x,
            Pattern::new(b_sup.clone(), vec![0, 1, 0]).unwrap(),
            Pattern::new(b_sup, vec![0, 0, 0]).unwrap(),
        )
        .unwrap();
        let emb = embed_tail_pair(&x, &a, &sw, EmbedBudget::default()).unwrap();
        assert!(x.is_locally_admissible(&emb.joint).unwrap());
        assert!(x.is_locally_admissible(&emb.swapped).unwrap());
        // boundary agreement of the joint pair
        let (_, bdy) = emb.joint.support().frontier().unwrap();
        assert!(emb.joint.agrees_with(&emb.swapped, &bdy));
        // cocycle preservation for the counting function and a random one
        let sharp = SiteFunction::counting(2);
        assert_eq!(
            cocycle_value_int(&sharp, &emb.joint, &emb.swapped).unwrap(),
            cocycle_value_int(&sharp, sw.source(), sw.target()).unwrap()
        );
        let g = SiteFunction::from_columns(vec![vec![2, -1], vec![5, 7]]).unwrap();
        assert_eq!(
            cocycle_value_int(&g, &emb.joint, &emb.swapped).unwrap(),
            cocycle_value_int(&g, sw.source(), sw.target()).unwrap()
        );
    }
}
