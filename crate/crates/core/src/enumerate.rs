//! Backtracking enumeration of locally admissible patterns.
//!
//! Enumeration is over a window `F`, optionally pinned by a partial pattern,
//! and filtered by margin-extendability: a pattern on `F` is kept only if it
//! extends to a locally admissible pattern on `F` dilated by `m`. For 1D
//! shifts and for models with a safe symbol, small margins make this exact
//! global admissibility; `m = 0` means plain local admissibility.
//!
//! Patterns are visited in lexicographic order of their value tuples (sites in
//! canonical order), so enumeration is deterministic and mergeable.

use std::ops::ControlFlow;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Coord, SiteSet};
use crate::shift::{Constraint, Pattern, ShiftSpace, SymbolId};

#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    /// Dilation radius used for the extendability check.
    pub margin: Coord,
    /// Hard cap on emitted patterns.
    pub cap: u64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            margin: 0,
            cap: 10_000_000,
        }
    }
}

impl EnumOptions {
    pub fn with_margin(margin: Coord) -> Self {
        EnumOptions {
            margin,
            ..Default::default()
        }
    }
}

struct Ctx<'a> {
    space: &'a ShiftSpace,
    n_symbols: usize,
    /// window indices into `domain`, then margin indices; assignment order
    order: Vec<usize>,
    n_window: usize,
    window: SiteSet,
    window_domain_idx: Vec<usize>,
    fixed: Vec<Option<SymbolId>>,
    /// per domain index: (axis, neighbor domain index, neighbor_is_forward)
    axis_nbrs: Vec<Vec<(usize, usize, bool)>>,
    /// neighborhood-table windows fully inside the domain: (center, ring members)
    table_windows: Vec<(usize, Vec<usize>)>,
    /// per domain index: table windows touching it
    site_windows: Vec<Vec<usize>>,
}

impl<'a> Ctx<'a> {
    fn build(
        space: &'a ShiftSpace,
        window: &SiteSet,
        fixed: Option<&Pattern>,
        margin: Coord,
    ) -> Result<Self> {
        if window.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: window.dim(),
            });
        }
        if let Some(f) = fixed {
            if !f.support().is_subset_of(window) {
                return Err(Error::SupportMismatch(
                    "fixed pattern must be supported inside the window".into(),
                ));
            }
            for &v in f.values() {
                if v as usize >= space.symbol_count() {
                    return Err(Error::SymbolOutOfRange {
                        symbol: v as usize,
                        alphabet: space.symbol_count(),
                    });
                }
            }
        }
        let domain = window.dilate(margin);
        let n = domain.len();
        let mut fixed_vals: Vec<Option<SymbolId>> = vec![None; n];
        if let Some(f) = fixed {
            for (s, &v) in f.support().iter().zip(f.values()) {
                fixed_vals[domain.index_of(s).unwrap()] = Some(v);
            }
        }
        let mut window_domain_idx = Vec::with_capacity(window.len());
        for s in window.iter() {
            window_domain_idx.push(domain.index_of(s).unwrap());
        }
        let mut order = window_domain_idx.clone();
        for (i, s) in domain.iter().enumerate() {
            if !window.contains(s) {
                order.push(i);
            }
        }
        let mut axis_nbrs = vec![Vec::new(); n];
        for (i, s) in domain.iter().enumerate() {
            for axis in 0..space.dim() {
                let mut fwd = s.clone();
                fwd[axis] += 1;
                if let Some(j) = domain.index_of(&fwd) {
                    axis_nbrs[i].push((axis, j, true));
                    axis_nbrs[j].push((axis, i, false));
                }
            }
        }
        let mut table_windows = Vec::new();
        let mut site_windows = vec![Vec::new(); n];
        if let Constraint::Table(tbl) = space.constraint() {
            for (c, s) in domain.iter().enumerate() {
                let mut ring = Vec::with_capacity(tbl.offsets.len());
                let mut complete = true;
                for o in &tbl.offsets {
                    let nb: Vec<Coord> = s.iter().zip(o).map(|(a, b)| a + b).collect();
                    match domain.index_of(&nb) {
                        Some(j) => ring.push(j),
                        None => {
                            complete = false;
                            break;
                        }
                    }
                }
                if complete {
                    let id = table_windows.len();
                    site_windows[c].push(id);
                    for &j in &ring {
                        site_windows[j].push(id);
                    }
                    table_windows.push((c, ring));
                }
            }
        }
        Ok(Ctx {
            space,
            n_symbols: space.symbol_count(),
            order,
            n_window: window.len(),
            window: window.clone(),
            window_domain_idx,
            fixed: fixed_vals,
            axis_nbrs,
            table_windows,
            site_windows,
        })
    }

    /// Is symbol `v` consistent at domain slot `i` given current assignments?
    fn consistent(&self, vals: &[Option<SymbolId>], i: usize, v: SymbolId) -> bool {
        for &(axis, j, fwd) in &self.axis_nbrs[i] {
            if let Some(w) = vals[j] {
                let ok = if fwd {
                    self.space.axis_allowed(axis, v, w)
                } else {
                    self.space.axis_allowed(axis, w, v)
                };
                if !ok {
                    return false;
                }
            }
        }
        if let Constraint::Table(tbl) = self.space.constraint() {
            for &wid in &self.site_windows[i] {
                let (c, ring) = &self.table_windows[wid];
                let center = if *c == i { Some(v) } else { vals[*c] };
                let center = match center {
                    Some(x) => x,
                    None => continue,
                };
                let mut complete = true;
                let mut ring_vals = Vec::with_capacity(ring.len());
                for &j in ring {
                    let rv = if j == i { Some(v) } else { vals[j] };
                    match rv {
                        Some(x) => ring_vals.push(x),
                        None => {
                            complete = false;
                            break;
                        }
                    }
                }
                if complete && !tbl.admissible.contains(&(center, ring_vals)) {
                    return false;
                }
            }
        }
        true
    }

    fn margin_extends(&self, vals: &mut Vec<Option<SymbolId>>, pos: usize) -> bool {
        if pos == self.order.len() {
            return true;
        }
        let i = self.order[pos];
        let candidates: Box<dyn Iterator<Item = SymbolId>> = match self.fixed[i] {
            Some(v) => Box::new(std::iter::once(v)),
            None => Box::new((0..self.n_symbols as u16).map(|v| v as SymbolId)),
        };
        for v in candidates {
            if self.consistent(vals, i, v) {
                vals[i] = Some(v);
                if self.margin_extends(vals, pos + 1) {
                    vals[i] = None;
                    return true;
                }
                vals[i] = None;
            }
        }
        false
    }

    fn emit(&self, vals: &[Option<SymbolId>]) -> Pattern {
        let values = self
            .window_domain_idx
            .iter()
            .map(|&i| vals[i].unwrap())
            .collect();
        Pattern::new(self.window.clone(), values).unwrap()
    }

    fn dfs<F>(
        &self,
        vals: &mut Vec<Option<SymbolId>>,
        pos: usize,
        emitted: &mut u64,
        cap: u64,
        visit: &mut F,
    ) -> Result<ControlFlow<()>>
    where
        F: FnMut(&Pattern) -> ControlFlow<()>,
    {
        if pos == self.n_window {
            if self.margin_extends(vals, pos) {
                if *emitted >= cap {
                    return Err(Error::EnumerationCap { emitted: *emitted });
                }
                *emitted += 1;
                let p = self.emit(vals);
                return Ok(visit(&p));
            }
            return Ok(ControlFlow::Continue(()));
        }
        let i = self.order[pos];
        let candidates: Vec<SymbolId> = match self.fixed[i] {
            Some(v) => vec![v],
            None => (0..self.n_symbols as u16).map(|v| v as SymbolId).collect(),
        };
        for v in candidates {
            if self.consistent(vals, i, v) {
                vals[i] = Some(v);
                let flow = self.dfs(vals, pos + 1, emitted, cap, visit)?;
                vals[i] = None;
                if flow.is_break() {
                    return Ok(ControlFlow::Break(()));
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }
}

/// Visits each admissible pattern on `window` (agreeing with `fixed`,
/// margin-extendable) in lexicographic order; returns the emission count.
pub fn for_each_pattern<F>(
    space: &ShiftSpace,
    window: &SiteSet,
    fixed: Option<&Pattern>,
    opts: EnumOptions,
    mut visit: F,
) -> Result<u64>
where
    F: FnMut(&Pattern) -> ControlFlow<()>,
{
    let ctx = Ctx::build(space, window, fixed, opts.margin)?;
    let mut vals = vec![None; ctx.axis_nbrs.len()];
    let mut emitted = 0;
    let _ = ctx.dfs(&mut vals, 0, &mut emitted, opts.cap, &mut visit)?;
    Ok(emitted)
}

pub fn enumerate_patterns(
    space: &ShiftSpace,
    window: &SiteSet,
    fixed: Option<&Pattern>,
    opts: EnumOptions,
) -> Result<Vec<Pattern>> {
    let mut out = Vec::new();
    for_each_pattern(space, window, fixed, opts, |p| {
        out.push(p.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

pub fn count_patterns(
    space: &ShiftSpace,
    window: &SiteSet,
    fixed: Option<&Pattern>,
    opts: EnumOptions,
) -> Result<u64> {
    for_each_pattern(space, window, fixed, opts, |_| ControlFlow::Continue(()))
}

pub fn first_pattern(
    space: &ShiftSpace,
    window: &SiteSet,
    fixed: Option<&Pattern>,
    opts: EnumOptions,
) -> Result<Option<Pattern>> {
    let mut found = None;
    for_each_pattern(space, window, fixed, opts, |p| {
        found = Some(p.clone());
        ControlFlow::Break(())
    })?;
    Ok(found)
}

/// Does `p` extend to a locally admissible pattern on its support dilated by
/// `margin`?
pub fn is_extendable(space: &ShiftSpace, p: &Pattern, margin: Coord) -> Result<bool> {
    Ok(first_pattern(
        space,
        p.support(),
        Some(p),
        EnumOptions {
            margin,
            cap: u64::MAX,
        },
    )?
    .is_some())
}

/// Draws an admissible, margin-extendable pattern on `window`.
///
/// Uniform rejection is attempted first (`rejection_tries` uniform draws);
/// when the admissible fraction is too small for rejection, falls back to a
/// randomized backtracking fill, which samples with broad (not exactly
/// uniform) coverage.
pub fn sample_pattern<R: Rng>(
    space: &ShiftSpace,
    window: &SiteSet,
    fixed: Option<&Pattern>,
    margin: Coord,
    rng: &mut R,
    rejection_tries: u32,
) -> Result<Option<Pattern>> {
    let n = space.symbol_count();
    'rejection: for _ in 0..rejection_tries {
        let mut values = Vec::with_capacity(window.len());
        for s in window.iter() {
            let v = match fixed.and_then(|f| f.get(s)) {
                Some(v) => v,
                None => rng.gen_range(0..n) as SymbolId,
            };
            values.push(v);
        }
        let p = Pattern::new(window.clone(), values)?;
        if !space.is_locally_admissible(&p)? {
            continue 'rejection;
        }
        if margin > 0 && !is_extendable(space, &p, margin)? {
            continue 'rejection;
        }
        return Ok(Some(p));
    }
    random_fill(space, window, fixed, margin, rng)
}

/// Randomized backtracking fill: first admissible completion found with a
/// per-site random symbol order.
pub fn random_fill<R: Rng>(
    space: &ShiftSpace,
    window: &SiteSet,
    fixed: Option<&Pattern>,
    margin: Coord,
    rng: &mut R,
) -> Result<Option<Pattern>> {
    let ctx = Ctx::build(space, window, fixed, margin)?;
    let mut vals: Vec<Option<SymbolId>> = vec![None; ctx.axis_nbrs.len()];

    fn go<R: Rng>(
        ctx: &Ctx,
        vals: &mut Vec<Option<SymbolId>>,
        pos: usize,
        rng: &mut R,
    ) -> bool {
        if pos == ctx.n_window {
            return ctx.margin_extends(vals, pos);
        }
        let i = ctx.order[pos];
        let mut candidates: Vec<SymbolId> = match ctx.fixed[i] {
            Some(v) => vec![v],
            None => (0..ctx.n_symbols as u16).map(|v| v as SymbolId).collect(),
        };
        // Fisher-Yates
        for j in (1..candidates.len()).rev() {
            candidates.swap(j, rng.gen_range(0..=j));
        }
        for v in candidates {
            if ctx.consistent(vals, i, v) {
                vals[i] = Some(v);
                if go(ctx, vals, pos + 1, rng) {
                    return true;
                }
                vals[i] = None;
            }
        }
        false
    }

    if go(&ctx, &mut vals, 0, rng) {
        Ok(Some(ctx.emit(&vals)))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_shift_counts() {
        let x = models::full_shift(1, 3);
        let f = SiteSet::interval(0, 3).unwrap();
        assert_eq!(
            count_patterns(&x, &f, None, EnumOptions::default()).unwrap(),
            81
        );
    }

    #[test]
    fn golden_mean_window_three() {
        let x = models::golden_mean();
        let f = SiteSet::interval(0, 2).unwrap();
        let pats = enumerate_patterns(&x, &f, None, EnumOptions::default()).unwrap();
        let words: Vec<Vec<SymbolId>> = pats.iter().map(|p| p.values().to_vec()).collect();
        assert_eq!(
            words,
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![1, 0, 0],
                vec![1, 0, 1]
            ]
        );
    }

    #[test]
    fn iceberg_pairs() {
        // 9 ordered pairs minus (-1,+1) and (+1,-1)
        let x = models::iceberg(2, 1);
        let f = SiteSet::new(2, vec![vec![0, 0], vec![1, 0]]).unwrap();
        assert_eq!(
            count_patterns(&x, &f, None, EnumOptions::default()).unwrap(),
            7
        );
    }

    #[test]
    fn margin_monotonicity() {
        let x = models::golden_mean();
        let f = SiteSet::interval(0, 4).unwrap();
        let mut prev = u64::MAX;
        for m in 0..3 {
            let c = count_patterns(&x, &f, None, EnumOptions::with_margin(m)).unwrap();
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn margin_subset() {
        let x = models::golden_mean();
        let f = SiteSet::interval(0, 4).unwrap();
        let with_margin: Vec<_> =
            enumerate_patterns(&x, &f, None, EnumOptions::with_margin(2)).unwrap();
        let without: Vec<_> =
            enumerate_patterns(&x, &f, None, EnumOptions::default()).unwrap();
        for p in &with_margin {
            assert!(without.contains(p));
        }
    }

    #[test]
    fn fixed_values_respected() {
        let x = models::golden_mean();
        let f = SiteSet::interval(0, 2).unwrap();
        let fixed = Pattern::from_pairs(1, &[(vec![1], 1)]).unwrap();
        let pats = enumerate_patterns(&x, &f, Some(&fixed), EnumOptions::default()).unwrap();
        // middle symbol pinned to 1 forces 0 on both sides
        assert_eq!(pats.len(), 1);
        assert_eq!(pats[0].values(), &[0, 1, 0]);
    }

    #[test]
    fn cap_error_carries_partial_count() {
        let x = models::full_shift(1, 2);
        let f = SiteSet::interval(0, 9).unwrap();
        let err = count_patterns(
            &x,
            &f,
            None,
            EnumOptions {
                margin: 0,
                cap: 100,
            },
        )
        .unwrap_err();
        match err {
            Error::EnumerationCap { emitted } => assert_eq!(emitted, 100),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn checkerboard_box_has_two_patterns() {
        let x = models::checkerboard(2);
        let f = SiteSet::box_range(&[0, 0], &[3, 3]).unwrap();
        assert_eq!(
            count_patterns(&x, &f, None, EnumOptions::with_margin(2)).unwrap(),
            2
        );
    }

    #[test]
    fn sampled_patterns_are_admissible() {
        let x = models::iceberg(2, 1);
        let f = SiteSet::box_range(&[-2, -2], &[2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = sample_pattern(&x, &f, None, 1, &mut rng, 10_000)
                .unwrap()
                .expect("sample found");
            assert!(x.is_locally_admissible(&p).unwrap());
        }
    }

    #[test]
    fn onedim_counts_match_fibonacci() {
        // golden mean: |X_[0,n)| = F(n+2)
        let x = models::golden_mean();
        let mut fib = vec![1u64, 2];
        for i in 2..12 {
            let v = fib[i - 1] + fib[i - 2];
            fib.push(v);
        }
        for n in 1..10usize {
            let f = SiteSet::interval(0, n as Coord - 1).unwrap();
            assert_eq!(
                count_patterns(&x, &f, None, EnumOptions::default()).unwrap(),
                fib[n]
            );
        }
    }
}
