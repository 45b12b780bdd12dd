//! Shift spaces with nearest-neighbor constraints, and finite patterns.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ring_offsets, Coord, Site, SiteSet};

pub type SymbolId = u8;

/// Nearest-neighbor constraint of a shift space.
#[derive(Clone, Debug)]
pub enum Constraint {
    /// `allowed[axis][s][t]` permits the ordered pair `(x_n, x_{n+e_axis}) = (s, t)`.
    ///
    /// This is the canonical form; every built-in model uses it.
    AxisPairs(Vec<Vec<Vec<bool>>>),
    /// Explicit admissible set of (center, punctured-unit-ball values).
    /// Supported for d <= 2 and alphabets of at most 8 symbols.
    Table(NeighborhoodTable),
}

#[derive(Clone, Debug)]
pub struct NeighborhoodTable {
    /// Offsets of the punctured unit ball, lex order.
    pub offsets: Vec<Site>,
    /// Admissible (center, ring values) combinations.
    pub admissible: HashSet<(SymbolId, Vec<SymbolId>)>,
}

/// A topological Markov shift on `S^{Z^d}`, described by its alphabet and
/// nearest-neighbor constraint.
#[derive(Clone, Debug)]
pub struct ShiftSpace {
    dim: usize,
    alphabet: Vec<String>,
    constraint: Constraint,
}

impl ShiftSpace {
    pub fn new_axis_pairs(
        dim: usize,
        alphabet: Vec<String>,
        allowed: Vec<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        let n = alphabet.len();
        if n == 0 {
            return Err(Error::InvalidModel("alphabet must be nonempty".into()));
        }
        if n > SymbolId::MAX as usize + 1 {
            return Err(Error::InvalidModel("alphabet too large".into()));
        }
        if allowed.len() != dim {
            return Err(Error::InvalidModel(format!(
                "constraint.allowed: expected {dim} axis matrices, got {}",
                allowed.len()
            )));
        }
        for (axis, m) in allowed.iter().enumerate() {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidModel(format!(
                    "constraint.allowed[{axis}]: matrix must be {n}x{n}"
                )));
            }
            for s in 0..n {
                if !m[s].iter().any(|&x| x) {
                    return Err(Error::InvalidModel(format!(
                        "symbol `{}` has no allowed successor on axis {axis}",
                        alphabet[s]
                    )));
                }
                if !(0..n).any(|t| m[t][s]) {
                    return Err(Error::InvalidModel(format!(
                        "symbol `{}` has no allowed predecessor on axis {axis}",
                        alphabet[s]
                    )));
                }
            }
        }
        Ok(ShiftSpace {
            dim,
            alphabet,
            constraint: Constraint::AxisPairs(allowed),
        })
    }

    pub fn new_table(
        dim: usize,
        alphabet: Vec<String>,
        admissible: HashSet<(SymbolId, Vec<SymbolId>)>,
    ) -> Result<Self> {
        if dim > 2 || alphabet.len() > 8 {
            return Err(Error::InvalidModel(
                "neighborhood tables are supported for d <= 2 and |S| <= 8 only".into(),
            ));
        }
        let offsets = ring_offsets(dim);
        for (c, ring) in &admissible {
            if *c as usize >= alphabet.len() || ring.len() != offsets.len() {
                return Err(Error::InvalidModel(
                    "table entry shape does not match alphabet/offsets".into(),
                ));
            }
        }
        if admissible.is_empty() {
            return Err(Error::InvalidModel("empty neighborhood table".into()));
        }
        Ok(ShiftSpace {
            dim,
            alphabet,
            constraint: Constraint::Table(NeighborhoodTable { offsets, admissible }),
        })
    }

    pub fn full_shift(dim: usize, alphabet: Vec<String>) -> Self {
        let n = alphabet.len();
        let allowed = vec![vec![vec![true; n]; n]; dim];
        ShiftSpace {
            dim,
            alphabet,
            constraint: Constraint::AxisPairs(allowed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn symbol_count(&self) -> usize {
        self.alphabet.len()
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn symbol_index(&self, name: &str) -> Result<SymbolId> {
        self.alphabet
            .iter()
            .position(|s| s == name)
            .map(|i| i as SymbolId)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn symbol_name(&self, id: SymbolId) -> &str {
        &self.alphabet[id as usize]
    }

    /// Numeric reading of the alphabet (requires every symbol name to parse as
    /// an integer, e.g. the iceberg spins "-1", "0", "+1").
    pub fn numeric_values(&self) -> Result<Vec<f64>> {
        self.alphabet
            .iter()
            .map(|s| {
                s.parse::<i64>().map(|v| v as f64).map_err(|_| {
                    Error::InvalidPotential(format!("symbol `{s}` has no numeric value"))
                })
            })
            .collect()
    }

    pub fn axis_allowed(&self, axis: usize, s: SymbolId, t: SymbolId) -> bool {
        match &self.constraint {
            Constraint::AxisPairs(m) => m[axis][s as usize][t as usize],
            // tables have no per-axis factorization; treat pairs as unconstrained
            Constraint::Table(_) => true,
        }
    }

    fn check_symbols(&self, p: &Pattern) -> Result<()> {
        let n = self.symbol_count();
        for &v in p.values() {
            if v as usize >= n {
                return Err(Error::SymbolOutOfRange {
                    symbol: v as usize,
                    alphabet: n,
                });
            }
        }
        Ok(())
    }

    /// Local admissibility: every constrained pair (or full neighborhood)
    /// lying inside the support must satisfy the constraint. Sites whose
    /// neighborhood exits the support impose no condition.
    pub fn is_locally_admissible(&self, p: &Pattern) -> Result<bool> {
        if p.support().dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.support().dim(),
            });
        }
        self.check_symbols(p)?;
        match &self.constraint {
            Constraint::AxisPairs(m) => {
                for (i, site) in p.support().iter().enumerate() {
                    let s = p.values()[i] as usize;
                    for axis in 0..self.dim {
                        let mut nb = site.clone();
                        nb[axis] += 1;
                        if let Some(j) = p.support().index_of(&nb) {
                            let t = p.values()[j] as usize;
                            if !m[axis][s][t] {
                                return Ok(false);
                            }
                        }
                    }
                }
                Ok(true)
            }
            Constraint::Table(tbl) => {
                for (i, site) in p.support().iter().enumerate() {
                    let c = p.values()[i];
                    let mut ring = Vec::with_capacity(tbl.offsets.len());
                    let mut complete = true;
                    for o in &tbl.offsets {
                        let nb: Site = site.iter().zip(o).map(|(a, b)| a + b).collect();
                        match p.get(&nb) {
                            Some(v) => ring.push(v),
                            None => {
                                complete = false;
                                break;
                            }
                        }
                    }
                    if complete && !tbl.admissible.contains(&(c, ring)) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// A finite configuration: symbol values on a finite support.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    support: SiteSet,
    values: Vec<SymbolId>,
}

impl std::fmt::Debug for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Pattern{{")?;
        for (s, v) in self.support.iter().zip(&self.values) {
            write!(f, " {:?}->{}", s, v)?;
        }
        write!(f, " }}")
    }
}

impl Pattern {
    pub fn new(support: SiteSet, values: Vec<SymbolId>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::SupportMismatch(format!(
                "{} sites but {} values",
                support.len(),
                values.len()
            )));
        }
        Ok(Pattern { support, values })
    }

    pub fn empty(dim: usize) -> Self {
        Pattern {
            support: SiteSet::empty(dim),
            values: Vec::new(),
        }
    }

    pub fn from_pairs(dim: usize, pairs: &[(Site, SymbolId)]) -> Result<Self> {
        let support = SiteSet::new(dim, pairs.iter().map(|(s, _)| s.clone()).collect())?;
        if support.len() != pairs.len() {
            return Err(Error::SupportMismatch("duplicate sites".into()));
        }
        let mut values = vec![0; support.len()];
        for (s, v) in pairs {
            values[support.index_of(s).unwrap()] = *v;
        }
        Ok(Pattern { support, values })
    }

    /// Constant pattern on a support.
    pub fn constant(support: SiteSet, value: SymbolId) -> Self {
        let values = vec![value; support.len()];
        Pattern { support, values }
    }

    pub fn support(&self) -> &SiteSet {
        &self.support
    }

    pub fn values(&self) -> &[SymbolId] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn get(&self, site: &[Coord]) -> Option<SymbolId> {
        self.support.index_of(site).map(|i| self.values[i])
    }

    /// Restriction to a subset of the support.
    pub fn restrict(&self, to: &SiteSet) -> Result<Pattern> {
        let mut values = Vec::with_capacity(to.len());
        for s in to.iter() {
            match self.get(s) {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::SupportMismatch(format!(
                        "site {s:?} not in the pattern support"
                    )))
                }
            }
        }
        Ok(Pattern { support: to.clone(), values })
    }

    pub fn agrees_with(&self, other: &Pattern, on: &SiteSet) -> bool {
        on.iter().all(|s| self.get(s) == other.get(s))
    }

    /// Union of two patterns; overlapping sites must agree.
    pub fn merge(&self, other: &Pattern) -> Result<Pattern> {
        let support = self.support.union(other.support())?;
        let mut values = Vec::with_capacity(support.len());
        for s in support.iter() {
            match (self.get(s), other.get(s)) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::SupportMismatch(format!(
                        "patterns disagree at {s:?}"
                    )))
                }
                (Some(a), _) => values.push(a),
                (None, Some(b)) => values.push(b),
                (None, None) => unreachable!(),
            }
        }
        Ok(Pattern { support, values })
    }

    /// Copy of `self` with `patch` values overriding on the patch support
    /// (patch support must be contained in the support).
    pub fn patched(&self, patch: &Pattern) -> Result<Pattern> {
        if !patch.support().is_subset_of(&self.support) {
            return Err(Error::SupportMismatch(
                "patch support exceeds the pattern support".into(),
            ));
        }
        let mut out = self.clone();
        for (s, &v) in patch.support.iter().zip(patch.values()) {
            let i = out.support.index_of(s).unwrap();
            out.values[i] = v;
        }
        Ok(out)
    }

    /// Multiset of symbol counts.
    pub fn symbol_counts(&self, alphabet: usize) -> Vec<u64> {
        let mut counts = vec![0u64; alphabet];
        for &v in &self.values {
            counts[v as usize] += 1;
        }
        counts
    }
}

/// The shift `T_k` read on patterns: the result lives on `F - k` and reads the
/// original values at `n + k`.
pub fn shift_pattern(p: &Pattern, k: &[Coord]) -> Pattern {
    let neg: Vec<Coord> = k.iter().map(|c| -c).collect();
    let support = p.support().translate(&neg);
    // translation preserves lex order, so values stay aligned
    Pattern {
        support,
        values: p.values().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn shift_identity_and_inverse() {
        let p = Pattern::from_pairs(2, &[(vec![0, 0], 1), (vec![1, 2], 0)]).unwrap();
        assert_eq!(shift_pattern(&p, &[0, 0]), p);
        let q = shift_pattern(&shift_pattern(&p, &[3, -1]), &[-3, 1]);
        assert_eq!(q, p);
    }

    #[test]
    fn shift_single_site() {
        // value at the origin moves to -e_1
        let p = Pattern::from_pairs(1, &[(vec![0], 1)]).unwrap();
        let q = shift_pattern(&p, &[1]);
        assert_eq!(q.get(&[-1]), Some(1));
        assert_eq!(q.support().len(), 1);
    }

    #[test]
    fn golden_mean_words() {
        let x = models::golden_mean();
        let ok = Pattern::new(SiteSet::interval(0, 3).unwrap(), vec![0, 1, 0, 1]).unwrap();
        let bad = Pattern::new(SiteSet::interval(0, 2).unwrap(), vec![0, 1, 1]).unwrap();
        assert!(x.is_locally_admissible(&ok).unwrap());
        assert!(!x.is_locally_admissible(&bad).unwrap());
    }

    #[test]
    fn iceberg_pair() {
        let x = models::iceberg(2, 1);
        let minus = x.symbol_index("-1").unwrap();
        let plus = x.symbol_index("+1").unwrap();
        let p = Pattern::from_pairs(2, &[(vec![0, 0], minus), (vec![0, 1], plus)]).unwrap();
        assert!(!x.is_locally_admissible(&p).unwrap());
        let zero = x.symbol_index("0").unwrap();
        let q = Pattern::from_pairs(2, &[(vec![0, 0], minus), (vec![0, 1], zero)]).unwrap();
        assert!(x.is_locally_admissible(&q).unwrap());
    }

    #[test]
    fn full_shift_admits_everything() {
        let x = models::full_shift(2, 3);
        let f = SiteSet::box_range(&[0, 0], &[1, 1]).unwrap();
        let p = Pattern::new(f, vec![0, 1, 2, 0]).unwrap();
        assert!(x.is_locally_admissible(&p).unwrap());
    }

    #[test]
    fn out_of_range_symbol_is_error() {
        let x = models::golden_mean();
        let p = Pattern::from_pairs(1, &[(vec![0], 7)]).unwrap();
        assert!(x.is_locally_admissible(&p).is_err());
    }

    #[test]
    fn patched_and_merge() {
        let f = SiteSet::interval(0, 2).unwrap();
        let p = Pattern::new(f.clone(), vec![0, 1, 0]).unwrap();
        let patch = Pattern::from_pairs(1, &[(vec![1], 0)]).unwrap();
        let q = p.patched(&patch).unwrap();
        assert_eq!(q.values(), &[0, 0, 0]);
        let r = Pattern::from_pairs(1, &[(vec![3], 1)]).unwrap();
        let m = p.merge(&r).unwrap();
        assert_eq!(m.support().len(), 4);
    }
}
