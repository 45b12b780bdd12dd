//! Finite subsets of the integer lattice.
//!
//! Everything downstream (patterns, enumeration, windows, volumes) is built on
//! [`SiteSet`]: a finite, lexicographically sorted, duplicate-free set of
//! integer vectors. The sorted order is the canonical iteration order, so all
//! enumerations are deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Coord = i64;
/// A point of the d-dimensional integer lattice.
pub type Site = Vec<Coord>;

/// A finite set of lattice sites with a fixed dimension and canonical
/// (lexicographic) order.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SiteSet {
    dim: usize,
    sites: Vec<Site>,
}

impl std::fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SiteSet(d={}, n={})", self.dim, self.sites.len())
    }
}

impl SiteSet {
    pub fn new(dim: usize, mut sites: Vec<Site>) -> Result<Self> {
        for s in &sites {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
        }
        sites.sort();
        sites.dedup();
        Ok(SiteSet { dim, sites })
    }

    pub fn empty(dim: usize) -> Self {
        SiteSet { dim, sites: Vec::new() }
    }

    pub fn singleton(site: Site) -> Self {
        let dim = site.len();
        SiteSet { dim, sites: vec![site] }
    }

    /// Axis-aligned box `[lo_i, hi_i]` (inclusive) in each coordinate.
    pub fn box_range(lo: &[Coord], hi: &[Coord]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let dim = lo.len();
        for i in 0..dim {
            if lo[i] > hi[i] {
                return Err(Error::InvalidParameter(format!(
                    "box axis {i}: lower bound {} exceeds upper bound {}",
                    lo[i], hi[i]
                )));
            }
        }
        let mut sites = Vec::new();
        let mut cur: Site = lo.to_vec();
        loop {
            sites.push(cur.clone());
            // odometer increment, most significant coordinate first
            let mut axis = dim;
            loop {
                if axis == 0 {
                    // sites are generated in lex order already
                    sites.sort();
                    return Ok(SiteSet { dim, sites });
                }
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    for a in axis + 1..dim {
                        cur[a] = lo[a];
                    }
                    break;
                }
            }
        }
    }

    /// Sup-norm ball `B(center, r)`.
    pub fn sup_ball(center: &[Coord], r: Coord) -> Self {
        let lo: Vec<Coord> = center.iter().map(|c| c - r).collect();
        let hi: Vec<Coord> = center.iter().map(|c| c + r).collect();
        Self::box_range(&lo, &hi).expect("ball bounds are ordered")
    }

    /// L1-norm ball `B_1(center, r)`.
    pub fn l1_ball(center: &[Coord], r: Coord) -> Self {
        let cube = Self::sup_ball(center, r);
        let sites = cube
            .sites
            .into_iter()
            .filter(|s| {
                s.iter()
                    .zip(center)
                    .map(|(a, c)| (a - c).abs())
                    .sum::<Coord>()
                    <= r
            })
            .collect();
        SiteSet { dim: center.len(), sites }
    }

    /// 1D interval `[lo, hi]`.
    pub fn interval(lo: Coord, hi: Coord) -> Result<Self> {
        Self::box_range(&[lo], &[hi])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Site> {
        self.sites.iter()
    }

    pub fn index_of(&self, site: &[Coord]) -> Option<usize> {
        self.sites
            .binary_search_by(|s| s.as_slice().cmp(site))
            .ok()
    }

    pub fn contains(&self, site: &[Coord]) -> bool {
        self.index_of(site).is_some()
    }

    pub fn is_subset_of(&self, other: &SiteSet) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    pub fn is_disjoint_from(&self, other: &SiteSet) -> bool {
        self.sites.iter().all(|s| !other.contains(s))
    }

    pub fn union(&self, other: &SiteSet) -> Result<SiteSet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut sites = self.sites.clone();
        sites.extend(other.sites.iter().cloned());
        SiteSet::new(self.dim, sites)
    }

    pub fn difference(&self, other: &SiteSet) -> SiteSet {
        let sites = self
            .sites
            .iter()
            .filter(|s| !other.contains(s))
            .cloned()
            .collect();
        SiteSet { dim: self.dim, sites }
    }

    pub fn translate(&self, k: &[Coord]) -> SiteSet {
        let sites = self
            .sites
            .iter()
            .map(|s| s.iter().zip(k).map(|(a, b)| a + b).collect())
            .collect();
        // adding a constant vector preserves lex order
        SiteSet { dim: self.dim, sites }
    }

    /// Minkowski dilation by the sup-ball of radius `m`.
    pub fn dilate(&self, m: Coord) -> SiteSet {
        if m <= 0 {
            return self.clone();
        }
        let mut sites: Vec<Site> = Vec::new();
        for s in &self.sites {
            for t in SiteSet::sup_ball(s, m).sites {
                sites.push(t);
            }
        }
        sites.sort();
        sites.dedup();
        SiteSet { dim: self.dim, sites }
    }

    /// Sites within distance `r` of the set but outside it.
    pub fn collar(&self, r: Coord) -> SiteSet {
        self.dilate(r).difference(self)
    }

    /// Splits the set into `(interior, boundary)`: the interior holds the
    /// sites whose full unit ball stays inside the set.
    pub fn frontier(&self) -> Result<(SiteSet, SiteSet)> {
        if self.is_empty() {
            return Err(Error::EmptySiteSet);
        }
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for s in &self.sites {
            let ball = SiteSet::sup_ball(s, 1);
            if ball.sites.iter().all(|t| self.contains(t)) {
                interior.push(s.clone());
            } else {
                boundary.push(s.clone());
            }
        }
        Ok((
            SiteSet { dim: self.dim, sites: interior },
            SiteSet { dim: self.dim, sites: boundary },
        ))
    }

    /// Interior only (see [`SiteSet::frontier`]).
    pub fn interior(&self) -> Result<SiteSet> {
        Ok(self.frontier()?.0)
    }

    /// Minimum sup-norm distance between two nonempty sets.
    pub fn sup_distance(&self, other: &SiteSet) -> Option<Coord> {
        if self.is_empty() || other.is_empty() {
            return None;
        }
        let mut best = Coord::MAX;
        for a in &self.sites {
            for b in &other.sites {
                let d = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).abs())
                    .max()
                    .unwrap_or(0);
                best = best.min(d);
            }
        }
        Some(best)
    }
}

/// All offsets of the sup-ball `B(0, r)` in lex order.
pub fn ball_offsets(dim: usize, r: Coord) -> Vec<Site> {
    SiteSet::sup_ball(&vec![0; dim], r).sites().to_vec()
}

/// Offsets of the punctured unit ball `B(0,1) \ {0}` in lex order.
pub fn ring_offsets(dim: usize) -> Vec<Site> {
    ball_offsets(dim, 1)
        .into_iter()
        .filter(|s| s.iter().any(|&c| c != 0))
        .collect()
}

/// Unit vector `e_axis` in dimension `dim`.
pub fn unit(dim: usize, axis: usize) -> Site {
    let mut e = vec![0; dim];
    e[axis] = 1;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_and_ball_sizes() {
        let b = SiteSet::box_range(&[-2, -2], &[2, 2]).unwrap();
        assert_eq!(b.len(), 25);
        assert_eq!(SiteSet::sup_ball(&[0, 0], 1).len(), 9);
        // |B_1(0, r)| = 2r^2 + 2r + 1 in d = 2
        assert_eq!(SiteSet::l1_ball(&[0, 0], 6).len(), 85);
        assert_eq!(SiteSet::l1_ball(&[0, 0], 4).len(), 41);
    }

    #[test]
    fn frontier_of_square() {
        // F = [-2,2]^2: 9 interior sites, 16 boundary sites
        let f = SiteSet::box_range(&[-2, -2], &[2, 2]).unwrap();
        let (int, bdy) = f.frontier().unwrap();
        assert_eq!(int.len(), 9);
        assert_eq!(bdy.len(), 16);
        assert_eq!(int.union(&bdy).unwrap(), f);
        assert!(int.is_disjoint_from(&bdy));
    }

    #[test]
    fn frontier_of_singleton() {
        let f = SiteSet::singleton(vec![0]);
        let (int, bdy) = f.frontier().unwrap();
        assert!(int.is_empty());
        assert_eq!(bdy.len(), 1);
    }

    #[test]
    fn frontier_of_l1_ball_scan() {
        // direct scan over all 85 sites of B_1(0,6)
        let f = SiteSet::l1_ball(&[0, 0], 6);
        let (int, bdy) = f.frontier().unwrap();
        assert_eq!(int.len() + bdy.len(), 85);
        // the interior computed by definition is exactly B_1(0,4)
        assert_eq!(int, SiteSet::l1_ball(&[0, 0], 4));
        assert_eq!(int.len(), 41);
        assert_eq!(bdy.len(), 44);
    }

    #[test]
    fn empty_frontier_is_error() {
        assert!(SiteSet::empty(2).frontier().is_err());
    }

    #[test]
    fn lex_iteration_order() {
        let f = SiteSet::box_range(&[0, 0], &[1, 1]).unwrap();
        let got: Vec<&Site> = f.iter().collect();
        assert_eq!(
            got,
            vec![&vec![0, 0], &vec![0, 1], &vec![1, 0], &vec![1, 1]]
        );
    }

    #[test]
    fn dilate_interval() {
        let f = SiteSet::interval(0, 2).unwrap();
        assert_eq!(f.dilate(2), SiteSet::interval(-2, 4).unwrap());
        assert_eq!(f.collar(1), SiteSet::new(1, vec![vec![-1], vec![3]]).unwrap());
    }
}
