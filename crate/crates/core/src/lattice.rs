//! Finitely generated subgroups of `Z^k` in Hermite normal form.
//!
//! The basis is kept as the unique row-style HNF of the subgroup: rows in
//! echelon form with strictly increasing pivot columns, positive pivots, and
//! the entries above each pivot reduced into `[0, pivot)`. Two subgroups are
//! equal iff their stored bases are equal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerLattice {
    ambient: usize,
    basis: Vec<Vec<i64>>,
}

impl std::fmt::Debug for IntegerLattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "IntegerLattice(rank {} in Z^{}; basis {:?})", self.rank(), self.ambient, self.basis)
    }
}

fn checked(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow)
}

/// Row-reduce `rows` into HNF. Rows may be dependent or zero.
fn hnf(ambient: usize, rows: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let mut m: Vec<Vec<i64>> = rows.iter().filter(|r| r.iter().any(|&x| x != 0)).cloned().collect();
    let mut pivot_rows: Vec<Vec<i64>> = Vec::new();
    for col in 0..ambient {
        // eliminate column `col` among the remaining rows via gcd steps
        loop {
            let mut idx: Vec<usize> = (0..m.len()).filter(|&i| m[i][col] != 0).collect();
            if idx.is_empty() {
                break;
            }
            // row with the smallest nonzero |entry| in this column
            idx.sort_by_key(|&i| m[i][col].unsigned_abs());
            let k = idx[0];
            if idx.len() == 1 {
                let mut row = m.swap_remove(k);
                if row[col] < 0 {
                    for x in row.iter_mut() {
                        *x = -*x;
                    }
                }
                pivot_rows.push(row);
                break;
            }
            let pivot = m[k].clone();
            for &i in idx.iter().skip(1) {
                let q = m[i][col].div_euclid(pivot[col]);
                for c in 0..ambient {
                    let v = m[i][c] as i128 - q as i128 * pivot[c] as i128;
                    m[i][c] = checked(v)?;
                }
            }
        }
    }
    // reduce entries above each pivot, left to right so later reductions
    // cannot reintroduce unreduced columns
    let mut basis = pivot_rows;
    // basis rows already have strictly increasing pivot columns by construction
    let pivots: Vec<usize> = basis
        .iter()
        .map(|r| r.iter().position(|&x| x != 0).unwrap())
        .collect();
    for i in 0..basis.len() {
        let c = pivots[i];
        let p = basis[i][c];
        for j in 0..i {
            let q = basis[j][c].div_euclid(p);
            if q != 0 {
                for col in 0..basis[0].len() {
                    let v = basis[j][col] as i128 - q as i128 * basis[i][col] as i128;
                    basis[j][col] = checked(v)?;
                }
            }
        }
    }
    Ok(basis)
}

impl IntegerLattice {
    pub fn trivial(ambient: usize) -> Self {
        IntegerLattice { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| {
                let mut e = vec![0; ambient];
                e[i] = 1;
                e
            })
            .collect();
        IntegerLattice { ambient, basis }
    }

    /// Subgroup generated by the given vectors.
    pub fn span(ambient: usize, vectors: &[Vec<i64>]) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient {
                return Err(Error::RankMismatch {
                    expected: ambient,
                    got: v.len(),
                });
            }
        }
        Ok(IntegerLattice {
            ambient,
            basis: hnf(ambient, vectors)?,
        })
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<i64>] {
        &self.basis
    }

    pub fn is_trivial(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn contains(&self, v: &[i64]) -> Result<bool> {
        if v.len() != self.ambient {
            return Err(Error::RankMismatch {
                expected: self.ambient,
                got: v.len(),
            });
        }
        let mut v: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        for row in &self.basis {
            let c = row.iter().position(|&x| x != 0).unwrap();
            if v[c] % row[c] as i128 != 0 {
                return Ok(false);
            }
            let q = v[c] / row[c] as i128;
            if q != 0 {
                for col in 0..self.ambient {
                    v[col] -= q * row[col] as i128;
                }
            }
        }
        Ok(v.iter().all(|&x| x == 0))
    }

    pub fn is_sublattice_of(&self, other: &IntegerLattice) -> Result<bool> {
        for row in &self.basis {
            if !other.contains(row)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Adds a vector to the generating set; returns true when the subgroup grew.
    pub fn extend(&mut self, v: &[i64]) -> Result<bool> {
        if self.contains(v)? {
            return Ok(false);
        }
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        self.basis = hnf(self.ambient, &rows)?;
        Ok(true)
    }

    /// The scaled subgroup `c * L`.
    pub fn scaled(&self, c: i64) -> Result<Self> {
        let rows = self
            .basis
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| checked(x as i128 * c as i128))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        IntegerLattice::span(self.ambient, &rows)
    }

    /// Image under the homomorphism given by `matrix` (rows index output
    /// coordinates, columns the ambient coordinates).
    pub fn pushforward(&self, matrix: &[Vec<i64>]) -> Result<IntegerLattice> {
        let out_rank = matrix.len();
        for row in matrix {
            if row.len() != self.ambient {
                return Err(Error::RankMismatch {
                    expected: self.ambient,
                    got: row.len(),
                });
            }
        }
        let mut images = Vec::with_capacity(self.basis.len());
        for b in &self.basis {
            let mut img = vec![0i64; out_rank];
            for (i, row) in matrix.iter().enumerate() {
                let mut acc: i128 = 0;
                for (c, &x) in row.iter().enumerate() {
                    acc += x as i128 * b[c] as i128;
                }
                img[i] = checked(acc)?;
            }
            images.push(img);
        }
        IntegerLattice::span(out_rank, &images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_units_is_full() {
        let l = IntegerLattice::span(2, &[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(l, IntegerLattice::full(2));
        assert!(l.contains(&[5, -3]).unwrap());
    }

    #[test]
    fn empty_span_is_trivial() {
        let l = IntegerLattice::span(3, &[]).unwrap();
        assert!(l.is_trivial());
        assert!(!l.contains(&[1, 0, 0]).unwrap());
        assert!(l.contains(&[0, 0, 0]).unwrap());
    }

    #[test]
    fn sum_zero_lattice_from_differences() {
        // e_s - e_t over a 3-letter alphabet: rank 2, excludes e_s
        let gens = vec![
            vec![1, -1, 0],
            vec![1, 0, -1],
            vec![0, 1, -1],
            vec![-1, 1, 0],
            vec![-1, 0, 1],
            vec![0, -1, 1],
        ];
        let l = IntegerLattice::span(3, &gens).unwrap();
        assert_eq!(l.rank(), 2);
        assert_eq!(l.basis(), &[vec![1, 0, -1], vec![0, 1, -1]]);
        assert!(!l.contains(&[1, 0, 0]).unwrap());
        assert!(l.contains(&[2, -1, -1]).unwrap());
    }

    #[test]
    fn doubled_lattice_excludes_odd() {
        let l = IntegerLattice::full(2).scaled(2).unwrap();
        assert!(!l.contains(&[1, 1]).unwrap());
        assert!(l.contains(&[2, -4]).unwrap());
    }

    #[test]
    fn hnf_idempotent() {
        let gens = vec![vec![4, 6, 2], vec![6, 3, 0], vec![2, 9, 2]];
        let l = IntegerLattice::span(3, &gens).unwrap();
        let again = IntegerLattice::span(3, l.basis()).unwrap();
        assert_eq!(l, again);
    }

    #[test]
    fn membership_negative_coordinates() {
        let l = IntegerLattice::span(2, &[vec![2, 1], vec![0, 3]]).unwrap();
        assert!(l.contains(&[2, 1]).unwrap());
        assert!(l.contains(&[-2, -1]).unwrap());
        assert!(l.contains(&[2, 4]).unwrap());
        assert!(!l.contains(&[1, 0]).unwrap());
    }

    #[test]
    fn pushforward_identity_and_zero() {
        let l = IntegerLattice::span(2, &[vec![1, -1]]).unwrap();
        let id = vec![vec![1, 0], vec![0, 1]];
        assert_eq!(l.pushforward(&id).unwrap(), l);
        let zero = vec![vec![0, 0]];
        assert!(l.pushforward(&zero).unwrap().is_trivial());
    }

    #[test]
    fn extend_reports_growth() {
        let mut l = IntegerLattice::trivial(2);
        assert!(l.extend(&[0, 2]).unwrap());
        assert!(!l.extend(&[0, -4]).unwrap());
        assert!(l.extend(&[0, 1]).unwrap());
        assert_eq!(l.rank(), 1);
    }

    #[test]
    fn rank_mismatch_is_error() {
        let l = IntegerLattice::full(2);
        assert!(l.contains(&[1, 2, 3]).is_err());
        assert!(IntegerLattice::span(2, &[vec![1, 2, 3]]).is_err());
    }
}
