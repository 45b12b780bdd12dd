//! Local potentials: site tables (radius 0) and nearest-neighbor window
//! functions (radius 1).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_offsets, Coord, Site};
use crate::shift::{ShiftSpace, SymbolId};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum LocalPotential {
    /// Site potential (activity function): one real weight per symbol.
    Site { values: Vec<f64> },
    /// Three-site product interaction `beta * x_n * x_{n+e1} * x_{n+e2}`,
    /// read through the numeric symbol values. Needs d >= 2.
    ///
    /// Note: this window is gauge-symmetric under sign flips propagated from
    /// any single row, so opposite constant collars induce the same origin
    /// marginal; coexistence probes use [`LocalPotential::IsingPair`].
    ThreeSpin { beta: f64 },
    /// Nearest-neighbour pair coupling `beta * x_n * (x_{n+e1} + x_{n+e2})`,
    /// the standard plus/minus coexistence interaction. Needs d >= 2.
    IsingPair { beta: f64 },
    /// Explicit window table on `B(0,1)` patterns, keyed by the window values
    /// in lexicographic offset order.
    WindowTable { table: HashMap<Vec<SymbolId>, f64> },
}

impl LocalPotential {
    pub fn zero(symbols: usize) -> Self {
        LocalPotential::Site {
            values: vec![0.0; symbols],
        }
    }

    pub fn radius(&self) -> Coord {
        match self {
            LocalPotential::Site { .. } => 0,
            _ => 1,
        }
    }

    /// Offsets of the window `B(0, r)` this potential reads, lex order.
    pub fn window_offsets(&self, dim: usize) -> Vec<Site> {
        ball_offsets(dim, self.radius())
    }

    /// The offsets this potential actually reads, in the order expected by
    /// [`LocalPotential::eval_values`].
    pub fn read_offsets(&self, dim: usize) -> Vec<Site> {
        match self {
            LocalPotential::Site { .. } => vec![vec![0; dim]],
            LocalPotential::ThreeSpin { .. } | LocalPotential::IsingPair { .. } => {
                vec![vec![0; dim], axis_shift(&vec![0; dim], 0), axis_shift(&vec![0; dim], 1)]
            }
            LocalPotential::WindowTable { .. } => ball_offsets(dim, 1),
        }
    }

    /// Evaluates the window from pre-gathered values in `read_offsets` order.
    pub fn eval_values(&self, vals: &[SymbolId], numeric: &[f64]) -> f64 {
        match self {
            LocalPotential::Site { values } => values[vals[0] as usize],
            LocalPotential::ThreeSpin { beta } => {
                beta * numeric[vals[0] as usize]
                    * numeric[vals[1] as usize]
                    * numeric[vals[2] as usize]
            }
            LocalPotential::IsingPair { beta } => {
                beta * numeric[vals[0] as usize]
                    * (numeric[vals[1] as usize] + numeric[vals[2] as usize])
            }
            LocalPotential::WindowTable { table } => {
                table.get(vals).copied().unwrap_or(f64::NEG_INFINITY)
            }
        }
    }

    pub fn validate(&self, space: &ShiftSpace) -> Result<()> {
        match self {
            LocalPotential::Site { values } => {
                if values.len() != space.symbol_count() {
                    return Err(Error::InvalidPotential(format!(
                        "site table has {} entries for an alphabet of {}",
                        values.len(),
                        space.symbol_count()
                    )));
                }
            }
            LocalPotential::ThreeSpin { .. } | LocalPotential::IsingPair { .. } => {
                if space.dim() < 2 {
                    return Err(Error::InvalidPotential(
                        "pair/product spin interactions need dimension >= 2".into(),
                    ));
                }
                space.numeric_values()?;
            }
            LocalPotential::WindowTable { table } => {
                let len = ball_offsets(space.dim(), 1).len();
                for key in table.keys() {
                    if key.len() != len {
                        return Err(Error::InvalidPotential(format!(
                            "window key length {} does not match |B(0,1)| = {len}",
                            key.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates the window at `base`, reading sites through `get`.
    /// `numeric` must come from [`ShiftSpace::numeric_values`] for the
    /// three-spin interaction and may be empty otherwise.
    pub fn eval<G>(&self, dim: usize, numeric: &[f64], base: &[Coord], get: G) -> Result<f64>
    where
        G: Fn(&[Coord]) -> Option<SymbolId>,
    {
        let missing = |site: Vec<Coord>| Error::MissingCollar(vec![site]);
        match self {
            LocalPotential::Site { values } => {
                let v = get(base).ok_or_else(|| missing(base.to_vec()))?;
                Ok(values[v as usize])
            }
            LocalPotential::ThreeSpin { beta } => {
                let mut prod = 1.0;
                for site in [
                    base.to_vec(),
                    axis_shift(base, 0),
                    axis_shift(base, 1),
                ] {
                    let v = get(&site).ok_or_else(|| missing(site.clone()))?;
                    prod *= numeric[v as usize];
                }
                Ok(beta * prod)
            }
            LocalPotential::IsingPair { beta } => {
                let mut vals = [0.0; 3];
                for (i, site) in [
                    base.to_vec(),
                    axis_shift(base, 0),
                    axis_shift(base, 1),
                ]
                .into_iter()
                .enumerate()
                {
                    let v = get(&site).ok_or_else(|| missing(site.clone()))?;
                    vals[i] = numeric[v as usize];
                }
                Ok(beta * vals[0] * (vals[1] + vals[2]))
            }
            LocalPotential::WindowTable { table } => {
                let mut key = Vec::new();
                for o in ball_offsets(dim, 1) {
                    let site: Vec<Coord> = base.iter().zip(&o).map(|(a, b)| a + b).collect();
                    let v = get(&site).ok_or_else(|| missing(site.clone()))?;
                    key.push(v);
                }
                table.get(&key).copied().ok_or_else(|| {
                    Error::InvalidPotential("window not present in the table".into())
                })
            }
        }
    }
}

fn axis_shift(base: &[Coord], axis: usize) -> Site {
    let mut s = base.to_vec();
    s[axis] += 1;
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn three_spin_window_value() {
        let x = models::three_spin_ising();
        let numeric = x.numeric_values().unwrap();
        let g = LocalPotential::ThreeSpin { beta: 0.5 };
        // all-plus window
        let v = g
            .eval(2, &numeric, &[0, 0], |_| Some(1))
            .unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        // one minus in the product flips the sign
        let v = g
            .eval(2, &numeric, &[0, 0], |s| {
                Some(if s == [0, 0] { 0 } else { 1 })
            })
            .unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn missing_site_is_reported() {
        let g = LocalPotential::Site {
            values: vec![0.0, 1.0],
        };
        let err = g.eval(1, &[], &[3], |_| None).unwrap_err();
        match err {
            Error::MissingCollar(sites) => assert_eq!(sites, vec![vec![3]]),
            other => panic!("unexpected {other}"),
        }
    }
}
