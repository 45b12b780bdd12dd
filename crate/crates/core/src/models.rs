//! Built-in lattice models and the JSON model-definition format.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::{Constraint, ShiftSpace, SymbolId};

/// Full shift on `symbols` letters in dimension `dim`.
pub fn full_shift(dim: usize, symbols: usize) -> ShiftSpace {
    let alphabet = (0..symbols).map(|i| i.to_string()).collect();
    ShiftSpace::full_shift(dim, alphabet)
}

/// 1D golden-mean shift: two symbols, the word `11` forbidden.
pub fn golden_mean() -> ShiftSpace {
    let allowed = vec![vec![vec![true, true], vec![true, false]]];
    ShiftSpace::new_axis_pairs(1, vec!["0".into(), "1".into()], allowed).unwrap()
}

/// Two symbols, axis-adjacent sites must differ.
pub fn checkerboard(dim: usize) -> ShiftSpace {
    let m = vec![vec![false, true], vec![true, false]];
    let allowed = vec![m; dim];
    ShiftSpace::new_axis_pairs(dim, vec!["0".into(), "1".into()], allowed).unwrap()
}

/// Iceberg model: spins `-M..M`, adjacent spins may not have opposite signs.
pub fn iceberg(dim: usize, m: i64) -> ShiftSpace {
    assert!(m >= 1, "iceberg needs M >= 1");
    let spins: Vec<i64> = (-m..=m).collect();
    let alphabet: Vec<String> = spins
        .iter()
        .map(|&s| {
            if s > 0 {
                format!("+{s}")
            } else {
                s.to_string()
            }
        })
        .collect();
    let axis: Vec<Vec<bool>> = spins
        .iter()
        .map(|&a| spins.iter().map(|&b| a * b >= 0).collect())
        .collect();
    ShiftSpace::new_axis_pairs(dim, alphabet, vec![axis; dim]).unwrap()
}

/// Generalized beach model. Symbols are pairs `(alpha, beta)` with
/// `alpha` ranging over `a0` unconstrained letters and `a1` rigid letters; a
/// bond is admissible when both alphas are unconstrained or the betas agree.
///
/// Symbol names are `p{i}b{j}` (unconstrained alpha) and `q{i}b{j}` (rigid).
pub fn beach(dim: usize, a0: usize, a1: usize, b: usize) -> ShiftSpace {
    assert!(a0 >= 1 && b >= 1, "beach needs |A0| >= 1 and |B| >= 1");
    let mut alphabet = Vec::new();
    let mut safe_alpha = Vec::new();
    let mut beta = Vec::new();
    for i in 0..a0 {
        for j in 0..b {
            alphabet.push(format!("p{i}b{j}"));
            safe_alpha.push(true);
            beta.push(j);
        }
    }
    for i in 0..a1 {
        for j in 0..b {
            alphabet.push(format!("q{i}b{j}"));
            safe_alpha.push(false);
            beta.push(j);
        }
    }
    let n = alphabet.len();
    let mut axis = vec![vec![false; n]; n];
    for s in 0..n {
        for t in 0..n {
            axis[s][t] = (safe_alpha[s] && safe_alpha[t]) || beta[s] == beta[t];
        }
    }
    ShiftSpace::new_axis_pairs(dim, alphabet, vec![axis; dim]).unwrap()
}

/// The spin system underlying the three-spin interaction: the full shift on
/// `{-1,+1}^{Z^2}`. The interaction itself lives in the potential module.
pub fn three_spin_ising() -> ShiftSpace {
    ShiftSpace::full_shift(2, vec!["-1".into(), "+1".into()])
}

/// Catalog entry for the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct ModelInfo {
    pub name: &'static str,
    pub parameters: &'static str,
    pub summary: &'static str,
}

pub fn catalog() -> Vec<ModelInfo> {
    vec![
        ModelInfo {
            name: "full",
            parameters: "--dim d --symbols s",
            summary: "unconstrained full shift",
        },
        ModelInfo {
            name: "golden_mean",
            parameters: "",
            summary: "1D two-symbol shift forbidding the word 11",
        },
        ModelInfo {
            name: "checkerboard",
            parameters: "--dim d",
            summary: "adjacent sites must differ; two frozen global configurations",
        },
        ModelInfo {
            name: "iceberg",
            parameters: "--dim d --m-max M",
            summary: "spins -M..M, no opposite signs on a bond; 0 is a safe symbol",
        },
        ModelInfo {
            name: "beach",
            parameters: "--dim d --beach a0,a1,b",
            summary: "paired alphabet (alpha,beta); rigid alphas force equal betas",
        },
        ModelInfo {
            name: "three_spin_ising",
            parameters: "--beta b",
            summary: "full shift on {-1,+1}^(Z^2) with the three-site product interaction",
        },
    ]
}

/// JSON-serializable model definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub dimension: usize,
    pub alphabet: Vec<String>,
    pub constraint: ConstraintSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ConstraintSpec {
    /// `allowed[axis][s][t]` as 0/1 integers.
    #[serde(rename = "axis_pairs")]
    AxisPairs { allowed: Vec<Vec<Vec<u8>>> },
    /// Explicit neighborhood table; `ring` values are listed in the
    /// lexicographic order of the punctured unit-ball offsets.
    #[serde(rename = "table")]
    Table { entries: Vec<TableEntry> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub center: String,
    pub ring: Vec<String>,
}

impl ModelSpec {
    pub fn to_space(&self) -> Result<ShiftSpace> {
        match &self.constraint {
            ConstraintSpec::AxisPairs { allowed } => {
                let bools = allowed
                    .iter()
                    .map(|m| {
                        m.iter()
                            .map(|row| row.iter().map(|&x| x != 0).collect())
                            .collect()
                    })
                    .collect();
                ShiftSpace::new_axis_pairs(self.dimension, self.alphabet.clone(), bools)
            }
            ConstraintSpec::Table { entries } => {
                let lookup = |name: &str| -> Result<SymbolId> {
                    self.alphabet
                        .iter()
                        .position(|s| s == name)
                        .map(|i| i as SymbolId)
                        .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
                };
                let mut admissible = HashSet::new();
                for e in entries {
                    let c = lookup(&e.center)?;
                    let ring = e
                        .ring
                        .iter()
                        .map(|s| lookup(s))
                        .collect::<Result<Vec<_>>>()?;
                    admissible.insert((c, ring));
                }
                ShiftSpace::new_table(self.dimension, self.alphabet.clone(), admissible)
            }
        }
    }

    pub fn from_space(space: &ShiftSpace) -> ModelSpec {
        let constraint = match space.constraint() {
            Constraint::AxisPairs(m) => ConstraintSpec::AxisPairs {
                allowed: m
                    .iter()
                    .map(|axis| {
                        axis.iter()
                            .map(|row| row.iter().map(|&b| b as u8).collect())
                            .collect()
                    })
                    .collect(),
            },
            Constraint::Table(tbl) => ConstraintSpec::Table {
                entries: tbl
                    .admissible
                    .iter()
                    .map(|(c, ring)| TableEntry {
                        center: space.symbol_name(*c).to_string(),
                        ring: ring
                            .iter()
                            .map(|&r| space.symbol_name(r).to_string())
                            .collect(),
                    })
                    .collect(),
            },
        };
        ModelSpec {
            dimension: space.dim(),
            alphabet: space.alphabet().to_vec(),
            constraint,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iceberg_alphabet_names() {
        let x = iceberg(2, 1);
        assert_eq!(x.alphabet(), &["-1", "0", "+1"]);
        assert_eq!(x.numeric_values().unwrap(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn beach_bond_rule() {
        let x = beach(2, 1, 1, 2);
        // p0b0, p0b1, q0b0, q0b1
        let p0 = x.symbol_index("p0b0").unwrap();
        let p1 = x.symbol_index("p0b1").unwrap();
        let q0 = x.symbol_index("q0b0").unwrap();
        let q1 = x.symbol_index("q0b1").unwrap();
        assert!(x.axis_allowed(0, p0, p1)); // both alphas unconstrained
        assert!(x.axis_allowed(0, q0, p0)); // betas agree
        assert!(!x.axis_allowed(0, q0, q1)); // rigid alphas, betas differ
        assert!(!x.axis_allowed(1, q1, p0));
    }

    #[test]
    fn spec_round_trip() {
        let x = iceberg(2, 1);
        let spec = ModelSpec::from_space(&x);
        let y = spec.to_space().unwrap();
        assert_eq!(x.alphabet(), y.alphabet());
        for s in 0..3u8 {
            for t in 0..3u8 {
                for axis in 0..2 {
                    assert_eq!(x.axis_allowed(axis, s, t), y.axis_allowed(axis, s, t));
                }
            }
        }
    }

    #[test]
    fn json_example_parses() {
        let text = r#"{
            "dimension": 1,
            "alphabet": ["0", "1"],
            "constraint": {"type": "axis_pairs", "allowed": [[[1, 1], [1, 0]]]}
        }"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let x = spec.to_space().unwrap();
        assert!(x.axis_allowed(0, 1, 0));
        assert!(!x.axis_allowed(0, 1, 1));
    }

    #[test]
    fn catalog_nonempty() {
        let names: Vec<_> = catalog().into_iter().map(|m| m.name).collect();
        assert!(names.contains(&"iceberg"));
        assert!(names.contains(&"beach"));
        assert!(!names.is_empty());
    }
}
