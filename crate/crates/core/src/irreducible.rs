//! Falsifier-style irreducibility and strong-irreducibility checks.
//!
//! These are confidence checks, not proofs: the verdict always records the
//! tested window sizes and separations. A counterexample, when found, is a
//! concrete pattern pair that fails to extend jointly.

use serde::Serialize;

use crate::enumerate::{enumerate_patterns, first_pattern, EnumOptions};
use crate::error::{Error, Result};
use crate::geometry::{Coord, SiteSet};
use crate::shift::{shift_pattern, Pattern, ShiftSpace};

#[derive(Clone, Copy, Debug)]
pub enum IrreducibilityMode {
    /// Topological transitivity surrogate: some relative placement extends.
    Transitive,
    /// Every placement at sup-separation >= r must extend jointly.
    StronglyIrreducible { r: Coord },
}

#[derive(Clone, Copy, Debug)]
pub struct IrreducibilityBudget {
    /// Largest box side for the window pairs.
    pub max_window: Coord,
    /// Largest extra separation tried beyond the minimum.
    pub max_extra_separation: Coord,
    /// Cap on enumerated pattern pairs per placement.
    pub max_pairs: u64,
    /// Extendability margin for the joint fill (the margin ball must bridge
    /// the gap for obstructions to be visible).
    pub margin: Coord,
}

impl Default for IrreducibilityBudget {
    fn default() -> Self {
        IrreducibilityBudget {
            max_window: 3,
            max_extra_separation: 2,
            max_pairs: 200_000,
            margin: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum IrreducibilityVerdict {
    /// No failure within the tested ranges.
    VerifiedUpTo {
        max_window: Coord,
        separations: Vec<Coord>,
        pairs_tested: u64,
    },
    Counterexample {
        a: Pattern,
        b: Pattern,
        offset: Vec<Coord>,
    },
}

/// Tests joint extendability of pattern pairs over box windows.
///
/// In `StronglyIrreducible { r }` mode every tested placement with separation
/// at least `r` must extend; the first failing pair is returned. In
/// `Transitive` mode a pair fails only when no tried placement works.
pub fn check_irreducibility(
    space: &ShiftSpace,
    mode: IrreducibilityMode,
    budget: IrreducibilityBudget,
) -> Result<IrreducibilityVerdict> {
    let r_min = match mode {
        IrreducibilityMode::Transitive => 1,
        IrreducibilityMode::StronglyIrreducible { r } => {
            if r < 1 {
                return Err(Error::InvalidParameter(
                    "separation r must be at least 1".into(),
                ));
            }
            r
        }
    };
    let dim = space.dim();
    let mut pairs_tested: u64 = 0;
    let mut separations = Vec::new();

    for w in 1..=budget.max_window {
        let window = SiteSet::box_range(&vec![0; dim], &vec![w - 1; dim])?;
        let opts = EnumOptions {
            margin: budget.margin.max(1),
            cap: budget.max_pairs,
        };
        let pats = match enumerate_patterns(space, &window, None, opts) {
            Ok(p) => p,
            Err(Error::EnumerationCap { .. }) => break,
            Err(e) => return Err(e),
        };

        for extra in 0..=budget.max_extra_separation {
            let sep = r_min + extra;
            if !separations.contains(&sep) {
                separations.push(sep);
            }
            // place the second window along each axis at the given separation
            let mut offsets: Vec<Vec<Coord>> = Vec::new();
            for axis in 0..dim {
                let mut k = vec![0; dim];
                k[axis] = w - 1 + sep;
                offsets.push(k);
            }
            if dim > 1 {
                offsets.push(vec![w - 1 + sep; dim]); // a diagonal placement
            }

            for k in offsets {
                let neg: Vec<Coord> = k.iter().map(|c| -c).collect();
                for a in &pats {
                    'pair: for b in &pats {
                        pairs_tested += 1;
                        if pairs_tested > budget.max_pairs {
                            return Ok(IrreducibilityVerdict::VerifiedUpTo {
                                max_window: w,
                                separations,
                                pairs_tested: pairs_tested - 1,
                            });
                        }
                        let b_moved = shift_pattern(b, &neg);
                        let fixed = a.merge(&b_moved)?;
                        let joint = first_pattern(
                            space,
                            fixed.support(),
                            Some(&fixed),
                            EnumOptions {
                                margin: budget.margin,
                                cap: u64::MAX,
                            },
                        )?;
                        match (joint.is_some(), mode) {
                            (true, _) => continue 'pair,
                            (false, IrreducibilityMode::StronglyIrreducible { .. }) => {
                                return Ok(IrreducibilityVerdict::Counterexample {
                                    a: a.clone(),
                                    b: b.clone(),
                                    offset: k.clone(),
                                });
                            }
                            (false, IrreducibilityMode::Transitive) => {
                                // try other placements before declaring failure
                                if let Some(found) =
                                    transitive_rescue(space, a, b, w, &budget)?
                                {
                                    let _ = found;
                                    continue 'pair;
                                }
                                return Ok(IrreducibilityVerdict::Counterexample {
                                    a: a.clone(),
                                    b: b.clone(),
                                    offset: k.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(IrreducibilityVerdict::VerifiedUpTo {
        max_window: budget.max_window,
        separations,
        pairs_tested,
    })
}

fn transitive_rescue(
    space: &ShiftSpace,
    a: &Pattern,
    b: &Pattern,
    w: Coord,
    budget: &IrreducibilityBudget,
) -> Result<Option<Vec<Coord>>> {
    let dim = space.dim();
    for extra in 0..=budget.max_extra_separation + 2 {
        for axis in 0..dim {
            let mut k = vec![0; dim];
            k[axis] = w + extra;
            let neg: Vec<Coord> = k.iter().map(|c| -c).collect();
            let moved = shift_pattern(b, &neg);
            if !moved.support().is_disjoint_from(a.support()) {
                continue;
            }
            let fixed = a.merge(&moved)?;
            if first_pattern(
                space,
                fixed.support(),
                Some(&fixed),
                EnumOptions {
                    margin: budget.margin,
                    cap: u64::MAX,
                },
            )?
            .is_some()
            {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}
