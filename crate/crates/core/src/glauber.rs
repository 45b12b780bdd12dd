//! Single-site heat-bath dynamics for finite-volume Gibbs measures.
//!
//! Each update resamples one site from its exact conditional distribution
//! given the current neighbors and the fixed boundary condition. Chains are
//! fully deterministic given the seed. The safe-symbol check guards against
//! obviously non-connected single-site dynamics; callers may override it for
//! experiments and carry the flag in the diagnostics.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::aperiodicity::{check_maltese, MalteseVerdict};
use crate::enumerate::{first_pattern, EnumOptions};
use crate::error::{Error, Result};
use crate::geometry::{Coord, Site, SiteSet};
use crate::potential::LocalPotential;
use crate::shift::{Constraint, Pattern, ShiftSpace, SymbolId};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GlauberOptions {
    pub sweeps: u64,
    pub burn_in: u64,
    /// Keep every `thin`-th sweep after burn-in.
    pub thin: u64,
    /// Run even when no safe symbol set is found.
    pub override_safety: bool,
}

impl Default for GlauberOptions {
    fn default() -> Self {
        GlauberOptions {
            sweeps: 10_000,
            burn_in: 1_000,
            thin: 1,
            override_safety: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GlauberDiagnostics {
    pub site_updates: u64,
    pub changed_updates: u64,
    pub acceptance_rate: f64,
    /// Lag-1 autocorrelation of the origin observable across kept sweeps.
    pub autocorr_lag1: f64,
    pub samples: u64,
    pub safety_overridden: bool,
}

const ABSENT: u32 = u32::MAX;

/// Heat-bath chain over the volume sites with a fixed collar.
pub struct GlauberChain {
    space: ShiftSpace,
    volume: SiteSet,
    values: Vec<SymbolId>,
    collar_len: usize,
    potential: LocalPotential,
    numeric: Vec<f64>,
    rng: ChaCha8Rng,
    /// per volume site and axis: forward/backward neighbor slots
    axis_fwd: Vec<Vec<u32>>,
    axis_bwd: Vec<Vec<u32>>,
    /// energy windows: read slots in `read_offsets` order
    windows: Vec<Vec<u32>>,
    /// per volume site: (window id, position of the site in the window)
    site_windows: Vec<Vec<(u32, u8)>>,
    /// constraint windows for table constraints (all slots present)
    table_windows: Vec<Vec<u32>>,
    site_table_windows: Vec<Vec<(u32, u8)>>,
    diagnostics_updates: u64,
    diagnostics_changed: u64,
    safety_overridden: bool,
}

impl GlauberChain {
    pub fn new(
        space: &ShiftSpace,
        potential: &LocalPotential,
        volume: &SiteSet,
        collar: &Pattern,
        seed: u64,
        override_safety: bool,
    ) -> Result<Self> {
        potential.validate(space)?;
        let safety_overridden = match check_maltese(space) {
            MalteseVerdict::Satisfied { .. } => false,
            MalteseVerdict::NotFound => {
                if !override_safety {
                    return Err(Error::InvalidParameter(
                        "no safe symbol set found; single-site dynamics may be \
                         non-connected (pass the override flag to force)"
                            .into(),
                    ));
                }
                true
            }
        };
        if !collar.support().is_disjoint_from(volume) {
            return Err(Error::SupportMismatch(
                "collar must be disjoint from the volume".into(),
            ));
        }
        let numeric = space.numeric_values().unwrap_or_default();
        let dim = space.dim();

        // deterministic initial fill consistent with the collar
        let all = volume.union(collar.support())?;
        let init = first_pattern(space, &all, Some(collar), EnumOptions::default())?
            .ok_or_else(|| {
                Error::NotAdmissible("no configuration is consistent with the collar".into())
            })?;

        // slots: volume sites first, then collar sites
        let mut slot_of: HashMap<Site, u32> = HashMap::new();
        let mut values: Vec<SymbolId> = Vec::with_capacity(all.len());
        for (i, s) in volume.iter().enumerate() {
            slot_of.insert(s.clone(), i as u32);
            values.push(init.get(s).unwrap());
        }
        for (j, s) in collar.support().iter().enumerate() {
            slot_of.insert(s.clone(), (volume.len() + j) as u32);
            values.push(collar.values()[j]);
        }

        let n_vol = volume.len();
        let mut axis_fwd = vec![vec![ABSENT; dim]; n_vol];
        let mut axis_bwd = vec![vec![ABSENT; dim]; n_vol];
        for (i, s) in volume.iter().enumerate() {
            for axis in 0..dim {
                let mut f = s.clone();
                f[axis] += 1;
                if let Some(&j) = slot_of.get(&f) {
                    axis_fwd[i][axis] = j;
                }
                let mut b = s.clone();
                b[axis] -= 1;
                if let Some(&j) = slot_of.get(&b) {
                    axis_bwd[i][axis] = j;
                }
            }
        }

        // energy windows: centers whose full ball B(0,r) stays in the slots
        let read_offsets = potential.read_offsets(dim);
        let mut windows: Vec<Vec<u32>> = Vec::new();
        let mut site_windows: Vec<Vec<(u32, u8)>> = vec![Vec::new(); n_vol];
        for center in volume.dilate(potential.radius().max(1)).iter() {
            let ball = SiteSet::sup_ball(center, potential.radius());
            if !ball.iter().all(|s| slot_of.contains_key(s)) {
                continue;
            }
            let slots: Vec<u32> = read_offsets
                .iter()
                .map(|o| {
                    let site: Site = center.iter().zip(o).map(|(a, b)| a + b).collect();
                    slot_of[&site]
                })
                .collect();
            if !slots.iter().any(|&sl| (sl as usize) < n_vol) {
                continue;
            }
            let id = windows.len() as u32;
            for (pos, &sl) in slots.iter().enumerate() {
                if (sl as usize) < n_vol {
                    site_windows[sl as usize].push((id, pos as u8));
                }
            }
            windows.push(slots);
        }

        // constraint windows for neighborhood tables
        let mut table_windows: Vec<Vec<u32>> = Vec::new();
        let mut site_table_windows: Vec<Vec<(u32, u8)>> = vec![Vec::new(); n_vol];
        if let Constraint::Table(tbl) = space.constraint() {
            for center in volume.dilate(1).iter() {
                let mut slots = Vec::with_capacity(tbl.offsets.len() + 1);
                match slot_of.get(center) {
                    Some(&c) => slots.push(c),
                    None => continue,
                }
                let mut complete = true;
                for o in &tbl.offsets {
                    let site: Site = center.iter().zip(o).map(|(a, b)| a + b).collect();
                    match slot_of.get(&site) {
                        Some(&j) => slots.push(j),
                        None => {
                            complete = false;
                            break;
                        }
                    }
                }
                if !complete || !slots.iter().any(|&sl| (sl as usize) < n_vol) {
                    continue;
                }
                let id = table_windows.len() as u32;
                for (pos, &sl) in slots.iter().enumerate() {
                    if (sl as usize) < n_vol {
                        site_table_windows[sl as usize].push((id, pos as u8));
                    }
                }
                table_windows.push(slots);
            }
        }

        Ok(GlauberChain {
            space: space.clone(),
            volume: volume.clone(),
            values,
            collar_len: collar.support().len(),
            potential: potential.clone(),
            numeric,
            rng: ChaCha8Rng::seed_from_u64(seed),
            axis_fwd,
            axis_bwd,
            windows,
            site_windows,
            table_windows,
            site_table_windows,
            diagnostics_updates: 0,
            diagnostics_changed: 0,
            safety_overridden,
        })
    }

    fn admissible_candidate(&self, i: usize, s: SymbolId) -> bool {
        match self.space.constraint() {
            Constraint::AxisPairs(_) => {
                for axis in 0..self.space.dim() {
                    let f = self.axis_fwd[i][axis];
                    if f != ABSENT && !self.space.axis_allowed(axis, s, self.values[f as usize]) {
                        return false;
                    }
                    let b = self.axis_bwd[i][axis];
                    if b != ABSENT && !self.space.axis_allowed(axis, self.values[b as usize], s) {
                        return false;
                    }
                }
                true
            }
            Constraint::Table(tbl) => {
                for &(wid, pos) in &self.site_table_windows[i] {
                    let slots = &self.table_windows[wid as usize];
                    let center = if pos == 0 {
                        s
                    } else {
                        self.values[slots[0] as usize]
                    };
                    let ring: Vec<SymbolId> = slots[1..]
                        .iter()
                        .enumerate()
                        .map(|(k, &sl)| {
                            if (k + 1) as u8 == pos {
                                s
                            } else {
                                self.values[sl as usize]
                            }
                        })
                        .collect();
                    if !tbl.admissible.contains(&(center, ring)) {
                        return false;
                    }
                }
                true
            }
        }
    }

    fn local_energy(&self, i: usize, s: SymbolId) -> f64 {
        let mut e = 0.0;
        let mut buf: Vec<SymbolId> = Vec::with_capacity(9);
        for &(wid, pos) in &self.site_windows[i] {
            let slots = &self.windows[wid as usize];
            buf.clear();
            for (k, &sl) in slots.iter().enumerate() {
                buf.push(if k as u8 == pos {
                    s
                } else {
                    self.values[sl as usize]
                });
            }
            e += self.potential.eval_values(&buf, &self.numeric);
        }
        e
    }

    /// One lexicographic sweep of heat-bath updates.
    pub fn sweep(&mut self) -> Result<()> {
        let n = self.volume.len();
        for i in 0..n {
            let mut weights: Vec<(SymbolId, f64)> =
                Vec::with_capacity(self.space.symbol_count());
            let mut max_e = f64::NEG_INFINITY;
            for s in 0..self.space.symbol_count() as u16 {
                let s = s as SymbolId;
                if self.admissible_candidate(i, s) {
                    let e = self.local_energy(i, s);
                    max_e = max_e.max(e);
                    weights.push((s, e));
                }
            }
            if weights.is_empty() {
                return Err(Error::FrozenSite(self.volume.site(i).clone()));
            }
            let mut total = 0.0;
            for w in weights.iter_mut() {
                w.1 = (w.1 - max_e).exp();
                total += w.1;
            }
            let mut u = self.rng.gen::<f64>() * total;
            let mut chosen = weights[weights.len() - 1].0;
            for &(s, w) in &weights {
                u -= w;
                if u <= 0.0 {
                    chosen = s;
                    break;
                }
            }
            self.diagnostics_updates += 1;
            if chosen != self.values[i] {
                self.diagnostics_changed += 1;
                self.values[i] = chosen;
            }
        }
        Ok(())
    }

    /// Current state restricted to the volume.
    pub fn state(&self) -> Pattern {
        Pattern::new(
            self.volume.clone(),
            self.values[..self.volume.len()].to_vec(),
        )
        .unwrap()
    }

    pub fn value_at(&self, i: usize) -> SymbolId {
        self.values[i]
    }

    pub fn volume(&self) -> &SiteSet {
        &self.volume
    }

    pub fn collar_len(&self) -> usize {
        self.collar_len
    }
}

/// Runs a chain, feeding every kept state to the visitor, and returns the
/// diagnostics.
pub fn glauber_run<F>(
    space: &ShiftSpace,
    potential: &LocalPotential,
    volume: &SiteSet,
    collar: &Pattern,
    seed: u64,
    opts: GlauberOptions,
    mut visit: F,
) -> Result<GlauberDiagnostics>
where
    F: FnMut(&GlauberChain),
{
    let mut chain =
        GlauberChain::new(space, potential, volume, collar, seed, opts.override_safety)?;
    let thin = opts.thin.max(1);
    let mut kept = 0u64;
    // observable series for the autocorrelation diagnostic
    let origin = volume
        .index_of(&vec![0; space.dim()])
        .unwrap_or(volume.len() / 2);
    let numeric = space.numeric_values().ok();
    let mut series: Vec<f64> = Vec::new();

    for _ in 0..opts.burn_in {
        chain.sweep()?;
    }
    for sweep in 0..opts.sweeps {
        chain.sweep()?;
        if sweep % thin == 0 {
            kept += 1;
            let v = chain.value_at(origin);
            series.push(match &numeric {
                Some(nv) => nv[v as usize],
                None => v as f64,
            });
            visit(&chain);
        }
    }
    let acceptance_rate = if chain.diagnostics_updates > 0 {
        chain.diagnostics_changed as f64 / chain.diagnostics_updates as f64
    } else {
        0.0
    };
    Ok(GlauberDiagnostics {
        site_updates: chain.diagnostics_updates,
        changed_updates: chain.diagnostics_changed,
        acceptance_rate,
        autocorr_lag1: lag1_autocorr(&series),
        samples: kept,
        safety_overridden: chain.safety_overridden,
    })
}

/// Collects the kept states.
pub fn glauber_sample(
    space: &ShiftSpace,
    potential: &LocalPotential,
    volume: &SiteSet,
    collar: &Pattern,
    seed: u64,
    opts: GlauberOptions,
) -> Result<(Vec<Pattern>, GlauberDiagnostics)> {
    let mut out = Vec::new();
    let diag = glauber_run(space, potential, volume, collar, seed, opts, |c| {
        out.push(c.state());
    })?;
    Ok((out, diag))
}

fn lag1_autocorr(series: &[f64]) -> f64 {
    if series.len() < 3 {
        return 0.0;
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return 0.0;
    }
    let cov: f64 = series
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum::<f64>()
        / (n - 1) as f64;
    cov / var
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CollarRule {
    Symbol(SymbolId),
    Free,
}

/// Constant-symbol collar around a volume (width `max(r,1)`), or no collar.
pub fn build_collar(volume: &SiteSet, rule: CollarRule, radius: Coord) -> Pattern {
    match rule {
        CollarRule::Free => Pattern::empty(volume.dim()),
        CollarRule::Symbol(s) => Pattern::constant(volume.collar(radius.max(1)), s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn deterministic_streams() {
        let x = models::full_shift(2, 2);
        let g = LocalPotential::Site {
            values: vec![0.0, 0.3],
        };
        let vol = SiteSet::box_range(&[0, 0], &[2, 2]).unwrap();
        let collar = build_collar(&vol, CollarRule::Symbol(0), 1);
        let opts = GlauberOptions {
            sweeps: 50,
            burn_in: 10,
            thin: 1,
            override_safety: false,
        };
        let (a, _) = glauber_sample(&x, &g, &vol, &collar, 99, opts).unwrap();
        let (b, _) = glauber_sample(&x, &g, &vol, &collar, 99, opts).unwrap();
        assert_eq!(a, b);
        let (c, _) = glauber_sample(&x, &g, &vol, &collar, 100, opts).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_target_frequencies() {
        // zero potential on the full shift: single-site frequencies uniform
        let x = models::full_shift(1, 2);
        let g = LocalPotential::zero(2);
        let vol = SiteSet::interval(0, 4).unwrap();
        let collar = build_collar(&vol, CollarRule::Symbol(0), 1);
        let opts = GlauberOptions {
            sweeps: 20_000,
            burn_in: 500,
            thin: 1,
            override_safety: false,
        };
        let mut ones = 0u64;
        let mut total = 0u64;
        let _ = glauber_run(&x, &g, &vol, &collar, 5, opts, |c| {
            for i in 0..5 {
                total += 1;
                ones += (c.value_at(i) == 1) as u64;
            }
        })
        .unwrap();
        let freq = ones as f64 / total as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn frozen_site_detected() {
        // 1D checkerboard strip with contradictory pinned neighbors
        let x = models::checkerboard(1);
        let vol = SiteSet::interval(0, 0).unwrap();
        let collar = Pattern::from_pairs(1, &[(vec![-1], 0), (vec![1], 1)]).unwrap();
        let g = LocalPotential::zero(2);
        let err = glauber_sample(
            &x,
            &g,
            &vol,
            &collar,
            1,
            GlauberOptions {
                sweeps: 1,
                burn_in: 0,
                thin: 1,
                override_safety: true,
            },
        );
        assert!(err.is_err());
    }

    #[test]
    fn maltese_guard_requires_override() {
        let x = models::checkerboard(2);
        let vol = SiteSet::box_range(&[0, 0], &[1, 1]).unwrap();
        let collar = build_collar(&vol, CollarRule::Free, 1);
        let g = LocalPotential::zero(2);
        assert!(GlauberChain::new(&x, &g, &vol, &collar, 1, false).is_err());
        assert!(GlauberChain::new(&x, &g, &vol, &collar, 1, true).is_ok());
    }
}
