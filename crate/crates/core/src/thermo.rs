//! Finite-volume Gibbs measures with boundary conditions, exact conformality
//! verification, entropy/pressure estimation, thermodynamic-limit scans and
//! phase-coexistence probes.
//!
//! Energy convention: a window contributes iff its full ball stays inside
//! volume plus collar; windows reaching further out are dropped (free
//! boundary beyond the collar). Interior swaps then satisfy the conformality
//! identity exactly, because every affected window is counted on both sides.

use std::collections::HashMap;

use serde::Serialize;

use crate::enumerate::{enumerate_patterns, EnumOptions};
use crate::error::{Error, Result};
use crate::geometry::{Coord, Site, SiteSet};
use crate::glauber::{build_collar, glauber_run, CollarRule, GlauberOptions};
use crate::potential::LocalPotential;
use crate::relations::{markov_cocycle_value, CylinderEvaluator};
use crate::shift::{Pattern, ShiftSpace, SymbolId};

/// Exact finite-volume Gibbs table: every admissible configuration on the
/// volume (jointly with the collar) with its normalized weight.
#[derive(Clone, Debug)]
pub struct ExactGibbs {
    pub volume: SiteSet,
    pub collar: Pattern,
    pub potential: LocalPotential,
    pub patterns: Vec<Pattern>,
    pub log_weights: Vec<f64>,
    pub probs: Vec<f64>,
    index: HashMap<Vec<SymbolId>, usize>,
}

fn energy_centers(
    potential: &LocalPotential,
    volume: &SiteSet,
    all: &SiteSet,
) -> Vec<Site> {
    let r = potential.radius();
    let mut centers = Vec::new();
    for c in volume.dilate(r.max(1)).iter() {
        if SiteSet::sup_ball(c, r).is_subset_of(all) {
            centers.push(c.clone());
        }
    }
    centers
}

/// Builds the exact table. Errors with the enumeration cap when the volume is
/// too large to exhaust; use the heat-bath sampler then.
pub fn finite_volume_measure(
    space: &ShiftSpace,
    potential: &LocalPotential,
    volume: &SiteSet,
    collar: &Pattern,
    cap: u64,
) -> Result<ExactGibbs> {
    potential.validate(space)?;
    if !collar.support().is_disjoint_from(volume) {
        return Err(Error::SupportMismatch(
            "collar must be disjoint from the volume".into(),
        ));
    }
    let all = volume.union(collar.support())?;
    let joint = enumerate_patterns(
        space,
        &all,
        Some(collar),
        EnumOptions { margin: 0, cap },
    )?;
    if joint.is_empty() {
        return Err(Error::NotAdmissible(
            "no configuration is consistent with the collar".into(),
        ));
    }
    let numeric = space.numeric_values().unwrap_or_default();
    let centers = energy_centers(potential, volume, &all);
    let mut log_weights = Vec::with_capacity(joint.len());
    for p in &joint {
        let mut e = 0.0;
        for c in &centers {
            e += potential.eval(space.dim(), &numeric, c, |s| p.get(s))?;
        }
        log_weights.push(e);
    }
    // normalize via log-sum-exp
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_weights.iter().map(|w| (w - max).exp()).sum();
    let probs: Vec<f64> = log_weights.iter().map(|w| (w - max).exp() / z).collect();

    let patterns: Vec<Pattern> = joint
        .iter()
        .map(|p| p.restrict(volume))
        .collect::<Result<_>>()?;
    let mut index = HashMap::with_capacity(patterns.len());
    for (i, p) in patterns.iter().enumerate() {
        index.insert(p.values().to_vec(), i);
    }
    let total: f64 = probs.iter().sum();
    debug_assert!((total - 1.0).abs() <= 1e-12);
    Ok(ExactGibbs {
        volume: volume.clone(),
        collar: collar.clone(),
        potential: potential.clone(),
        patterns,
        log_weights,
        probs,
        index,
    })
}

impl ExactGibbs {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn prob_of(&self, p: &Pattern) -> Option<f64> {
        if p.support() != &self.volume {
            return None;
        }
        self.index.get(p.values()).map(|&i| self.probs[i])
    }

    /// Exact marginal over a sub-window.
    pub fn marginal(&self, window: &SiteSet) -> Result<HashMap<Vec<SymbolId>, f64>> {
        if !window.is_subset_of(&self.volume) {
            return Err(Error::SupportMismatch(
                "marginal window must lie inside the volume".into(),
            ));
        }
        let idx: Vec<usize> = window
            .iter()
            .map(|s| self.volume.index_of(s).unwrap())
            .collect();
        let mut out: HashMap<Vec<SymbolId>, f64> = HashMap::new();
        for (p, &prob) in self.patterns.iter().zip(&self.probs) {
            let key: Vec<SymbolId> = idx.iter().map(|&i| p.values()[i]).collect();
            *out.entry(key).or_insert(0.0) += prob;
        }
        Ok(out)
    }
}

impl CylinderEvaluator for ExactGibbs {
    fn dim(&self) -> usize {
        self.volume.dim()
    }
    fn prob(&self, p: &Pattern) -> Result<f64> {
        if !p.support().is_subset_of(&self.volume) {
            return Err(Error::SupportMismatch(
                "cylinder must lie inside the volume".into(),
            ));
        }
        let mut total = 0.0;
        for (q, &prob) in self.patterns.iter().zip(&self.probs) {
            if p.support().iter().all(|s| q.get(s) == p.get(s)) {
                total += prob;
            }
        }
        Ok(total)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConformalityReport {
    pub swaps_checked: u64,
    pub max_deviation: f64,
}

/// Verifies, over all boundary-matching swap pairs on `window`, that the
/// log-ratio of table probabilities equals the potential cocycle computed
/// from the affected windows alone.
pub fn conformality_check_fv(
    space: &ShiftSpace,
    gibbs: &ExactGibbs,
    window: &SiteSet,
) -> Result<ConformalityReport> {
    if !window.is_subset_of(&gibbs.volume) {
        return Err(Error::SupportMismatch(
            "swap window must lie inside the volume".into(),
        ));
    }
    let r = gibbs.potential.radius();
    // the cocycle collar must be readable from volume + boundary condition
    let psi_ring = window.collar(r.max(1));
    let all = gibbs.volume.union(gibbs.collar.support())?;
    if !psi_ring.is_subset_of(&all) {
        return Err(Error::MissingCollar(
            psi_ring
                .difference(&all)
                .iter()
                .cloned()
                .collect::<Vec<_>>(),
        ));
    }
    let (_, bdy) = window.frontier()?;
    let mut swaps_checked = 0u64;
    let mut max_dev: f64 = 0.0;

    for (i, x) in gibbs.patterns.iter().enumerate() {
        let a = x.restrict(window)?;
        let fixed = x.restrict(&bdy)?;
        let partners = enumerate_patterns(space, window, Some(&fixed), EnumOptions::default())?;
        // collar for the cocycle: context values around the window
        let merged = x.merge(&gibbs.collar)?;
        let ring_pattern = merged.restrict(&psi_ring)?;
        for b in partners {
            if b == a {
                continue;
            }
            let y = x.patched(&b)?;
            let j = match gibbs.index.get(y.values()) {
                Some(&j) => j,
                // boundary-matching partner must stay admissible with the context
                None => {
                    return Err(Error::NotAdmissible(
                        "swapped configuration left the support".into(),
                    ))
                }
            };
            let lhs = (gibbs.probs[j] / gibbs.probs[i]).ln();
            let psi = markov_cocycle_value(space, &gibbs.potential, &a, &b, &ring_pattern)?;
            swaps_checked += 1;
            max_dev = max_dev.max((lhs - psi).abs());
        }
    }
    Ok(ConformalityReport {
        swaps_checked,
        max_deviation: max_dev,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyScanPoint {
    pub radius: Coord,
    pub sites: usize,
    pub count: u64,
    pub log_count: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyScan {
    pub points: Vec<EntropyScanPoint>,
    pub margin: Coord,
    pub truncated: bool,
}

/// Per-site log-counts of admissible patterns on growing balls.
pub fn box_entropy_scan(
    space: &ShiftSpace,
    n_max: Coord,
    margin: Coord,
    cap: u64,
) -> Result<EntropyScan> {
    let dim = space.dim();
    let mut points = Vec::new();
    let mut truncated = false;
    for n in 1..=n_max {
        let window = SiteSet::sup_ball(&vec![0; dim], n);
        match crate::enumerate::count_patterns(
            space,
            &window,
            None,
            EnumOptions { margin, cap },
        ) {
            Ok(count) => {
                let log_count = (count as f64).ln();
                points.push(EntropyScanPoint {
                    radius: n,
                    sites: window.len(),
                    count,
                    log_count,
                    normalized: log_count / window.len() as f64,
                });
            }
            Err(Error::EnumerationCap { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(EntropyScan {
        points,
        margin,
        truncated,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PressureEstimate {
    pub h_est: f64,
    pub potential_mean: f64,
    pub pressure_est: f64,
    pub stderr: f64,
    /// More than half of the observed blocks were seen once: the plug-in
    /// entropy is badly undersampled.
    pub undersampled: bool,
    pub blocks_observed: usize,
}

/// Plug-in block entropy plus empirical potential mean. The entropy
/// estimator is biased down; tight comparisons belong to the exact oracles.
pub fn empirical_pressure(
    space: &ShiftSpace,
    potential: &LocalPotential,
    samples: &[Pattern],
    block: Coord,
) -> Result<PressureEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let dim = space.dim();
    let volume = samples[0].support().clone();
    let block_window = SiteSet::box_range(&vec![0; dim], &vec![block - 1; dim])?;
    // block positions fully inside the volume
    let mut positions: Vec<Site> = Vec::new();
    for s in volume.iter() {
        if block_window
            .translate(s)
            .is_subset_of(&volume)
        {
            positions.push(s.clone());
        }
    }
    if positions.is_empty() {
        return Err(Error::InvalidParameter(
            "block does not fit inside the sample volume".into(),
        ));
    }
    let numeric = space.numeric_values().unwrap_or_default();
    let centers = energy_centers(potential, &volume, &volume);

    let batches = 16.min(samples.len());
    let mut batch_pressure = vec![0.0f64; batches];
    let mut batch_sizes = vec![0usize; batches];
    let mut counts: HashMap<Vec<SymbolId>, u64> = HashMap::new();
    let mut total_blocks = 0u64;
    let mut mean_potential_acc = 0.0;

    for (si, p) in samples.iter().enumerate() {
        if p.support() != &volume {
            return Err(Error::SupportMismatch(
                "samples must share a volume".into(),
            ));
        }
        let mut sample_counts: HashMap<Vec<SymbolId>, u64> = HashMap::new();
        for pos in &positions {
            let key: Vec<SymbolId> = block_window
                .translate(pos)
                .iter()
                .map(|s| p.get(s).unwrap())
                .collect();
            *counts.entry(key.clone()).or_insert(0) += 1;
            *sample_counts.entry(key).or_insert(0) += 1;
            total_blocks += 1;
        }
        let mut e = 0.0;
        for c in &centers {
            e += potential.eval(dim, &numeric, c, |s| p.get(s))?;
        }
        let g_mean = if centers.is_empty() {
            0.0
        } else {
            e / centers.len() as f64
        };
        mean_potential_acc += g_mean;
        let b = si * batches / samples.len();
        let n_blocks: u64 = sample_counts.values().sum();
        let mut h_b = 0.0;
        for &c in sample_counts.values() {
            let f = c as f64 / n_blocks as f64;
            h_b -= f * f.ln();
        }
        batch_pressure[b] += h_b / block_window.len() as f64 + g_mean;
        batch_sizes[b] += 1;
    }

    let block_sites = block_window.len() as f64;
    let mut h = 0.0;
    for &c in counts.values() {
        let f = c as f64 / total_blocks as f64;
        h -= f * f.ln();
    }
    let h_est = h / block_sites;
    let potential_mean = mean_potential_acc / samples.len() as f64;
    let pressure_est = h_est + potential_mean;

    let means: Vec<f64> = batch_pressure
        .iter()
        .zip(&batch_sizes)
        .filter(|(_, &n)| n > 0)
        .map(|(&s, &n)| s / n as f64)
        .collect();
    let stderr = if means.len() > 1 {
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var =
            means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        (var / means.len() as f64).sqrt()
    } else {
        f64::NAN
    };

    let singletons = counts.values().filter(|&&c| c == 1).count();
    let undersampled = singletons * 2 > counts.len();
    Ok(PressureEstimate {
        h_est,
        potential_mean,
        pressure_est,
        stderr,
        undersampled,
        blocks_observed: counts.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanCell {
    pub radius: Coord,
    pub rule: String,
    pub target: usize,
    pub prob: f64,
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThermoScan {
    pub cells: Vec<ScanCell>,
    /// Successive |difference| per (rule, target) along the volume sequence.
    pub successive_diffs: Vec<(String, usize, Vec<f64>)>,
    /// All final successive differences fell below the tolerance.
    pub stabilized: bool,
    /// The two boundary rules disagree at the largest volume beyond noise.
    pub boundary_sensitive: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub exact_cap: u64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub override_safety: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            exact_cap: 200_000,
            sweeps: 100_000,
            burn_in: 10_000,
            seed: 1,
            tolerance: 1e-3,
            override_safety: false,
        }
    }
}

fn rule_name(space: &ShiftSpace, rule: CollarRule) -> String {
    match rule {
        CollarRule::Free => "free".into(),
        CollarRule::Symbol(s) => space.symbol_name(s).to_string(),
    }
}

/// Target-cylinder probabilities across a nested volume sequence under each
/// boundary rule; exact when enumerable, sampled otherwise.
pub fn thermo_limit_scan(
    space: &ShiftSpace,
    potential: &LocalPotential,
    radii: &[Coord],
    rules: &[CollarRule],
    targets: &[Pattern],
    opts: &ScanOptions,
) -> Result<ThermoScan> {
    if radii.windows(2).any(|w| w[0] >= w[1]) || radii.is_empty() {
        return Err(Error::InvalidParameter(
            "volume radii must be strictly increasing and nonempty".into(),
        ));
    }
    let dim = space.dim();
    let collar_r = potential.radius().max(1);
    let mut cells: Vec<ScanCell> = Vec::new();

    for &r in radii {
        let volume = SiteSet::sup_ball(&vec![0; dim], r);
        for &rule in rules {
            let collar = build_collar(&volume, rule, collar_r);
            let exact = finite_volume_measure(space, potential, &volume, &collar, opts.exact_cap);
            match exact {
                Ok(table) => {
                    for (ti, t) in targets.iter().enumerate() {
                        cells.push(ScanCell {
                            radius: r,
                            rule: rule_name(space, rule),
                            target: ti,
                            prob: table.prob(t)?,
                            stderr: None,
                        });
                    }
                }
                Err(Error::EnumerationCap { .. }) => {
                    // sampled estimates with batch-means errors
                    let batches = 16usize;
                    let mut hits = vec![vec![0u64; batches]; targets.len()];
                    let mut totals = vec![0u64; batches];
                    let mut kept = 0u64;
                    let g_opts = GlauberOptions {
                        sweeps: opts.sweeps,
                        burn_in: opts.burn_in,
                        thin: 1,
                        override_safety: opts.override_safety,
                    };
                    glauber_run(
                        space,
                        potential,
                        &volume,
                        &collar,
                        opts.seed ^ (r as u64) << 8,
                        g_opts,
                        |chain| {
                            let b = (kept as usize * batches / opts.sweeps as usize)
                                .min(batches - 1);
                            kept += 1;
                            totals[b] += 1;
                            let st = chain.state();
                            for (ti, t) in targets.iter().enumerate() {
                                let hit = t
                                    .support()
                                    .iter()
                                    .all(|s| st.get(s) == t.get(s));
                                hits[ti][b] += hit as u64;
                            }
                        },
                    )?;
                    for (ti, h) in hits.iter().enumerate() {
                        let means: Vec<f64> = h
                            .iter()
                            .zip(&totals)
                            .filter(|(_, &n)| n > 0)
                            .map(|(&a, &n)| a as f64 / n as f64)
                            .collect();
                        let m = means.iter().sum::<f64>() / means.len() as f64;
                        let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                            / (means.len() - 1).max(1) as f64;
                        cells.push(ScanCell {
                            radius: r,
                            rule: rule_name(space, rule),
                            target: ti,
                            prob: m,
                            stderr: Some((var / means.len() as f64).sqrt()),
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    // successive differences per (rule, target)
    let mut successive_diffs = Vec::new();
    let mut stabilized = true;
    for &rule in rules {
        let name = rule_name(space, rule);
        for ti in 0..targets.len() {
            let series: Vec<f64> = radii
                .iter()
                .map(|&r| {
                    cells
                        .iter()
                        .find(|c| c.radius == r && c.rule == name && c.target == ti)
                        .map(|c| c.prob)
                        .unwrap()
                })
                .collect();
            let diffs: Vec<f64> = series.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            if let Some(&last) = diffs.last() {
                if last > opts.tolerance {
                    stabilized = false;
                }
            }
            successive_diffs.push((name.clone(), ti, diffs));
        }
    }

    // boundary sensitivity at the largest volume
    let mut boundary_sensitive = false;
    if rules.len() >= 2 {
        let last = *radii.last().unwrap();
        for ti in 0..targets.len() {
            let of_rule = |rule: CollarRule| {
                let name = rule_name(space, rule);
                cells
                    .iter()
                    .find(|c| c.radius == last && c.rule == name && c.target == ti)
                    .map(|c| (c.prob, c.stderr.unwrap_or(0.0)))
                    .unwrap()
            };
            let (p0, s0) = of_rule(rules[0]);
            let (p1, s1) = of_rule(rules[1]);
            let noise = 3.0 * (s0 + s1);
            if (p0 - p1).abs() > noise.max(opts.tolerance) {
                boundary_sensitive = true;
            }
        }
    }

    Ok(ThermoScan {
        cells,
        successive_diffs,
        stabilized,
        boundary_sensitive,
    })
}

/// Built-in phase-probe setups.
#[derive(Clone, Copy, Debug)]
pub enum ProbeModel {
    ThreeSpin,
    Iceberg { m: i64 },
    Beach,
}

impl ProbeModel {
    pub fn space(&self) -> ShiftSpace {
        match self {
            ProbeModel::ThreeSpin => crate::models::three_spin_ising(),
            ProbeModel::Iceberg { m } => crate::models::iceberg(2, *m),
            ProbeModel::Beach => crate::models::beach(2, 1, 1, 2),
        }
    }

    /// Coexistence interaction at inverse temperature / activity `beta`.
    ///
    /// The spin model probes with the pair coupling: the triple-product
    /// window is collar-sign symmetric at the origin (its exact gap is zero),
    /// so it carries no coexistence signal.
    pub fn potential(&self, space: &ShiftSpace, beta: f64) -> Result<LocalPotential> {
        Ok(match self {
            ProbeModel::ThreeSpin => LocalPotential::IsingPair { beta },
            ProbeModel::Iceberg { .. } => {
                let numeric = space.numeric_values()?;
                LocalPotential::Site {
                    values: numeric.iter().map(|v| beta * v.abs()).collect(),
                }
            }
            ProbeModel::Beach => {
                // activity on the rigid alpha class
                let values = space
                    .alphabet()
                    .iter()
                    .map(|name| if name.starts_with('q') { beta } else { 0.0 })
                    .collect();
                LocalPotential::Site { values }
            }
        })
    }

    /// The two extremal boundary symbols.
    pub fn collars(&self, space: &ShiftSpace) -> Result<(SymbolId, SymbolId)> {
        Ok(match self {
            ProbeModel::ThreeSpin => {
                (space.symbol_index("+1")?, space.symbol_index("-1")?)
            }
            ProbeModel::Iceberg { m } => (
                space.symbol_index(&format!("+{m}"))?,
                space.symbol_index(&format!("-{m}"))?,
            ),
            ProbeModel::Beach => (space.symbol_index("q0b0")?, space.symbol_index("q0b1")?),
        })
    }

    /// Per-symbol origin observable.
    pub fn observable(&self, space: &ShiftSpace) -> Result<Vec<f64>> {
        Ok(match self {
            ProbeModel::ThreeSpin => space.numeric_values()?,
            ProbeModel::Iceberg { .. } => space
                .numeric_values()?
                .iter()
                .map(|v| v.signum())
                .collect(),
            ProbeModel::Beach => space
                .alphabet()
                .iter()
                .map(|name| if name.ends_with("b0") { 1.0 } else { -1.0 })
                .collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbePoint {
    pub beta: f64,
    pub size: Coord,
    pub mean_plus: f64,
    pub mean_minus: f64,
    pub se_plus: f64,
    pub se_minus: f64,
}

impl ProbePoint {
    pub fn gap(&self) -> f64 {
        (self.mean_plus - self.mean_minus).abs()
    }
    pub fn gap_stderr(&self) -> f64 {
        (self.se_plus.powi(2) + self.se_minus.powi(2)).sqrt()
    }
    /// Gap measured in combined batch-means standard errors.
    pub fn sigmas(&self) -> f64 {
        let se = self.gap_stderr();
        if se == 0.0 {
            if self.gap() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.gap() / se
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseCurve {
    pub points: Vec<ProbePoint>,
    /// Gap is nondecreasing along the beta grid at each size.
    pub monotone_in_beta: bool,
}

/// Difference of the mean origin observable under the two extremal collars
/// across a beta grid, with batch-means error bars pooled over seeds.
pub fn phase_probe(
    model: ProbeModel,
    betas: &[f64],
    sizes: &[Coord],
    sweeps: u64,
    seeds: &[u64],
) -> Result<PhaseCurve> {
    let space = model.space();
    let observable = model.observable(&space)?;
    let (plus, minus) = model.collars(&space)?;
    let mut points = Vec::new();

    for &size in sizes {
        let lo = -(size / 2);
        let volume = SiteSet::box_range(
            &vec![lo; space.dim()],
            &vec![lo + size - 1; space.dim()],
        )?;
        let origin = volume
            .index_of(&vec![0; space.dim()])
            .expect("origin inside the volume");
        for &beta in betas {
            let potential = model.potential(&space, beta)?;
            let mut side_stats = [(0.0, 0.0); 2];
            for (side, &symbol) in [plus, minus].iter().enumerate() {
                let collar = build_collar(&volume, CollarRule::Symbol(symbol), 1);
                let mut batch_means: Vec<f64> = Vec::new();
                for &seed in seeds {
                    let batches = 16usize;
                    let mut sums = vec![0.0f64; batches];
                    let mut counts = vec![0u64; batches];
                    let mut kept = 0u64;
                    glauber_run(
                        &space,
                        &potential,
                        &volume,
                        &collar,
                        seed ^ (side as u64) << 16 ^ (beta.to_bits() >> 32),
                        GlauberOptions {
                            sweeps,
                            burn_in: sweeps / 5,
                            thin: 1,
                            override_safety: false,
                        },
                        |chain| {
                            let b = (kept as usize * batches / sweeps as usize)
                                .min(batches - 1);
                            kept += 1;
                            sums[b] += observable[chain.value_at(origin) as usize];
                            counts[b] += 1;
                        },
                    )?;
                    for (s, c) in sums.iter().zip(&counts) {
                        if *c > 0 {
                            batch_means.push(s / *c as f64);
                        }
                    }
                }
                let m = batch_means.iter().sum::<f64>() / batch_means.len() as f64;
                let var = batch_means
                    .iter()
                    .map(|x| (x - m).powi(2))
                    .sum::<f64>()
                    / (batch_means.len() - 1).max(1) as f64;
                side_stats[side] = (m, (var / batch_means.len() as f64).sqrt());
            }
            points.push(ProbePoint {
                beta,
                size,
                mean_plus: side_stats[0].0,
                mean_minus: side_stats[1].0,
                se_plus: side_stats[0].1,
                se_minus: side_stats[1].1,
            });
        }
    }

    let mut monotone = true;
    for &size in sizes {
        let gaps: Vec<f64> = points
            .iter()
            .filter(|p| p.size == size)
            .map(|p| p.gap())
            .collect();
        for w in gaps.windows(2) {
            // allow noise at the combined-error scale
            if w[1] < w[0] - 6.0 * points[0].gap_stderr().max(1e-9) {
                monotone = false;
            }
        }
    }
    Ok(PhaseCurve {
        points,
        monotone_in_beta: monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn zero_potential_is_uniform() {
        let x = models::golden_mean();
        let g = LocalPotential::zero(2);
        let vol = SiteSet::interval(0, 3).unwrap();
        let collar = build_collar(&vol, CollarRule::Symbol(0), 1);
        let table = finite_volume_measure(&x, &g, &vol, &collar, 1 << 20).unwrap();
        let uniform = 1.0 / table.len() as f64;
        for &p in &table.probs {
            assert!((p - uniform).abs() < 1e-12);
        }
    }

    #[test]
    fn site_potential_on_full_shift_is_product() {
        let x = models::full_shift(1, 2);
        let g = LocalPotential::Site {
            values: vec![0.0, 0.8],
        };
        let vol = SiteSet::interval(0, 2).unwrap();
        let collar = build_collar(&vol, CollarRule::Free, 1);
        let table = finite_volume_measure(&x, &g, &vol, &collar, 1 << 20).unwrap();
        let q = 0.8f64.exp() / (1.0 + 0.8f64.exp());
        for (p, &prob) in table.patterns.iter().zip(&table.probs) {
            let expect: f64 = p
                .values()
                .iter()
                .map(|&v| if v == 1 { q } else { 1.0 - q })
                .product();
            assert!((prob - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn iceberg_table_sums_to_one_and_matches_brute_force() {
        let x = models::iceberg(2, 1);
        let g = LocalPotential::Site {
            values: vec![0.2, 0.0, -0.1],
        };
        let vol = SiteSet::box_range(&[0, 0], &[2, 2]).unwrap();
        let zero = x.symbol_index("0").unwrap();
        let collar = build_collar(&vol, CollarRule::Symbol(zero), 1);
        let table = finite_volume_measure(&x, &g, &vol, &collar, 1 << 22).unwrap();
        let total: f64 = table.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // independent weight computation straight from the definition
        let all = vol.union(collar.support()).unwrap();
        let numeric = x.numeric_values().unwrap();
        let centers = energy_centers(&g, &vol, &all);
        let joint =
            enumerate_patterns(&x, &all, Some(&collar), EnumOptions::default()).unwrap();
        let weights: Vec<f64> = joint
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| g.eval(2, &numeric, c, |s| p.get(s)).unwrap())
                    .sum::<f64>()
                    .exp()
            })
            .collect();
        let z: f64 = weights.iter().sum();
        for (jp, w) in joint.iter().zip(&weights) {
            let restricted = jp.restrict(&vol).unwrap();
            let got = table.prob_of(&restricted).unwrap();
            assert!((got - w / z).abs() < 1e-12);
        }
    }

    #[test]
    fn fv_conformality_identities() {
        // zero potential: all ratios are 1
        let x = models::golden_mean();
        let vol = SiteSet::interval(0, 5).unwrap();
        let collar = build_collar(&vol, CollarRule::Symbol(0), 1);
        let table =
            finite_volume_measure(&x, &LocalPotential::zero(2), &vol, &collar, 1 << 20)
                .unwrap();
        let window = SiteSet::interval(1, 4).unwrap();
        let rep = conformality_check_fv(&x, &table, &window).unwrap();
        assert!(rep.swaps_checked > 0);
        assert!(rep.max_deviation <= 1e-12);

        // three-spin interaction on a 4x4 volume with an all-plus collar
        let x = models::three_spin_ising();
        let g = LocalPotential::ThreeSpin { beta: 0.5 };
        let vol = SiteSet::box_range(&[0, 0], &[3, 3]).unwrap();
        let plus = x.symbol_index("+1").unwrap();
        let collar = build_collar(&vol, CollarRule::Symbol(plus), 1);
        let table = finite_volume_measure(&x, &g, &vol, &collar, 1 << 20).unwrap();
        let rep = conformality_check_fv(&x, &table, &vol).unwrap();
        assert!(rep.swaps_checked > 0);
        assert!(rep.max_deviation <= 1e-12, "dev {}", rep.max_deviation);
    }

    #[test]
    fn entropy_scan_full_and_golden() {
        let x = models::full_shift(1, 2);
        let scan = box_entropy_scan(&x, 4, 0, 1 << 22).unwrap();
        for p in &scan.points {
            assert!((p.normalized - 2f64.ln()).abs() < 1e-12);
        }
        let gm = models::golden_mean();
        let scan = box_entropy_scan(&gm, 12, 0, 1 << 24).unwrap();
        let last = scan.points.last().unwrap();
        let target = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((last.normalized - target).abs() < 0.05);
    }

    #[test]
    fn entropy_scan_truncates_at_cap() {
        let x = models::full_shift(2, 3);
        let scan = box_entropy_scan(&x, 4, 0, 20_000).unwrap();
        assert!(scan.truncated);
        assert!(!scan.points.is_empty());
    }

    #[test]
    fn subadditivity_surrogate() {
        // log N(2n+1) <= 2^d log N(n) + log|S| * ((4n+3)^d - (4n+2)^d)
        for (space, n_max) in [
            (models::golden_mean(), 6),
            (models::full_shift(1, 2), 4),
            (models::checkerboard(2), 2),
        ] {
            let d = space.dim() as i32;
            let s = space.symbol_count() as f64;
            for n in 1..=n_max {
                let small = SiteSet::sup_ball(&vec![0; d as usize], n);
                let big = SiteSet::sup_ball(&vec![0; d as usize], 2 * n + 1);
                let count = |w: &SiteSet| {
                    crate::enumerate::count_patterns(
                        &space,
                        w,
                        None,
                        EnumOptions::default(),
                    )
                    .unwrap() as f64
                };
                let ln_small = count(&small).ln();
                let ln_big = count(&big).ln();
                let surface = ((4 * n + 3) as f64).powi(d) - ((4 * n + 2) as f64).powi(d);
                assert!(
                    ln_big <= (1 << d) as f64 * ln_small + s.ln() * surface + 1e-9,
                    "n = {n}"
                );
            }
        }
    }

    #[test]
    fn empirical_pressure_on_bernoulli_samples() {
        use rand::SeedableRng;
        let x = models::full_shift(1, 2);
        let vol = SiteSet::interval(0, 63).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a = crate::onedim::TransitionMatrix::from_space(&x).unwrap();
        let mu = crate::onedim::parry_measure(&a).unwrap();
        let samples: Vec<Pattern> = (0..400)
            .map(|_| Pattern::new(vol.clone(), mu.sample_word(64, &mut rng)).unwrap())
            .collect();
        let est =
            empirical_pressure(&x, &LocalPotential::zero(2), &samples, 2).unwrap();
        // biased-down plug-in entropy for iid fair bits
        assert!(est.h_est <= 2f64.ln() + 1e-9);
        assert!(est.h_est >= 0.95 * 2f64.ln(), "h {}", est.h_est);
        assert!(!est.undersampled);
        assert!((est.pressure_est - est.h_est).abs() < 1e-12);
    }

    #[test]
    fn triple_product_window_has_no_collar_gap() {
        // exact finite-volume check of the gauge symmetry: opposite constant
        // collars give the same origin marginal for the triple product,
        // while the pair coupling separates them
        let x = models::three_spin_ising();
        let plus = x.symbol_index("+1").unwrap();
        let minus = x.symbol_index("-1").unwrap();
        let numeric = x.numeric_values().unwrap();
        let vol = SiteSet::box_range(&[-1, -1], &[1, 1]).unwrap();
        let origin_mean = |g: &LocalPotential, sym| {
            let collar = build_collar(&vol, CollarRule::Symbol(sym), 1);
            let table = finite_volume_measure(&x, g, &vol, &collar, 1 << 20).unwrap();
            table
                .patterns
                .iter()
                .zip(&table.probs)
                .map(|(p, &pr)| pr * numeric[p.get(&[0, 0]).unwrap() as usize])
                .sum::<f64>()
        };
        let triple = LocalPotential::ThreeSpin { beta: 1.2 };
        let gap3 = origin_mean(&triple, plus) - origin_mean(&triple, minus);
        assert!(gap3.abs() < 1e-12, "triple-product gap {gap3}");
        let pair = LocalPotential::IsingPair { beta: 1.2 };
        let gap2 = origin_mean(&pair, plus) - origin_mean(&pair, minus);
        assert!(gap2 > 0.5, "pair gap {gap2}");
    }

    #[test]
    fn thermo_scan_golden_mean_stabilizes() {
        let x = models::golden_mean();
        let g = LocalPotential::zero(2);
        let targets = vec![Pattern::from_pairs(1, &[(vec![0], 1)]).unwrap()];
        let scan = thermo_limit_scan(
            &x,
            &g,
            &[2, 3, 4, 5, 6, 7, 8],
            &[CollarRule::Symbol(0), CollarRule::Free],
            &targets,
            &ScanOptions::default(),
        )
        .unwrap();
        assert!(scan.stabilized);
        assert!(!scan.boundary_sensitive);
        // diffs shrink monotonically below 1e-3
        for (_, _, diffs) in &scan.successive_diffs {
            assert!(diffs.windows(2).all(|w| w[1] <= w[0]));
            assert!(*diffs.last().unwrap() < 1e-3);
        }
    }
}
