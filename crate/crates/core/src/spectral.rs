//! The free stacking product, driver-indexed product fields, and desk-scale
//! spectral diagnostics.
//!
//! Stacking independent copies of a d-dimensional shift space along a new
//! axis yields a (d+1)-dimensional space whose layers carry independent
//! measures selected by a two-symbol driver sequence. Correlations along the
//! stacking axis reproduce the driver's own correlation structure scaled by
//! the squared layer-mean gap; correlations within a layer converge to the
//! mixture value determined by the driver's one-symbol marginal. The
//! empirical classifiers below read eigenvalues, Cesaro-averaged decay or
//! plain decay off a sampled correlation series; the finer mixing
//! distinctions are carried as imported labels of the driver constructions
//! and are never claimed from data.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Coord, Site, SiteSet};
use crate::relations::CylinderEvaluator;
use crate::shift::{Constraint, Pattern, ShiftSpace, SymbolId};

/// A base space stacked along one new (last) axis with no cross-layer
/// constraint.
#[derive(Clone, Debug)]
pub struct FreeProduct {
    pub base: ShiftSpace,
    pub derived: ShiftSpace,
}

/// Builds the stacked space: base constraints on the first d axes, full on
/// the new one.
pub fn free_product(base: &ShiftSpace) -> Result<FreeProduct> {
    let allowed = match base.constraint() {
        Constraint::AxisPairs(m) => m.clone(),
        Constraint::Table(_) => {
            return Err(Error::InvalidModel(
                "free products are built over axis-pair constraints".into(),
            ))
        }
    };
    let n = base.symbol_count();
    let mut derived_allowed = allowed;
    derived_allowed.push(vec![vec![true; n]; n]);
    let derived = ShiftSpace::new_axis_pairs(
        base.dim() + 1,
        base.alphabet().to_vec(),
        derived_allowed,
    )?;
    Ok(FreeProduct {
        base: base.clone(),
        derived,
    })
}

/// Splits a stacked pattern into its layer slices (last coordinate, base
/// pattern).
pub fn layer_slices(p: &Pattern) -> Result<Vec<(Coord, Pattern)>> {
    let dim = p.dim();
    if dim < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: dim,
        });
    }
    let mut per_layer: BTreeMap<Coord, Vec<(Site, SymbolId)>> = BTreeMap::new();
    for (s, &v) in p.support().iter().zip(p.values()) {
        let layer = s[dim - 1];
        let base_site: Site = s[..dim - 1].to_vec();
        per_layer.entry(layer).or_default().push((base_site, v));
    }
    per_layer
        .into_iter()
        .map(|(layer, pairs)| Ok((layer, Pattern::from_pairs(dim - 1, &pairs)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if *self == Sign::Plus { "+" } else { "-" })
    }
}

/// Spectral class of a driver construction. These labels are imported
/// knowledge about the constructions, not conclusions drawn from samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpectralClass {
    NotTotallyErgodic,
    TotallyErgodicNotWeaklyMixing,
    WeaklyMixingNotStronglyMixing,
    StronglyMixing,
}

impl fmt::Display for SpectralClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpectralClass::NotTotallyErgodic => "not totally ergodic",
            SpectralClass::TotallyErgodicNotWeaklyMixing => {
                "totally ergodic, not weakly mixing"
            }
            SpectralClass::WeaklyMixingNotStronglyMixing => {
                "weakly mixing, not strongly mixing"
            }
            SpectralClass::StronglyMixing => "strongly mixing",
        };
        write!(f, "{s}")
    }
}

/// Shift-stationary two-symbol driver measures.
#[derive(Clone, Debug)]
pub enum DriverMeasure {
    PointMass(Sign),
    Periodic(Vec<Sign>),
    /// Rotation coding: minuses exactly where `n*alpha + phase mod 1 < alpha`.
    Sturmian { alpha: f64 },
    /// Substitution word 0 -> 0010, 1 -> 1, read through a uniformly placed
    /// window (0 as plus).
    Chacon,
    Bernoulli { q: f64 },
}

impl DriverMeasure {
    /// Stationary sample of the sign sequence for layers `0..len`.
    pub fn sample(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<Sign> {
        match self {
            DriverMeasure::PointMass(s) => vec![*s; len],
            DriverMeasure::Periodic(word) => {
                let offset = rng.gen_range(0..word.len());
                (0..len).map(|i| word[(i + offset) % word.len()]).collect()
            }
            DriverMeasure::Sturmian { alpha } => {
                let phase: f64 = rng.gen();
                (0..len)
                    .map(|n| {
                        let x = (n as f64 * alpha + phase).fract();
                        if x < *alpha {
                            Sign::Minus
                        } else {
                            Sign::Plus
                        }
                    })
                    .collect()
            }
            DriverMeasure::Chacon => {
                let word = chacon_word(len.max(1) * 50);
                let offset = rng.gen_range(0..=word.len() - len);
                word[offset..offset + len]
                    .iter()
                    .map(|&b| if b { Sign::Minus } else { Sign::Plus })
                    .collect()
            }
            DriverMeasure::Bernoulli { q } => (0..len)
                .map(|_| {
                    if rng.gen::<f64>() < *q {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                })
                .collect(),
        }
    }

    /// Limiting one-symbol frequencies `(plus, minus)`.
    pub fn sign_frequencies(&self) -> (f64, f64) {
        match self {
            DriverMeasure::PointMass(Sign::Plus) => (1.0, 0.0),
            DriverMeasure::PointMass(Sign::Minus) => (0.0, 1.0),
            DriverMeasure::Periodic(word) => {
                let plus = word.iter().filter(|&&s| s == Sign::Plus).count() as f64;
                (plus / word.len() as f64, 1.0 - plus / word.len() as f64)
            }
            DriverMeasure::Sturmian { alpha } => (1.0 - alpha, *alpha),
            DriverMeasure::Chacon => (2.0 / 3.0, 1.0 / 3.0),
            DriverMeasure::Bernoulli { q } => (*q, 1.0 - *q),
        }
    }

    /// Known spectral class of the driver construction (imported label).
    pub fn label(&self) -> SpectralClass {
        match self {
            DriverMeasure::PointMass(_) => SpectralClass::StronglyMixing,
            DriverMeasure::Periodic(_) => SpectralClass::NotTotallyErgodic,
            DriverMeasure::Sturmian { .. } => SpectralClass::TotallyErgodicNotWeaklyMixing,
            DriverMeasure::Chacon => SpectralClass::WeaklyMixingNotStronglyMixing,
            DriverMeasure::Bernoulli { .. } => SpectralClass::StronglyMixing,
        }
    }

    pub fn name(&self) -> String {
        match self {
            DriverMeasure::PointMass(s) => format!("point_mass({s})"),
            DriverMeasure::Periodic(w) => {
                let word: String = w.iter().map(|s| s.to_string()).collect();
                format!("periodic({word})")
            }
            DriverMeasure::Sturmian { alpha } => format!("sturmian({alpha})"),
            DriverMeasure::Chacon => "chacon".into(),
            DriverMeasure::Bernoulli { q } => format!("bernoulli({q})"),
        }
    }
}

fn chacon_word(min_len: usize) -> Vec<bool> {
    let mut w = vec![false];
    while w.len() < min_len {
        let mut next = Vec::with_capacity(w.len() * 4);
        for &b in &w {
            if b {
                next.push(true);
            } else {
                next.extend_from_slice(&[false, false, true, false]);
            }
        }
        w = next;
    }
    w
}

/// Exact sampler/evaluator for one layer measure.
pub trait LayerSampler {
    fn dim(&self) -> usize;
    fn sample_window(&self, window: &SiteSet, rng: &mut ChaCha8Rng) -> Result<Pattern>;
    fn window_prob(&self, p: &Pattern) -> Result<f64>;
}

impl LayerSampler for crate::onedim::MarkovMeasure {
    fn dim(&self) -> usize {
        1
    }
    fn sample_window(&self, window: &SiteSet, rng: &mut ChaCha8Rng) -> Result<Pattern> {
        if window.is_empty() {
            return Pattern::new(window.clone(), Vec::new());
        }
        let lo = window.site(0)[0];
        let hi = window.site(window.len() - 1)[0];
        let word = self.sample_word((hi - lo + 1) as usize, rng);
        let values = window
            .iter()
            .map(|s| word[(s[0] - lo) as usize])
            .collect();
        Pattern::new(window.clone(), values)
    }
    fn window_prob(&self, p: &Pattern) -> Result<f64> {
        self.pattern_prob(p)
    }
}

impl LayerSampler for crate::thermo::ExactGibbs {
    fn dim(&self) -> usize {
        self.volume.dim()
    }
    fn sample_window(&self, window: &SiteSet, rng: &mut ChaCha8Rng) -> Result<Pattern> {
        if !window.is_subset_of(&self.volume) {
            return Err(Error::SupportMismatch(
                "layer window must lie inside the table volume".into(),
            ));
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = self.patterns.len() - 1;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u <= acc {
                chosen = i;
                break;
            }
        }
        self.patterns[chosen].restrict(window)
    }
    fn window_prob(&self, p: &Pattern) -> Result<f64> {
        self.prob(p)
    }
}

/// A constant layer: every sampled window is filled with one symbol.
pub struct PointLayer {
    pub dim: usize,
    pub symbol: SymbolId,
}

impl LayerSampler for PointLayer {
    fn dim(&self) -> usize {
        self.dim
    }
    fn sample_window(&self, window: &SiteSet, _rng: &mut ChaCha8Rng) -> Result<Pattern> {
        Ok(Pattern::constant(window.clone(), self.symbol))
    }
    fn window_prob(&self, p: &Pattern) -> Result<f64> {
        Ok(if p.values().iter().all(|&v| v == self.symbol) {
            1.0
        } else {
            0.0
        })
    }
}

/// Layers drawn independently, layer `n` from the sampler selected by the
/// driver sign at `n`.
pub struct ProductField<'a> {
    pub plus: &'a dyn LayerSampler,
    pub minus: &'a dyn LayerSampler,
}

impl<'a> ProductField<'a> {
    pub fn sampler_for(&self, sign: Sign) -> &'a dyn LayerSampler {
        match sign {
            Sign::Plus => self.plus,
            Sign::Minus => self.minus,
        }
    }

    /// Samples the field on a stacked window. `eta[i]` drives layer
    /// `i - eta_origin`; the window's layer range must stay inside.
    pub fn sample(
        &self,
        eta: &[Sign],
        eta_origin: i64,
        window: &SiteSet,
        rng: &mut ChaCha8Rng,
    ) -> Result<Pattern> {
        let dim = window.dim();
        let mut out: Vec<(Site, SymbolId)> = Vec::with_capacity(window.len());
        let mut per_layer: BTreeMap<Coord, Vec<Site>> = BTreeMap::new();
        for s in window.iter() {
            per_layer
                .entry(s[dim - 1])
                .or_default()
                .push(s[..dim - 1].to_vec());
        }
        for (layer, base_sites) in per_layer {
            let idx = layer + eta_origin;
            if idx < 0 || idx as usize >= eta.len() {
                return Err(Error::InvalidParameter(format!(
                    "window layer {layer} is outside the driver path"
                )));
            }
            let sampler = self.sampler_for(eta[idx as usize]);
            let base_window = SiteSet::new(dim - 1, base_sites)?;
            let base_pattern = sampler.sample_window(&base_window, rng)?;
            for (bs, &v) in base_pattern.support().iter().zip(base_pattern.values()) {
                let mut site = bs.clone();
                site.push(layer);
                out.push((site, v));
            }
        }
        Pattern::from_pairs(dim, &out)
    }
}

/// Cylinder evaluator of a product field at a fixed driver path.
pub struct ProductFieldEvaluator<'a> {
    pub field: ProductField<'a>,
    pub eta: Vec<Sign>,
    pub eta_origin: i64,
}

impl<'a> CylinderEvaluator for ProductFieldEvaluator<'a> {
    fn dim(&self) -> usize {
        self.field.plus.dim() + 1
    }
    fn prob(&self, p: &Pattern) -> Result<f64> {
        let mut total = 1.0;
        for (layer, slice) in layer_slices(p)? {
            let idx = layer + self.eta_origin;
            if idx < 0 || idx as usize >= self.eta.len() {
                return Err(Error::InvalidParameter(format!(
                    "cylinder layer {layer} is outside the driver path"
                )));
            }
            total *= self
                .field
                .sampler_for(self.eta[idx as usize])
                .window_prob(&slice)?;
        }
        Ok(total)
    }
}

/// Monte-Carlo correlation series of a cylinder observable along an axis.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationSeries {
    pub lags: Vec<usize>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub mean: f64,
    /// Estimated variance of the conditional layer mean (the line part of
    /// the lag-0 value; the within-layer pedestal is excluded).
    pub mixture_c0: f64,
    pub observable: String,
    pub axis: Vec<Coord>,
    pub replicas: u64,
    pub driver: Option<String>,
    pub driver_label: Option<SpectralClass>,
}

impl CorrelationSeries {
    /// Synthetic series (tests, external data).
    pub fn from_values(estimates: Vec<f64>, stderrs: Vec<f64>) -> Self {
        let mixture_c0 = estimates.first().copied().unwrap_or(0.0);
        CorrelationSeries {
            lags: (0..estimates.len()).collect(),
            mean: 0.0,
            mixture_c0,
            estimates,
            stderrs,
            observable: "synthetic".into(),
            axis: vec![],
            replicas: 0,
            driver: None,
            driver_label: None,
        }
    }

    pub fn max_lag(&self) -> usize {
        *self.lags.last().unwrap_or(&0)
    }

    /// `C(0) >= |C(k)| - 3 stderr` for every lag.
    pub fn sanity_ok(&self) -> bool {
        let c0 = self.estimates[0];
        self.estimates
            .iter()
            .zip(&self.stderrs)
            .all(|(&c, &se)| c0 >= c.abs() - 3.0 * se)
    }

    pub fn mean_stderr(&self) -> f64 {
        let tail = &self.stderrs[1..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CorrelationOptions {
    pub max_lag: usize,
    pub replicas: u64,
    pub batches: usize,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions {
            max_lag: 64,
            replicas: 20_000,
            batches: 32,
        }
    }
}

/// Estimates `C(k) = E[f * (f o T_{k axis})] - E[f]^2` for a cylinder
/// indicator `f`, with batch-means errors over independent replicas.
///
/// Each replica draws a fresh driver path and field; replicas are seeded by
/// stream so the result does not depend on evaluation order.
pub fn correlation_series(
    field: &ProductField,
    driver: &DriverMeasure,
    observable: &Pattern,
    axis: &[Coord],
    opts: &CorrelationOptions,
    seed: u64,
) -> Result<CorrelationSeries> {
    let dim = observable.dim();
    if axis.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: axis.len(),
        });
    }
    if axis.iter().all(|&a| a == 0) {
        return Err(Error::InvalidParameter("axis must be nonzero".into()));
    }
    let k_max = opts.max_lag;
    // observable windows at every lag
    let windows: Vec<Pattern> = (0..=k_max)
        .map(|k| {
            let shift: Vec<Coord> = axis.iter().map(|&a| -a * k as Coord).collect();
            crate::shift::shift_pattern(observable, &shift)
        })
        .collect();
    let mut union = observable.support().clone();
    for w in &windows[1..] {
        union = union.union(w.support())?;
    }
    // driver path covering the union's layer range
    let layer_lo = union.iter().map(|s| s[dim - 1]).min().unwrap();
    let layer_hi = union.iter().map(|s| s[dim - 1]).max().unwrap();
    let eta_len = (layer_hi - layer_lo + 1) as usize;
    let eta_origin = -layer_lo;

    let batches = opts.batches.max(2);
    let mut prod_sum = vec![0.0f64; k_max + 1];
    let mut f_sum = 0.0f64;
    let mut f_count = 0u64;
    let mut batch_prod = vec![vec![0.0f64; k_max + 1]; batches];
    let mut batch_f = vec![0.0f64; batches];
    let mut batch_n = vec![0u64; batches];
    // conditional-mean estimates by driver sign
    let mut sign_sum = [0.0f64; 2];
    let mut sign_count = [0u64; 2];

    for rep in 0..opts.replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep + 1);
        let eta = driver.sample(eta_len, &mut rng);
        let x = field.sample(&eta, eta_origin, &union, &mut rng)?;
        let b = (rep as usize * batches / opts.replicas as usize).min(batches - 1);
        let fs: Vec<f64> = windows
            .iter()
            .map(|w| {
                let hit = w
                    .support()
                    .iter()
                    .all(|s| x.get(s) == w.get(s));
                hit as u8 as f64
            })
            .collect();
        for (k, &fk) in fs.iter().enumerate() {
            prod_sum[k] += fs[0] * fk;
            batch_prod[b][k] += fs[0] * fk;
            f_sum += fk;
            f_count += 1;
            batch_f[b] += fk;
            batch_n[b] += 1;
            // sign of the layer carrying window k
            let layer = windows[k].support().site(0)[dim - 1];
            let sign = eta[(layer + eta_origin) as usize];
            let si = (sign == Sign::Minus) as usize;
            sign_sum[si] += fk;
            sign_count[si] += 1;
        }
    }

    let mean = f_sum / f_count as f64;
    let estimates: Vec<f64> = prod_sum
        .iter()
        .map(|&s| s / opts.replicas as f64 - mean * mean)
        .collect();
    let mut stderrs = vec![0.0f64; k_max + 1];
    for k in 0..=k_max {
        let means: Vec<f64> = (0..batches)
            .filter(|&b| batch_n[b] > 0)
            .map(|b| {
                let reps_in_batch = batch_n[b] as f64 / (k_max + 1) as f64;
                let m = batch_f[b] / batch_n[b] as f64;
                batch_prod[b][k] / reps_in_batch - m * m
            })
            .collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>()
            / (means.len() - 1).max(1) as f64;
        stderrs[k] = (var / means.len() as f64).sqrt();
    }

    let (fp, fm) = driver.sign_frequencies();
    let m_plus = if sign_count[0] > 0 {
        sign_sum[0] / sign_count[0] as f64
    } else {
        mean
    };
    let m_minus = if sign_count[1] > 0 {
        sign_sum[1] / sign_count[1] as f64
    } else {
        mean
    };
    let mixture_c0 = fp * fm * (m_plus - m_minus).powi(2);

    Ok(CorrelationSeries {
        lags: (0..=k_max).collect(),
        estimates,
        stderrs,
        mean,
        mixture_c0,
        observable: format!("cylinder[{:?}]", observable.values()),
        axis: axis.to_vec(),
        replicas: opts.replicas,
        driver: Some(driver.name()),
        driver_label: Some(driver.label()),
    })
}

/// Predicted within-layer mixture limit for a cylinder observable `A = B`:
/// the variance of the conditional layer mean under the driver's one-symbol
/// marginal, from exact layer probabilities.
pub fn mixture_limit(
    driver: &DriverMeasure,
    p_plus: f64,
    p_minus: f64,
) -> f64 {
    let (fp, fm) = driver.sign_frequencies();
    fp * fm * (p_plus - p_minus).powi(2)
}

/// Discrete Fourier magnitudes of the symmetrized correlation sequence at
/// frequencies `j/(2K)`, normalized to fractions.
///
/// The lag-0 slot carries the mixture part of the variance only; the
/// within-layer pedestal would otherwise spread a flat floor over every
/// frequency.
pub fn periodogram(series: &CorrelationSeries) -> Vec<(f64, f64)> {
    let k_max = series.max_lag();
    let c = |k: usize| -> f64 {
        if k == 0 {
            series.mixture_c0
        } else {
            series.estimates[k]
        }
    };
    let mut mags = Vec::with_capacity(k_max + 1);
    for j in 0..=k_max {
        let f = j as f64 / (2 * k_max) as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for k in -(k_max as i64)..k_max as i64 {
            let ck = c(k.unsigned_abs() as usize);
            let phase = -2.0 * std::f64::consts::PI * f * k as f64;
            re += ck * phase.cos();
            im += ck * phase.sin();
        }
        mags.push((f, (re * re + im * im).sqrt()));
    }
    let total: f64 = mags.iter().map(|(_, m)| m).sum();
    if total > 0.0 {
        for m in mags.iter_mut() {
            m.1 /= total;
        }
    }
    mags
}

/// Top periodogram peaks as `(frequency, power fraction)`, sorted by power.
pub fn periodogram_peaks(series: &CorrelationSeries, top: usize) -> Result<Vec<(f64, f64)>> {
    if series.lags.len() < 32 {
        return Err(Error::InvalidParameter(
            "periodogram needs at least 32 lags".into(),
        ));
    }
    let mut mags = periodogram(series);
    mags.sort_by(|a, b| b.1.total_cmp(&a.1));
    mags.truncate(top);
    Ok(mags)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EmpiricalVerdict {
    EigenvalueDetected { frequency: f64 },
    CesaroDecay,
    PlainDecay,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub verdict: EmpiricalVerdict,
    /// Imported spectral class of the driver construction, when known.
    pub driver_label: Option<SpectralClass>,
    pub note: &'static str,
    pub noise_floor: f64,
    pub cesaro_mean: f64,
    pub max_abs: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    /// Lags below this are ignored by the decay tests.
    pub k_min: usize,
    /// Explained-variance threshold for a single-frequency line.
    pub power_threshold: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            k_min: 1,
            power_threshold: 0.5,
        }
    }
}

pub const LITERATURE_NOTE: &str = "driver label is imported knowledge of the construction; \
the mildly-mixing tier is not decidable from finite data and is never claimed empirically";

/// Reads the correlation series: plain decay (everything under per-lag
/// noise), a dominant single frequency (fit over a fine grid explaining at
/// least half the variance), Cesaro-averaged decay with surviving peaks, or
/// inconclusive.
pub fn classify_empirical(
    series: &CorrelationSeries,
    opts: &ClassifyOptions,
) -> ClassificationReport {
    let k_max = series.max_lag();
    let tail: Vec<(usize, f64, f64)> = (opts.k_min.max(1)..=k_max)
        .map(|k| (k, series.estimates[k], series.stderrs[k]))
        .collect();
    let noise_floor = 3.0 * series.mean_stderr();
    let cesaro_mean =
        tail.iter().map(|(_, c, _)| c.abs()).sum::<f64>() / tail.len() as f64;
    let max_abs = tail
        .iter()
        .map(|(_, c, _)| c.abs())
        .fold(0.0f64, f64::max);

    let report = |verdict| ClassificationReport {
        verdict,
        driver_label: series.driver_label,
        note: LITERATURE_NOTE,
        noise_floor,
        cesaro_mean,
        max_abs,
    };

    if tail.iter().all(|(_, c, se)| c.abs() <= 3.0 * se) {
        return report(EmpiricalVerdict::PlainDecay);
    }

    // single-line fit over a fine frequency grid
    let total_ss: f64 = tail.iter().map(|(_, c, _)| c * c).sum();
    let mut best = (0.0f64, 0.0f64); // (explained fraction, frequency)
    if total_ss > 0.0 {
        let grid = 4 * k_max;
        for j in 1..=grid / 2 {
            let f = j as f64 / grid as f64;
            // least squares on a*cos + b*sin
            let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (k, c, _) in &tail {
                let th = 2.0 * std::f64::consts::PI * f * *k as f64;
                let (s, co) = th.sin_cos();
                scc += co * co;
                sss += s * s;
                scs += co * s;
                syc += c * co;
                sys += c * s;
            }
            let det = scc * sss - scs * scs;
            let (a, b) = if det.abs() > 1e-12 {
                ((syc * sss - sys * scs) / det, (sys * scc - syc * scs) / det)
            } else if scc > 0.0 {
                (syc / scc, 0.0)
            } else {
                (0.0, 0.0)
            };
            let explained: f64 = a * syc + b * sys;
            let frac = explained / total_ss;
            if frac > best.0 {
                best = (frac, f);
            }
        }
    }
    if best.0 >= opts.power_threshold && max_abs > noise_floor {
        return report(EmpiricalVerdict::EigenvalueDetected { frequency: best.1 });
    }

    if cesaro_mean < noise_floor && max_abs >= noise_floor {
        return report(EmpiricalVerdict::CesaroDecay);
    }
    report(EmpiricalVerdict::Inconclusive)
}
