//! Exact one-dimensional theory: transfer matrices, the periodic
//! decomposition, maximal-entropy and twisted Markov measures, specification
//! and conformality checks, and block recoding for period-N chains.

use rand::Rng;

use crate::error::{Error, Result};
use crate::relations::CylinderEvaluator;
use crate::shift::{Pattern, ShiftSpace, SymbolId};

const POWER_TOL: f64 = 1e-15;
const POWER_MAX_ITERS: usize = 500_000;
const POWER_STALL: usize = 200;

/// 0/1 transition matrix of a 1D shift space (`allowed[s][t]` iff the word
/// `st` is admissible).
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub n: usize,
    pub allowed: Vec<Vec<bool>>,
}

impl TransitionMatrix {
    pub fn new(allowed: Vec<Vec<bool>>) -> Result<Self> {
        let n = allowed.len();
        if n == 0 || allowed.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("transition matrix must be square".into()));
        }
        Ok(TransitionMatrix { n, allowed })
    }

    pub fn from_space(space: &ShiftSpace) -> Result<Self> {
        if space.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: space.dim(),
            });
        }
        let n = space.symbol_count();
        let allowed = (0..n)
            .map(|s| {
                (0..n)
                    .map(|t| space.axis_allowed(0, s as SymbolId, t as SymbolId))
                    .collect()
            })
            .collect();
        Ok(TransitionMatrix { n, allowed })
    }

    /// Strongly connected components under mutual reachability.
    pub fn communicating_classes(&self) -> Vec<Vec<usize>> {
        let reach = self.reachability();
        let mut seen = vec![false; self.n];
        let mut classes = Vec::new();
        for i in 0..self.n {
            if seen[i] {
                continue;
            }
            let mut class = Vec::new();
            for j in 0..self.n {
                if reach[i][j] && reach[j][i] {
                    class.push(j);
                    seen[j] = true;
                }
            }
            classes.push(class);
        }
        classes
    }

    fn reachability(&self) -> Vec<Vec<bool>> {
        // reflexive-transitive closure by repeated squaring
        let mut r: Vec<Vec<bool>> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| i == j || self.allowed[i][j])
                    .collect()
            })
            .collect();
        let mut steps = 1;
        while steps < self.n {
            let mut next = vec![vec![false; self.n]; self.n];
            for i in 0..self.n {
                for k in 0..self.n {
                    if r[i][k] {
                        for j in 0..self.n {
                            if r[k][j] {
                                next[i][j] = true;
                            }
                        }
                    }
                }
            }
            r = next;
            steps *= 2;
        }
        r
    }

    pub fn is_irreducible(&self) -> bool {
        let reach = self.reachability();
        reach.iter().all(|row| row.iter().all(|&b| b))
    }

    /// Period of an irreducible matrix (gcd of cycle lengths).
    pub fn period(&self) -> Result<usize> {
        if !self.is_irreducible() {
            return Err(Error::NotIrreducible {
                classes: self.communicating_classes(),
            });
        }
        // BFS levels from vertex 0; gcd over edges of (level(u) + 1 - level(v))
        let mut level = vec![None; self.n];
        level[0] = Some(0i64);
        let mut queue = std::collections::VecDeque::from([0usize]);
        let mut g: i64 = 0;
        while let Some(u) = queue.pop_front() {
            let lu = level[u].unwrap();
            for v in 0..self.n {
                if self.allowed[u][v] {
                    match level[v] {
                        None => {
                            level[v] = Some(lu + 1);
                            queue.push_back(v);
                        }
                        Some(lv) => {
                            g = gcd(g, (lu + 1 - lv).abs());
                        }
                    }
                }
            }
        }
        Ok(if g == 0 { self.n } else { g as usize })
    }

    pub fn is_primitive(&self) -> bool {
        self.is_irreducible() && self.period().map(|p| p == 1).unwrap_or(false)
    }

    /// Number of admissible words of length `len` (exact integer count).
    pub fn word_count(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let mut counts = vec![1u128; self.n];
        for _ in 1..len {
            let mut next = vec![0u128; self.n];
            for s in 0..self.n {
                for t in 0..self.n {
                    if self.allowed[s][t] {
                        next[s] += counts[t];
                    }
                }
            }
            counts = next;
        }
        counts.iter().sum()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug)]
pub struct PeriodicDecomposition {
    pub period: usize,
    /// Symbol classes `X_0, ..., X_{N-1}`, cyclically permuted by the shift;
    /// the class of symbol 0 comes first.
    pub classes: Vec<Vec<SymbolId>>,
}

/// Periodic decomposition of an irreducible transition matrix. Each class's
/// N-step restriction is primitive; this is verified.
pub fn periodic_decomposition(a: &TransitionMatrix) -> Result<PeriodicDecomposition> {
    let period = a.period()?;
    // classes by BFS level mod period, rooted at symbol 0
    let mut level = vec![None; a.n];
    level[0] = Some(0i64);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for v in 0..a.n {
            if a.allowed[u][v] && level[v].is_none() {
                level[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    let mut classes: Vec<Vec<SymbolId>> = vec![Vec::new(); period];
    for s in 0..a.n {
        let l = level[s].unwrap().rem_euclid(period as i64) as usize;
        classes[l].push(s as SymbolId);
    }
    // verify the cyclic structure and N-step primitivity
    for (k, class) in classes.iter().enumerate() {
        let next = &classes[(k + 1) % period];
        for &s in class {
            for t in 0..a.n {
                if a.allowed[s as usize][t] && !next.contains(&(t as SymbolId)) {
                    return Err(Error::InvalidModel(
                        "periodic classes are not cyclically permuted".into(),
                    ));
                }
            }
        }
        let sub = n_step_restriction(a, class, period);
        if !sub.is_primitive() {
            return Err(Error::NotPrimitive { period });
        }
    }
    Ok(PeriodicDecomposition { period, classes })
}

fn n_step_restriction(a: &TransitionMatrix, class: &[SymbolId], n: usize) -> TransitionMatrix {
    // boolean A^n restricted to the class
    let mut pow: Vec<Vec<bool>> = (0..a.n)
        .map(|i| (0..a.n).map(|j| i == j).collect())
        .collect();
    for _ in 0..n {
        let mut next = vec![vec![false; a.n]; a.n];
        for i in 0..a.n {
            for k in 0..a.n {
                if pow[i][k] {
                    for j in 0..a.n {
                        if a.allowed[k][j] {
                            next[i][j] = true;
                        }
                    }
                }
            }
        }
        pow = next;
    }
    let allowed = class
        .iter()
        .map(|&s| class.iter().map(|&t| pow[s as usize][t as usize]).collect())
        .collect();
    TransitionMatrix {
        n: class.len(),
        allowed,
    }
}

/// A stationary Markov chain on the symbols, built from Perron eigendata of a
/// (possibly potential-twisted) transfer matrix.
#[derive(Clone, Debug)]
pub struct MarkovMeasure {
    pub stationary: Vec<f64>,
    pub kernel: Vec<Vec<f64>>,
    pub support: Vec<Vec<bool>>,
    pub lambda: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    /// None for the maximal-entropy measure; the twisting site potential otherwise.
    pub potential: Option<Vec<f64>>,
}

fn power_iteration(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = m.len();
    let mut v = vec![1.0 / n as f64; n];
    let mut best: Option<(f64, f64, Vec<f64>)> = None; // (residual, lambda, vector)
    let mut since_best = 0usize;
    for _ in 0..POWER_MAX_ITERS {
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mi = &m[i];
            let mut acc = 0.0;
            for j in 0..n {
                acc += mi[j] * v[j];
            }
            w[i] = acc;
        }
        let norm: f64 = w.iter().map(|x| x.abs()).sum();
        if norm == 0.0 {
            return Err(Error::NoConvergence(0));
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        let lambda = norm;
        // relative residual ||Mv - lambda v||_inf / lambda
        let mut resid: f64 = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += m[i][j] * w[j];
            }
            resid = resid.max((acc - lambda * w[i]).abs());
        }
        v = w.clone();
        if resid <= POWER_TOL * lambda {
            return Ok((lambda, v));
        }
        match &best {
            Some((r, _, _)) if *r <= resid => {
                since_best += 1;
                // residual at the floating-point floor: accept the best seen
                if since_best >= POWER_STALL {
                    let (_, l, vec) = best.unwrap();
                    return Ok((l, vec));
                }
            }
            _ => {
                best = Some((resid, lambda, w));
                since_best = 0;
            }
        }
    }
    Err(Error::NoConvergence(POWER_MAX_ITERS))
}

fn build_measure(a: &TransitionMatrix, phi: Option<&[f64]>) -> Result<MarkovMeasure> {
    if !a.is_irreducible() {
        return Err(Error::NotIrreducible {
            classes: a.communicating_classes(),
        });
    }
    let period = a.period()?;
    if period != 1 {
        return Err(Error::NotPrimitive { period });
    }
    if let Some(p) = phi {
        if p.len() != a.n {
            return Err(Error::InvalidPotential(format!(
                "potential has {} entries for {} symbols",
                p.len(),
                a.n
            )));
        }
    }
    let n = a.n;
    // twisted matrix M_{st} = A_{st} e^{phi(t)}
    let m: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            (0..n)
                .map(|t| {
                    if a.allowed[s][t] {
                        match phi {
                            Some(p) => p[t].exp(),
                            None => 1.0,
                        }
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let (lambda, right) = power_iteration(&m)?;
    let mt: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect();
    let (_, left) = power_iteration(&mt)?;

    let kernel: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            (0..n)
                .map(|t| m[s][t] * right[t] / (lambda * right[s]))
                .collect()
        })
        .collect();
    let dot: f64 = (0..n).map(|i| left[i] * right[i]).sum();
    let stationary: Vec<f64> = (0..n).map(|i| left[i] * right[i] / dot).collect();
    Ok(MarkovMeasure {
        stationary,
        kernel,
        support: a.allowed.clone(),
        lambda,
        right,
        left,
        potential: phi.map(|p| p.to_vec()),
    })
}

/// The maximal-entropy Markov measure of a primitive transition matrix.
pub fn parry_measure(a: &TransitionMatrix) -> Result<MarkovMeasure> {
    build_measure(a, None)
}

/// The Markov measure twisted by a site potential; `phi = 0` reproduces
/// [`parry_measure`] bit for bit.
pub fn gibbs_markov(a: &TransitionMatrix, phi: &[f64]) -> Result<MarkovMeasure> {
    build_measure(a, Some(phi))
}

impl MarkovMeasure {
    pub fn n(&self) -> usize {
        self.stationary.len()
    }

    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (s, row) in self.kernel.iter().enumerate() {
            for &p in row {
                if p > 0.0 {
                    h -= self.stationary[s] * p * p.ln();
                }
            }
        }
        h
    }

    /// Probability of a contiguous word; inadmissible words get 0.
    pub fn word_prob(&self, word: &[SymbolId]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        let mut p = self.stationary[word[0] as usize];
        for w in word.windows(2) {
            p *= self.kernel[w[0] as usize][w[1] as usize];
            if p == 0.0 {
                return 0.0;
            }
        }
        p
    }

    /// Probability of a pattern on an arbitrary finite 1D support, filling
    /// the gaps with kernel powers.
    pub fn pattern_prob(&self, p: &Pattern) -> Result<f64> {
        if p.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: p.dim(),
            });
        }
        if p.support().is_empty() {
            return Ok(1.0);
        }
        let sites = p.support().sites();
        let vals = p.values();
        let mut prob = self.stationary[vals[0] as usize];
        for i in 1..sites.len() {
            let gap = (sites[i][0] - sites[i - 1][0]) as usize;
            let step = self.kernel_power(gap);
            prob *= step[vals[i - 1] as usize][vals[i] as usize];
            if prob == 0.0 {
                return Ok(0.0);
            }
        }
        Ok(prob)
    }

    fn kernel_power(&self, k: usize) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut out: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _ in 0..k {
            let mut next = vec![vec![0.0; n]; n];
            for i in 0..n {
                for l in 0..n {
                    if out[i][l] > 0.0 {
                        for j in 0..n {
                            next[i][j] += out[i][l] * self.kernel[l][j];
                        }
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Stationary sample of a contiguous word.
    pub fn sample_word<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<SymbolId> {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut s = draw(&self.stationary, rng);
        out.push(s as SymbolId);
        for _ in 1..len {
            s = draw(&self.kernel[s], rng);
            out.push(s as SymbolId);
        }
        out
    }
}

fn draw<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

impl CylinderEvaluator for MarkovMeasure {
    fn dim(&self) -> usize {
        1
    }
    fn prob(&self, p: &Pattern) -> Result<f64> {
        self.pattern_prob(p)
    }
}

fn admissible_words(support: &[Vec<bool>], len: usize) -> Vec<Vec<SymbolId>> {
    let n = support.len();
    let mut words: Vec<Vec<SymbolId>> = (0..n as u16).map(|s| vec![s as SymbolId]).collect();
    for _ in 1..len {
        let mut next = Vec::new();
        for w in &words {
            let last = *w.last().unwrap() as usize;
            for t in 0..n {
                if support[last][t] {
                    let mut w2 = w.clone();
                    w2.push(t as SymbolId);
                    next.push(w2);
                }
            }
        }
        words = next;
    }
    words
}

/// Maximum of `|mu[a]/mu[b] - 1|` over same-length admissible word pairs with
/// equal first and last symbols. Vanishes (to rounding) exactly when cylinder
/// probabilities depend only on length and endpoints.
pub fn uniform_specification_check(mu: &MarkovMeasure, max_len: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for len in 2..=max_len {
        let words = admissible_words(&mu.support, len);
        let mut extremes: std::collections::HashMap<(SymbolId, SymbolId), (f64, f64)> =
            std::collections::HashMap::new();
        for w in &words {
            let p = mu.word_prob(w);
            if p <= 0.0 {
                continue;
            }
            let key = (w[0], *w.last().unwrap());
            let e = extremes.entry(key).or_insert((p, p));
            e.0 = e.0.min(p);
            e.1 = e.1.max(p);
        }
        for (_, (lo, hi)) in extremes {
            worst = worst.max(hi / lo - 1.0);
        }
    }
    worst
}

/// Maximum of `|log(mu[b]/mu[a]) - sum_j (phi(b_j) - phi(a_j))|` over
/// same-endpoint equal-length admissible pairs.
pub fn conformality_check_1d(mu: &MarkovMeasure, max_len: usize) -> f64 {
    let zeros;
    let phi: &[f64] = match &mu.potential {
        Some(p) => p,
        None => {
            zeros = vec![0.0; mu.n()];
            &zeros
        }
    };
    let mut worst: f64 = 0.0;
    for len in 2..=max_len {
        let words = admissible_words(&mu.support, len);
        let mut groups: std::collections::HashMap<(SymbolId, SymbolId), Vec<&Vec<SymbolId>>> =
            std::collections::HashMap::new();
        for w in &words {
            groups.entry((w[0], *w.last().unwrap())).or_default().push(w);
        }
        for (_, group) in groups {
            let head = group[0];
            let p_head = mu.word_prob(head);
            if p_head <= 0.0 {
                continue;
            }
            let phi_head: f64 = head.iter().map(|&s| phi[s as usize]).sum();
            for w in &group[1..] {
                let p = mu.word_prob(w);
                if p <= 0.0 {
                    continue;
                }
                let phi_w: f64 = w.iter().map(|&s| phi[s as usize]).sum();
                let dev = ((p / p_head).ln() - (phi_w - phi_head)).abs();
                worst = worst.max(dev);
            }
        }
    }
    worst
}

/// Shannon entropy of the chain and the pressure `h + int(phi)`.
pub fn entropy_pressure(mu: &MarkovMeasure, phi: &[f64]) -> (f64, f64) {
    let h = mu.entropy();
    let mean_phi: f64 = mu
        .stationary
        .iter()
        .zip(phi)
        .map(|(p, f)| p * f)
        .sum();
    (h, h + mean_phi)
}

/// Entropy+mean of an arbitrary stochastic kernel supported on `a`, with its
/// own stationary vector; used for variational-dominance trials.
pub fn kernel_pressure(a: &TransitionMatrix, kernel: &[Vec<f64>], phi: &[f64]) -> Result<f64> {
    let n = a.n;
    for (s, row) in kernel.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "kernel row {s} sums to {sum}"
            )));
        }
        for (t, &p) in row.iter().enumerate() {
            if p > 0.0 && !a.allowed[s][t] {
                return Err(Error::InvalidParameter(
                    "kernel charges a forbidden transition".into(),
                ));
            }
        }
    }
    // stationary vector by power iteration on the transpose
    let mut p = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let mut q = vec![0.0; n];
        for s in 0..n {
            for t in 0..n {
                q[t] += p[s] * kernel[s][t];
            }
        }
        let diff: f64 = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = q;
        if diff < 1e-14 {
            break;
        }
    }
    let mut h = 0.0;
    let mut mean = 0.0;
    for s in 0..n {
        mean += p[s] * phi[s];
        for t in 0..n {
            if kernel[s][t] > 0.0 {
                h -= p[s] * kernel[s][t] * kernel[s][t].ln();
            }
        }
    }
    Ok(h + mean)
}

/// Block recoding of a period-N class: alphabet of admissible N-blocks
/// starting in the class, with the N-step transition rule.
#[derive(Clone, Debug)]
pub struct BlockCoding {
    pub blocks: Vec<Vec<SymbolId>>,
    pub matrix: TransitionMatrix,
}

pub fn block_recode(
    a: &TransitionMatrix,
    class: &[SymbolId],
    n: usize,
    cap: usize,
) -> Result<BlockCoding> {
    let mut blocks: Vec<Vec<SymbolId>> = class.iter().map(|&s| vec![s]).collect();
    for _ in 1..n {
        let mut next = Vec::new();
        for b in &blocks {
            let last = *b.last().unwrap() as usize;
            for t in 0..a.n {
                if a.allowed[last][t] {
                    let mut b2 = b.clone();
                    b2.push(t as SymbolId);
                    next.push(b2);
                    if next.len() > cap {
                        return Err(Error::EnumerationCap {
                            emitted: cap as u64,
                        });
                    }
                }
            }
        }
        blocks = next;
    }
    let allowed = blocks
        .iter()
        .map(|b| {
            let last = *b.last().unwrap() as usize;
            blocks
                .iter()
                .map(|c| a.allowed[last][c[0] as usize])
                .collect()
        })
        .collect();
    let matrix = TransitionMatrix {
        n: blocks.len(),
        allowed,
    };
    Ok(BlockCoding { blocks, matrix })
}
