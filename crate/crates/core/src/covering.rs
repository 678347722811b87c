//! D-coverings of type classes.
//!
//! Small blocklengths use greedy set cover over every reproduction sequence.
//! Larger ones draw candidates from the optimal reproduction marginal of the
//! type, keep the useful ones, and patch any member left uncovered.
//! Coverage is tracked exactly with one bit per type member, indexed by the
//! member's lexicographic rank.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::DistortionGrid;
use crate::rd::{rate_distortion, DistortionSpec, RDResult, DEFAULT_TOL};
use crate::rng;
use crate::types::{mul_div, next_permutation, unrank, TypeClass};

pub const DEFAULT_UPSILON: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverConfig {
    /// Exponent slack of the covering budget `2^(n R + upsilon log2 n)`.
    pub upsilon: f64,
    /// Blocklengths below this use exact greedy cover.
    pub exact_below: usize,
    /// Cap on `|X^|^n` for exact greedy cover.
    pub exact_max_candidates: u64,
    /// Cap on `|T|` for exact greedy cover.
    pub exact_max_members: u64,
    /// Largest type class covered with exact coverage tracking.
    pub member_cap: u64,
    /// Largest `log2` of the draw budget accepted.
    pub max_budget_log2: f64,
    /// Consecutive rejections before the acceptance threshold halves.
    pub reject_window: u32,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            upsilon: DEFAULT_UPSILON,
            exact_below: 8,
            exact_max_candidates: 1 << 16,
            exact_max_members: 100_000,
            member_cap: 1 << 18,
            max_budget_log2: 48.0,
            reject_window: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverMethod {
    ExactGreedy,
    RandomizedAugmented,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoverStats {
    /// `|T|`.
    pub members: u64,
    /// Candidate draws made (randomized path).
    pub draws: u64,
    /// `log2` of the draw budget.
    pub budget_log2: f64,
    /// Members covered by drawn candidates alone.
    pub pre_augmentation_covered: u64,
    /// Codewords added to patch uncovered members.
    pub augmented: usize,
    /// Redundant codewords removed.
    pub pruned: usize,
}

impl CoverStats {
    pub fn pre_augmentation_fraction(&self) -> f64 {
        if self.members == 0 {
            1.0
        } else {
            self.pre_augmentation_covered as f64 / self.members as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Covering {
    pub type_class: TypeClass,
    /// Distinct codewords in lexicographic order.
    pub codewords: Vec<Vec<u8>>,
    pub method: CoverMethod,
    /// Per-symbol `R(Q_T, D)`.
    pub rate: f64,
    pub upsilon: f64,
    pub stats: CoverStats,
}

impl Covering {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn n(&self) -> usize {
        self.type_class.n()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringRateReport {
    pub per_symbol_rate: f64,
    pub lemma_budget: f64,
    pub slack: f64,
}

pub fn covering_rate_report(c: &Covering) -> CoveringRateReport {
    let n = c.n() as f64;
    let per_symbol_rate = (c.len().max(1) as f64).log2() / n;
    let lemma_budget = c.rate + c.upsilon * n.log2() / n;
    CoveringRateReport {
        per_symbol_rate,
        lemma_budget,
        slack: lemma_budget - per_symbol_rate,
    }
}

/// Enumerates `B(y, D) ∩ T` by depth-first search with incremental ranking.
pub(crate) struct BallIndex<'a> {
    counts: &'a [u32],
    n: usize,
    k: usize,
    grid: &'a DistortionGrid,
    budget: u64,
    size: u64,
    /// `min_x w(x, y)` per reproduction letter
    col_min: Vec<u64>,
}

struct Walk<'a> {
    y: &'a [u8],
    /// `suffix[i * k + s]`: occurrences of letter `s` in `y[i..]` (Hamming only)
    suffix: Vec<u32>,
    /// `sum_{j >= i} col_min[y_j]`
    suffix_min: Vec<u64>,
    rem: Vec<u32>,
}

impl<'a> BallIndex<'a> {
    pub(crate) fn new(t: &'a TypeClass, grid: &'a DistortionGrid) -> Result<Self> {
        let size = t.size().ok_or_else(|| {
            Error::CoverCapExceeded(format!("type {:?} has more than 2^64 members", t.counts()))
        })?;
        let col_min = (0..grid.cols)
            .map(|y| (0..grid.rows).map(|x| grid.weight(x as u8, y as u8)).min().unwrap_or(0))
            .collect();
        Ok(BallIndex {
            counts: t.counts(),
            n: t.n(),
            k: t.alphabet_size(),
            grid,
            budget: grid.budget(t.n()),
            size,
            col_min,
        })
    }

    pub(crate) fn size(&self) -> u64 {
        self.size
    }

    /// Calls `f(rank)` for every member of `T` within distortion `D` of `y`,
    /// in increasing rank order.
    pub(crate) fn for_each<F: FnMut(u64)>(&self, y: &[u8], mut f: F) {
        let k = self.k;
        let mut suffix = Vec::new();
        if self.grid.hamming_weight.is_some() {
            suffix = vec![0u32; (self.n + 1) * k];
            for i in (0..self.n).rev() {
                let (head, tail) = suffix.split_at_mut((i + 1) * k);
                head[i * k..].copy_from_slice(&tail[..k]);
                let s = y[i] as usize;
                if s < k {
                    head[i * k + s] += 1;
                }
            }
        }
        let mut suffix_min = vec![0u64; self.n + 1];
        for i in (0..self.n).rev() {
            suffix_min[i] = suffix_min[i + 1] + self.col_min[y[i] as usize];
        }
        let mut walk = Walk {
            y,
            suffix,
            suffix_min,
            rem: self.counts.to_vec(),
        };
        self.dfs(&mut walk, 0, 0, 0, self.size, &mut f);
    }

    #[inline]
    fn lower_bound(&self, walk: &Walk, i: usize) -> u64 {
        match self.grid.hamming_weight {
            Some(w) => {
                let left = (self.n - i) as u64;
                let matched: u64 = (0..self.k)
                    .map(|s| walk.rem[s].min(walk.suffix[i * self.k + s]) as u64)
                    .sum();
                w * (left - matched)
            }
            None => walk.suffix_min[i],
        }
    }

    fn dfs<F: FnMut(u64)>(&self, walk: &mut Walk, i: usize, weight: u64, base: u64, m: u64, f: &mut F) {
        if i == self.n {
            f(base);
            return;
        }
        let left = (self.n - i) as u64;
        let yi = walk.y[i];
        let mut offset = 0u64;
        for s in 0..self.k {
            let c = walk.rem[s];
            if c == 0 {
                continue;
            }
            let sub = mul_div(m, c as u64, left);
            let w = weight + self.grid.weight(s as u8, yi);
            if w <= self.budget {
                walk.rem[s] -= 1;
                if w + self.lower_bound(walk, i + 1) <= self.budget {
                    self.dfs(walk, i + 1, w, base + offset, sub, f);
                }
                walk.rem[s] += 1;
            }
            offset += sub;
        }
    }
}

struct Bitset(Vec<u64>);

impl Bitset {
    fn new(len: u64) -> Self {
        Bitset(vec![0; len.div_ceil(64) as usize])
    }
    #[inline]
    fn get(&self, i: u64) -> bool {
        self.0[(i / 64) as usize] >> (i % 64) & 1 == 1
    }
    #[inline]
    fn set(&mut self, i: u64) {
        self.0[(i / 64) as usize] |= 1 << (i % 64);
    }
}

fn solve_type(t: &TypeClass, spec: &DistortionSpec) -> Result<RDResult> {
    let r = rate_distortion(&t.pmf(), spec, DEFAULT_TOL)?;
    if !r.converged {
        return Err(Error::Numerical(format!(
            "rate-distortion solver did not converge for type {:?}",
            t.counts()
        )));
    }
    Ok(r)
}

fn check_alphabet(t: &TypeClass, spec: &DistortionSpec) -> Result<()> {
    if t.alphabet_size() != spec.source_size() {
        return Err(Error::InvalidArgument(format!(
            "type over {} letters, distortion matrix has {} rows",
            t.alphabet_size(),
            spec.source_size()
        )));
    }
    Ok(())
}

/// Greedy set cover over every reproduction sequence of length `n`.
pub fn cover_exact(t: &TypeClass, spec: &DistortionSpec) -> Result<Covering> {
    cover_exact_with(t, spec, &CoverConfig::default())
}

pub fn cover_exact_with(t: &TypeClass, spec: &DistortionSpec, cfg: &CoverConfig) -> Result<Covering> {
    check_alphabet(t, spec)?;
    let grid = spec.grid()?;
    let rd = solve_type(t, spec)?;
    exact_inner(t, &grid, cfg, rd.rate)
}

fn exact_inner(t: &TypeClass, grid: &DistortionGrid, cfg: &CoverConfig, rate: f64) -> Result<Covering> {
    let n = t.n();
    let cols = grid.cols as u64;
    let candidates = cols
        .checked_pow(n as u32)
        .filter(|&c| c <= cfg.exact_max_candidates)
        .ok_or_else(|| {
            Error::CoverCapExceeded(format!(
                "{cols}^{n} candidates exceed the exact-cover cap of {}; use the randomized cover",
                cfg.exact_max_candidates
            ))
        })?;
    let ball = BallIndex::new(t, grid)?;
    if ball.size() > cfg.exact_max_members {
        return Err(Error::CoverCapExceeded(format!(
            "type class of {} members exceeds the exact-cover cap of {}; use the randomized cover",
            ball.size(),
            cfg.exact_max_members
        )));
    }
    let mut lists: Vec<Vec<u64>> = Vec::with_capacity(candidates as usize);
    let mut y = vec![0u8; n];
    for idx in 0..candidates {
        let mut v = idx;
        for j in (0..n).rev() {
            y[j] = (v % cols) as u8;
            v /= cols;
        }
        let mut members = Vec::new();
        ball.for_each(&y, |r| members.push(r));
        lists.push(members);
    }
    let mut heap: BinaryHeap<(usize, Reverse<u64>)> = lists
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (l.len(), Reverse(i as u64)))
        .collect();
    let mut covered = Bitset::new(ball.size());
    let mut remaining = ball.size();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let (stale, Reverse(idx)) = heap.pop().ok_or_else(|| {
            Error::Integrity(format!("type {:?} cannot be D-covered", t.counts()))
        })?;
        let gain = lists[idx as usize].iter().filter(|&&r| !covered.get(r)).count();
        if gain == 0 {
            continue;
        }
        if gain < stale {
            heap.push((gain, Reverse(idx)));
            continue;
        }
        for &r in &lists[idx as usize] {
            if !covered.get(r) {
                covered.set(r);
                remaining -= 1;
            }
        }
        chosen.push(idx);
    }
    chosen.sort_unstable();
    let codewords = chosen
        .into_iter()
        .map(|mut v| {
            let mut y = vec![0u8; n];
            for j in (0..n).rev() {
                y[j] = (v % cols) as u8;
                v /= cols;
            }
            y
        })
        .collect();
    Ok(Covering {
        type_class: t.clone(),
        codewords,
        method: CoverMethod::ExactGreedy,
        rate,
        upsilon: cfg.upsilon,
        stats: CoverStats {
            members: ball.size(),
            pre_augmentation_covered: ball.size(),
            ..CoverStats::default()
        },
    })
}

/// Randomized cover from the optimal reproduction marginal of `Q_T`,
/// augmented until every member is covered.
pub fn cover_randomized(t: &TypeClass, spec: &DistortionSpec, upsilon: f64, seed: u64) -> Result<Covering> {
    let cfg = CoverConfig {
        upsilon,
        ..CoverConfig::default()
    };
    cover_randomized_with(t, spec, &cfg, seed)
}

pub fn cover_randomized_with(t: &TypeClass, spec: &DistortionSpec, cfg: &CoverConfig, seed: u64) -> Result<Covering> {
    check_alphabet(t, spec)?;
    if t.n() < 2 {
        return Err(Error::InvalidArgument("randomized cover needs n >= 2".into()));
    }
    let grid = spec.grid()?;
    let rd = solve_type(t, spec)?;
    randomized_inner(t, spec, &grid, cfg, seed, &rd)
}

/// Exact greedy below the configured crossover, randomized above.
pub fn cover_type(t: &TypeClass, spec: &DistortionSpec, cfg: &CoverConfig, seed: u64) -> Result<Covering> {
    check_alphabet(t, spec)?;
    let grid = spec.grid()?;
    cover_type_on(t, spec, &grid, cfg, seed)
}

pub(crate) fn cover_type_on(
    t: &TypeClass,
    spec: &DistortionSpec,
    grid: &DistortionGrid,
    cfg: &CoverConfig,
    seed: u64,
) -> Result<Covering> {
    let rd = solve_type(t, spec)?;
    let exact_fits = (grid.cols as u64)
        .checked_pow(t.n() as u32)
        .is_some_and(|c| c <= cfg.exact_max_candidates)
        && t.size().is_some_and(|s| s <= cfg.exact_max_members);
    if t.n() < 2 || (t.n() < cfg.exact_below && exact_fits) {
        exact_inner(t, grid, cfg, rd.rate)
    } else {
        randomized_inner(t, spec, grid, cfg, seed, &rd)
    }
}

fn randomized_inner(
    t: &TypeClass,
    spec: &DistortionSpec,
    grid: &DistortionGrid,
    cfg: &CoverConfig,
    seed: u64,
    rd: &RDResult,
) -> Result<Covering> {
    let n = t.n();
    let ball = BallIndex::new(t, grid)?;
    let size = ball.size();
    if size > cfg.member_cap {
        return Err(Error::CoverCapExceeded(format!(
            "type {:?} has {size} members, above the cap of {}",
            t.counts(),
            cfg.member_cap
        )));
    }
    let budget_log2 = n as f64 * rd.rate + cfg.upsilon * (n as f64).log2();
    if budget_log2 > cfg.max_budget_log2 {
        return Err(Error::BudgetTooLarge {
            budget: budget_log2,
            cap: cfg.max_budget_log2 as u64,
        });
    }
    let max_draws = budget_log2.exp2().floor().max(1.0) as u64;

    let key = rng::derive(seed, &t.counts().iter().map(|&c| c as u64).collect::<Vec<_>>());
    let mut gen = rng::keyed(key, 0);
    let sampler = WeightedIndex::new(rd.output_dist.probs())
        .map_err(|e| Error::Numerical(format!("bad reproduction marginal: {e}")))?;

    let mut covered = Bitset::new(size);
    let mut n_covered = 0u64;
    let mut chosen: Vec<Vec<u8>> = Vec::new();
    let mut tau = 0usize;
    let mut rejects = 0u32;
    let mut last_gain = 0u64;
    let mut draws = 0u64;
    let mut fresh = Vec::new();
    let mut y = vec![0u8; n];
    // draws that can no longer add coverage
    let mut spent: HashSet<Vec<u8>> = HashSet::new();
    while draws < max_draws && n_covered < size {
        draws += 1;
        for v in y.iter_mut() {
            *v = sampler.sample(&mut gen) as u8;
        }
        if spent.contains(&y) {
            if draws - last_gain > 16 * last_gain + 65_536 {
                break;
            }
            continue;
        }
        fresh.clear();
        ball.for_each(&y, |r| {
            if !covered.get(r) {
                fresh.push(r)
            }
        });
        if fresh.is_empty() {
            spent.insert(y.clone());
            // give up on drawing once progress has stalled for a long stretch
            if draws - last_gain > 16 * last_gain + 65_536 {
                break;
            }
            continue;
        }
        last_gain = draws;
        if tau == 0 || fresh.len() >= tau {
            if tau == 0 {
                tau = fresh.len();
            }
            for &r in &fresh {
                covered.set(r);
            }
            n_covered += fresh.len() as u64;
            chosen.push(y.clone());
            spent.insert(y.clone());
            rejects = 0;
        } else {
            rejects += 1;
            if rejects >= cfg.reject_window {
                tau = (tau / 2).max(1);
                rejects = 0;
            }
        }
    }
    let pre_augmentation_covered = n_covered;

    // patch members the draws missed with their per-letter nearest reproduction
    let mut augmented = 0usize;
    if n_covered < size {
        let nearest: Vec<u8> = (0..spec.source_size())
            .map(|x| {
                (0..grid.cols)
                    .min_by_key(|&y| grid.weight(x as u8, y as u8))
                    .unwrap() as u8
            })
            .collect();
        for r in 0..size {
            if covered.get(r) {
                continue;
            }
            let x = unrank(r, t.counts());
            let c: Vec<u8> = x.iter().map(|&s| nearest[s as usize]).collect();
            if !grid.within(grid.total_weight(&x, &c), n) {
                return Err(Error::Integrity(format!(
                    "member of type {:?} has no reproduction within D",
                    t.counts()
                )));
            }
            ball.for_each(&c, |q| {
                if !covered.get(q) {
                    covered.set(q);
                    n_covered += 1;
                }
            });
            chosen.push(c);
            augmented += 1;
        }
    }
    debug_assert_eq!(n_covered, size);

    // drop codewords whose members are all covered elsewhere, latest first
    let mut multiplicity = vec![0u16; size as usize];
    for c in &chosen {
        ball.for_each(c, |r| {
            let m = &mut multiplicity[r as usize];
            *m = m.saturating_add(1);
        });
    }
    let mut keep = vec![true; chosen.len()];
    let mut pruned = 0usize;
    for (i, c) in chosen.iter().enumerate().rev() {
        let mut redundant = true;
        ball.for_each(c, |r| redundant &= multiplicity[r as usize] >= 2);
        if redundant {
            ball.for_each(c, |r| multiplicity[r as usize] -= 1);
            keep[i] = false;
            pruned += 1;
        }
    }
    let mut codewords: Vec<Vec<u8>> = chosen
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect();
    codewords.sort_unstable();
    codewords.dedup();

    Ok(Covering {
        type_class: t.clone(),
        codewords,
        method: CoverMethod::RandomizedAugmented,
        rate: rd.rate,
        upsilon: cfg.upsilon,
        stats: CoverStats {
            members: size,
            draws,
            budget_log2,
            pre_augmentation_covered,
            augmented,
            pruned,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoverAudit {
    pub checked: u64,
    pub misses: u64,
    pub exhaustive: bool,
}

/// Direct check that members of `T` lie within `D` of some codeword:
/// every member when `|T| <= exhaustive_limit`, else `samples` uniform draws.
pub fn verify_cover(
    t: &TypeClass,
    codewords: &[Vec<u8>],
    spec: &DistortionSpec,
    exhaustive_limit: u64,
    samples: u64,
    seed: u64,
) -> Result<CoverAudit> {
    check_alphabet(t, spec)?;
    let grid = spec.grid()?;
    let n = t.n();
    if codewords.iter().any(|c| c.len() != n) {
        return Err(Error::Integrity("codeword length differs from the type blocklength".into()));
    }
    let packed: Option<(Vec<u64>, u64)> = match grid.hamming_weight {
        Some(w) if grid.rows == 2 && grid.cols == 2 && n <= 64 && w > 0 => {
            Some((codewords.iter().map(|c| pack_bits(c)).collect(), grid.budget(n) / w))
        }
        _ => None,
    };
    let hit = |x: &[u8]| -> bool {
        match &packed {
            Some((cw, radius)) => {
                let xb = pack_bits(x);
                cw.iter().any(|&c| ((c ^ xb).count_ones() as u64) <= *radius)
            }
            None => codewords
                .iter()
                .any(|c| grid.within(grid.total_weight(x, c), n)),
        }
    };
    let size = t.size();
    let mut audit = CoverAudit {
        checked: 0,
        misses: 0,
        exhaustive: false,
    };
    if size.is_some_and(|s| s <= exhaustive_limit) {
        audit.exhaustive = true;
        let mut x = t.first_member();
        loop {
            audit.checked += 1;
            if !hit(&x) {
                audit.misses += 1;
            }
            if !next_permutation(&mut x) {
                break;
            }
        }
    } else {
        let mut gen = rng::keyed(rng::derive(seed, &[n as u64]), 1);
        let mut x = t.first_member();
        for _ in 0..samples {
            x.shuffle(&mut gen);
            audit.checked += 1;
            if !hit(&x) {
                audit.misses += 1;
            }
        }
    }
    Ok(audit)
}

/// Binary sequence packed LSB-first into a word.
pub(crate) fn pack_bits(x: &[u8]) -> u64 {
    x.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | ((b as u64 & 1) << i))
}

/// Binary sequence packed LSB-first into `ceil(len / 64)` words, appended to `out`.
pub(crate) fn pack_words(x: &[u8], out: &mut Vec<u64>) {
    out.extend(x.chunks(64).map(pack_bits));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::h2;

    fn hamming(d: f64) -> DistortionSpec {
        DistortionSpec::hamming(2, d).unwrap()
    }

    fn brute_ball(t: &TypeClass, y: &[u8], spec: &DistortionSpec) -> Vec<u64> {
        let grid = spec.grid().unwrap();
        let mut x = t.first_member();
        let mut out = Vec::new();
        let mut r = 0;
        loop {
            if grid.within(grid.total_weight(&x, y), t.n()) {
                out.push(r);
            }
            r += 1;
            if !next_permutation(&mut x) {
                break;
            }
        }
        out
    }

    #[test]
    fn ball_search_matches_brute_force() {
        let specs = [
            hamming(0.25),
            DistortionSpec::new(vec![vec![0.0, 0.5, 1.0], vec![1.0, 0.0, 0.5], vec![0.5, 1.0, 0.0]], 0.3)
                .unwrap(),
        ];
        for spec in &specs {
            let k = spec.source_size();
            let grid = spec.grid().unwrap();
            let counts = if k == 2 { vec![4, 3] } else { vec![3, 2, 2] };
            let t = TypeClass::new(counts).unwrap();
            let ball = BallIndex::new(&t, &grid).unwrap();
            let mut y = vec![0u8; 7];
            for idx in 0..(k as u64).pow(7) {
                let mut v = idx;
                for j in (0..7).rev() {
                    y[j] = (v % k as u64) as u8;
                    v /= k as u64;
                }
                let mut got = Vec::new();
                ball.for_each(&y, |r| got.push(r));
                assert_eq!(got, brute_ball(&t, &y, spec));
            }
        }
    }

    #[test]
    fn exact_cover_examples() {
        let t = TypeClass::new(vec![2, 2]).unwrap();
        assert_eq!(cover_exact(&t, &hamming(0.0)).unwrap().len(), 6);
        assert_eq!(cover_exact(&t, &hamming(1.0)).unwrap().len(), 1);
        let c = cover_exact(&t, &hamming(0.25)).unwrap();
        assert_eq!(c.len(), 2);
        assert!((covering_rate_report(&c).per_symbol_rate - 0.25).abs() < 1e-15);
    }

    #[test]
    fn randomized_cover_is_complete_and_within_budget() {
        let t = TypeClass::new(vec![6, 6]).unwrap();
        let spec = hamming(0.25);
        let c = cover_randomized(&t, &spec, 4.0, 11).unwrap();
        let audit = verify_cover(&t, &c.codewords, &spec, u64::MAX, 0, 0).unwrap();
        assert_eq!(audit, CoverAudit { checked: 924, misses: 0, exhaustive: true });
        let budget = 12.0 * (1.0 - h2(0.25)) + 4.0 * 12f64.log2();
        assert!((c.len() as f64).log2() <= budget);
        let again = cover_randomized(&t, &spec, 4.0, 11).unwrap();
        assert_eq!(c.codewords, again.codewords);
    }

    #[test]
    fn singleton_type() {
        let t = TypeClass::new(vec![9, 0]).unwrap();
        let c = cover_randomized(&t, &hamming(0.0), 4.0, 1).unwrap();
        assert_eq!(c.codewords, vec![vec![0u8; 9]]);
    }

    #[test]
    fn cap_is_reported() {
        let t = TypeClass::new(vec![10, 10]).unwrap();
        assert!(matches!(
            cover_exact(&t, &hamming(0.1)),
            Err(Error::CoverCapExceeded(_))
        ));
    }
}
