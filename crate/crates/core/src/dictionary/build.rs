//! Dictionary construction and threshold selection.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dictionary, Node, ParseTable, ScanLimits, TypeGroup, NONE};
use crate::covering::{cover_type_on, CoverConfig, Covering};
use crate::error::{Error, Result};
use crate::rational::DistortionGrid;
use crate::rd::DistortionSpec;
use crate::rng::DEFAULT_SEED;
use crate::types::{RateCache, TypeClass};

/// Default lower bound on the per-symbol rate used to size the scan range.
pub const DEFAULT_R_MIN: f64 = 0.1;

/// Longest segment the scan range admits regardless of the threshold.
const MAX_SCAN_LEN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildConfig {
    pub cover: CoverConfig,
    /// Scan range is `ceil(4 gamma / r_min)`.
    pub r_min: f64,
    pub seed: u64,
    /// Bisection stops once the bracket is this narrow (bits).
    pub gamma_resolution: f64,
    /// Constant of the closed-form threshold, reported for comparison only.
    pub c_gamma: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            cover: CoverConfig::default(),
            r_min: DEFAULT_R_MIN,
            seed: DEFAULT_SEED,
            gamma_resolution: 1e-3,
            c_gamma: 1.0,
        }
    }
}

/// Per-blocklength accounting of a build.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildLevel {
    pub n: usize,
    /// Reachable prefix types.
    pub reachable: usize,
    /// Terminal types `|A_n|`, capped ones included.
    pub terminal: usize,
    pub capped: usize,
    /// Codewords of length `n`, `N_n`.
    pub codewords: u64,
    /// `log2(|A_n| 2^(gamma + upsilon log2 n))`.
    pub bound_log2: f64,
    /// Codewords added by augmentation.
    pub augmented: usize,
    /// Codewords drawn by the randomized path before augmentation.
    pub drawn: usize,
}

impl BuildLevel {
    pub fn within_bound(&self) -> bool {
        self.codewords == 0 || (self.codewords as f64).log2() <= self.bound_log2 + 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaStep {
    pub gamma: f64,
    pub size: u64,
    /// The probe stopped early; the true size is at least `size`.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaChoice {
    pub gamma: f64,
    pub size: u64,
    /// Every probe in evaluation order.
    pub trace: Vec<GammaStep>,
    /// `log2 M - (upsilon + |X| - 1) log2 log2 M - c_gamma`.
    pub closed_form: f64,
}

pub fn closed_form_gamma(budget: u64, alphabet_size: usize, upsilon: f64, c_gamma: f64) -> f64 {
    let lm = (budget as f64).log2();
    lm - (upsilon + alphabet_size as f64 - 1.0) * lm.log2() - c_gamma
}

/// Walks the prefix-type automaton for threshold `gamma`. Returns the
/// automaton and the terminal types in (n, type) order with their cap flag.
pub(crate) fn parse_table(
    gamma: f64,
    limits: &ScanLimits,
    rates: &RateCache,
    group_of: &HashMap<Vec<u32>, u32>,
) -> Result<(ParseTable, Vec<(TypeClass, bool)>)> {
    let k = rates.spec().source_size();
    let mut nodes = vec![Node {
        children: vec![NONE; k],
        group: NONE,
        capped: false,
    }];
    let mut terminals = Vec::new();
    let mut level: Vec<(TypeClass, u32)> = Vec::new();
    for a in 0..k {
        let mut counts = vec![0u32; k];
        counts[a] = 1;
        let t = TypeClass::new(counts)?;
        if rates.empirical_lossy_rate(&t)? > gamma {
            return Err(Error::InvalidArgument(format!(
                "threshold {gamma} is below the rate of a single letter"
            )));
        }
        let id = nodes.len() as u32;
        nodes[0].children[a] = id;
        nodes.push(Node {
            children: vec![NONE; k],
            group: NONE,
            capped: false,
        });
        level.push((t, id));
    }
    level.sort_by(|a, b| b.0.counts().cmp(a.0.counts()));
    let mut n = 1usize;
    while !level.is_empty() {
        let mut next: HashMap<Vec<u32>, (TypeClass, u32)> = HashMap::new();
        for (t, id) in &level {
            let mut ext_ok = vec![false; k];
            let mut crosses = false;
            let mut too_big = false;
            for (a, ok) in ext_ok.iter_mut().enumerate() {
                let r = rates.extended_rate(t, a)?;
                if r > gamma {
                    crosses = true;
                } else {
                    *ok = true;
                    let e = t.extend(a);
                    if e.size().is_none_or(|s| s > limits.member_cap) {
                        too_big = true;
                    }
                }
            }
            let capped = n >= limits.n_cap || too_big;
            if capped || crosses {
                let counts = t.counts();
                let node = &mut nodes[*id as usize];
                node.capped = capped;
                node.group = group_of.get(counts).copied().unwrap_or(NONE);
                terminals.push((t.clone(), capped));
            }
            if capped {
                continue;
            }
            for (a, &ok) in ext_ok.iter().enumerate() {
                if !ok {
                    continue;
                }
                let e = t.extend(a);
                let child = match next.get(e.counts()) {
                    Some(&(_, cid)) => cid,
                    None => {
                        let cid = nodes.len() as u32;
                        nodes.push(Node {
                            children: vec![NONE; k],
                            group: NONE,
                            capped: false,
                        });
                        next.insert(e.counts().to_vec(), (e, cid));
                        cid
                    }
                };
                nodes[*id as usize].children[a] = child;
            }
        }
        level = next.into_values().collect();
        level.sort_by(|a, b| b.0.counts().cmp(a.0.counts()));
        n += 1;
    }
    Ok((ParseTable { nodes }, terminals))
}

/// Dictionary builder holding the rate and covering caches shared across
/// thresholds.
pub struct Builder {
    spec: DistortionSpec,
    grid: DistortionGrid,
    rates: RateCache,
    covers: Mutex<HashMap<Vec<u32>, Arc<Covering>>>,
    cfg: BuildConfig,
}

impl Builder {
    pub fn new(spec: &DistortionSpec, cfg: BuildConfig) -> Result<Self> {
        if !(cfg.r_min > 0.0) {
            return Err(Error::Config(format!("r_min = {} must be positive", cfg.r_min)));
        }
        let spec = spec.snapped()?;
        let grid = spec.grid()?;
        Ok(Builder {
            rates: RateCache::new(spec.clone()),
            spec,
            grid,
            covers: Mutex::new(HashMap::new()),
            cfg,
        })
    }

    pub fn spec(&self) -> &DistortionSpec {
        &self.spec
    }

    pub fn config(&self) -> &BuildConfig {
        &self.cfg
    }

    pub fn rates(&self) -> &RateCache {
        &self.rates
    }

    pub fn limits(&self, gamma: f64) -> ScanLimits {
        let len = (4.0 / self.cfg.r_min * gamma).ceil();
        let n_cap = if len.is_finite() { len.clamp(1.0, MAX_SCAN_LEN as f64) as usize } else { MAX_SCAN_LEN };
        ScanLimits {
            n_cap,
            member_cap: self.cfg.cover.member_cap,
        }
    }

    /// Covering of `t`, computed once per type.
    pub fn covering(&self, t: &TypeClass) -> Result<Arc<Covering>> {
        if let Some(c) = self.covers.lock().unwrap().get(t.counts()) {
            return Ok(c.clone());
        }
        let c = Arc::new(cover_type_on(t, &self.spec, &self.grid, &self.cfg.cover, self.cfg.seed)?);
        self.covers
            .lock()
            .unwrap()
            .insert(t.counts().to_vec(), c.clone());
        Ok(c)
    }

    /// Every covering computed so far, in type order.
    pub fn coverings(&self) -> Vec<Arc<Covering>> {
        let mut v: Vec<_> = self.covers.lock().unwrap().values().cloned().collect();
        v.sort_by(|a, b| {
            (a.n(), std::cmp::Reverse(a.type_class.counts()))
                .cmp(&(b.n(), std::cmp::Reverse(b.type_class.counts())))
        });
        v
    }

    fn terminals(&self, gamma: f64) -> Result<Vec<(TypeClass, bool)>> {
        Ok(parse_table(gamma, &self.limits(gamma), &self.rates, &HashMap::new())?.1)
    }

    fn cover_level(&self, types: &[(TypeClass, bool)]) -> Result<Vec<Arc<Covering>>> {
        types.par_iter().map(|(t, _)| self.covering(t)).collect()
    }

    /// Dictionary size at `gamma`; stops once it exceeds `limit`.
    pub fn size(&self, gamma: f64, limit: u64) -> Result<GammaStep> {
        let terminals = self.terminals(gamma)?;
        let mut size = 0u64;
        for chunk in terminals.chunk_by(|a, b| a.0.n() == b.0.n()) {
            for c in self.cover_level(chunk)? {
                size += c.len() as u64;
            }
            if size > limit {
                return Ok(GammaStep {
                    gamma,
                    size,
                    saturated: true,
                });
            }
        }
        Ok(GammaStep {
            gamma,
            size,
            saturated: false,
        })
    }

    pub fn build(&self, gamma: f64, budget: u64) -> Result<Dictionary> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("threshold {gamma} must be finite and >= 0")));
        }
        if budget < 2 {
            return Err(Error::InvalidArgument(format!("budget M = {budget} must be at least 2")));
        }
        let limits = self.limits(gamma);
        let terminals = self.terminals(gamma)?;
        let mut groups = Vec::with_capacity(terminals.len());
        let mut levels = Vec::new();
        let mut next = 0u64;
        for chunk in terminals.chunk_by(|a, b| a.0.n() == b.0.n()) {
            let covers = self.cover_level(chunk)?;
            let n = chunk[0].0.n();
            let mut lvl = BuildLevel {
                n,
                reachable: 0,
                terminal: chunk.len(),
                capped: chunk.iter().filter(|c| c.1).count(),
                codewords: 0,
                bound_log2: (chunk.len() as f64).log2() + gamma + self.cfg.cover.upsilon * (n as f64).log2(),
                augmented: 0,
                drawn: 0,
            };
            for ((t, capped), c) in chunk.iter().zip(covers) {
                lvl.codewords += c.len() as u64;
                lvl.augmented += c.stats.augmented;
                lvl.drawn += c.len() - c.stats.augmented.min(c.len());
                groups.push(TypeGroup {
                    type_class: t.clone(),
                    first_index: next,
                    codewords: c.codewords.clone(),
                    capped: *capped,
                });
                next += c.len() as u64;
            }
            levels.push(lvl);
            if next > budget {
                return Err(Error::OverBudget { actual: next, budget });
            }
        }
        let mut d = Dictionary::assemble(
            gamma,
            self.spec.clone(),
            self.cfg.cover.upsilon,
            budget,
            self.cfg.seed,
            limits,
            groups,
            &self.rates,
        )?;
        let mut reach: HashMap<usize, usize> = HashMap::new();
        count_reachable(&d.table, &mut reach);
        for l in &mut levels {
            l.reachable = reach.get(&l.n).copied().unwrap_or(0);
        }
        d.levels = levels;
        Ok(d)
    }

    /// Largest threshold (to the configured resolution) whose dictionary
    /// fits in `budget` codewords.
    pub fn choose_gamma(&self, budget: u64) -> Result<GammaChoice> {
        if budget < 2 {
            return Err(Error::InvalidArgument(format!("budget M = {budget} must be at least 2")));
        }
        let mut trace: Vec<GammaStep> = Vec::new();
        let probe = |g: f64, trace: &mut Vec<GammaStep>| -> Result<bool> {
            let s = self.size(g, budget)?;
            trace.push(s);
            check_monotone(trace)?;
            Ok(!s.saturated && s.size <= budget)
        };
        let mut lo = self.cfg.gamma_resolution.min(1e-6);
        if !probe(lo, &mut trace)? {
            return Err(Error::BudgetTooSmall {
                budget,
                min_size: trace[0].size,
            });
        }
        let mut hi = 1.0;
        while probe(hi, &mut trace)? {
            lo = hi;
            hi *= 2.0;
            if hi > 1e4 {
                return Err(Error::Numerical("threshold search failed to bracket the budget".into()));
            }
        }
        while hi - lo > self.cfg.gamma_resolution {
            let mid = 0.5 * (lo + hi);
            if probe(mid, &mut trace)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let size = trace
            .iter()
            .find(|s| s.gamma == lo)
            .map(|s| s.size)
            .expect("lower end was probed");
        Ok(GammaChoice {
            gamma: lo,
            size,
            trace,
            closed_form: closed_form_gamma(
                budget,
                self.spec.source_size(),
                self.cfg.cover.upsilon,
                self.cfg.c_gamma,
            ),
        })
    }
}

fn count_reachable(table: &ParseTable, out: &mut HashMap<usize, usize>) {
    let mut depth = vec![usize::MAX; table.nodes.len()];
    depth[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for &c in &table.nodes[i].children {
            if c != NONE && depth[c as usize] == usize::MAX {
                depth[c as usize] = depth[i] + 1;
                *out.entry(depth[i] + 1).or_default() += 1;
                queue.push_back(c as usize);
            }
        }
    }
}

/// Sizes must not decrease with the threshold; a saturated probe only
/// bounds its size from below.
fn check_monotone(trace: &[GammaStep]) -> Result<()> {
    let last = trace[trace.len() - 1];
    for s in &trace[..trace.len() - 1] {
        let bad = if s.gamma < last.gamma {
            !last.saturated && (s.saturated || s.size > last.size)
        } else if s.gamma > last.gamma {
            !s.saturated && (last.saturated || last.size > s.size)
        } else {
            false
        };
        if bad {
            return Err(Error::Numerical(format!(
                "dictionary size is not monotone in the threshold: {} codewords at {} vs {} at {}",
                s.size, s.gamma, last.size, last.gamma
            )));
        }
    }
    Ok(())
}

/// Largest threshold whose default-configured dictionary fits in `budget`.
pub fn choose_gamma(budget: u64, spec: &DistortionSpec, alphabet_size: usize) -> Result<f64> {
    if alphabet_size != spec.source_size() {
        return Err(Error::InvalidArgument(format!(
            "alphabet size {alphabet_size} does not match the distortion matrix ({} rows)",
            spec.source_size()
        )));
    }
    Ok(Builder::new(spec, BuildConfig::default())?.choose_gamma(budget)?.gamma)
}

pub fn build_dictionary(gamma: f64, spec: &DistortionSpec, budget: u64) -> Result<Dictionary> {
    Builder::new(spec, BuildConfig::default())?.build(gamma, budget)
}
