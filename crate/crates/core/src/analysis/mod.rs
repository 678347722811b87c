//! Monte-Carlo estimates of overflow probability and the epsilon-coding
//! rate, the second-order bound they are compared against, and diagnostics.
//!
//! Each trial parses one segment from a fresh i.i.d. stream generated by
//! stream `trial` of a ChaCha generator keyed by the master seed, so the
//! trial set does not depend on how work is split across threads.

mod bound;
mod diagnostics;
mod grid;
pub mod stats;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{Parser, SymbolReader};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::rd::Pmf;
use crate::rng;

pub use bound::{hessian_bound, theorem_bound, BoundInputs, BoundReport, HessianBound};
pub use diagnostics::{
    extension_rate_delta_scan, terminal_count_report, type_deviation_mass, DeltaPoint, DeltaScan,
    DeviationMass, TerminalCount, TerminalCountReport,
};
pub use grid::{
    run_grid, run_grid_with, sandwich_check, second_order_check, write_csv, DictionarySummary, GridConfig, GridReport,
    GridRow, SandwichReport, SecondOrderFit, SecondOrderReport,
};

/// Resamples behind every bootstrap interval.
pub const BOOTSTRAP_RESAMPLES: usize = 500;

/// Infinite i.i.d. stream.
pub struct SourceStream {
    rng: ChaCha8Rng,
    sampler: WeightedIndex<f64>,
}

impl SourceStream {
    pub fn new(source: &Pmf, key: u64, stream: u64) -> Self {
        SourceStream {
            rng: rng::keyed(key, stream),
            sampler: WeightedIndex::new(source.probs()).expect("a pmf has positive mass"),
        }
    }
}

impl Iterator for SourceStream {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        Some(self.sampler.sample(&mut self.rng) as u8)
    }
}

/// `n` i.i.d. draws from `source`.
pub fn sample_stream(source: &Pmf, n: usize, seed: u64) -> Vec<u8> {
    SourceStream::new(source, seed, 0).take(n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    /// Trial number; selects the generator stream.
    pub seed: u64,
    pub length: usize,
    /// `index_width / length`, bits per symbol.
    pub rate_sample: f64,
    pub distortion: f64,
}

/// Parse one segment per trial.
pub fn run_trials(source: &Pmf, d: &Dictionary, trials: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    if source.len() != d.spec().source_size() {
        return Err(Error::InvalidArgument(format!(
            "source alphabet {} does not match the dictionary ({})",
            source.len(),
            d.spec().source_size()
        )));
    }
    let width = d.index_width() as f64;
    (0..trials)
        .into_par_iter()
        .map_init(
            || Parser::new(d),
            |p, t| {
                let res = p.parse(&mut SymbolReader::new(SourceStream::new(source, seed, t)))?;
                Ok(TrialRecord {
                    seed: t,
                    length: res.segment_length,
                    rate_sample: width / res.segment_length as f64,
                    distortion: res.realized_distortion,
                })
            },
        )
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub count: u64,
    pub trials: u64,
}

impl Estimate {
    fn proportion(count: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = stats::wilson(count, trials, stats::Z95);
        Estimate {
            value: if trials == 0 { 0.0 } else { count as f64 / trials as f64 },
            ci_lo,
            ci_hi,
            count,
            trials,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverflowEstimate {
    pub rate: f64,
    /// Fraction of trials with rate sample `>= rate`.
    pub inclusive: Estimate,
    /// Fraction of trials with rate sample `> rate`.
    pub strict: Estimate,
}

/// Overflow probability of `records` at `rate`.
pub fn overflow_from(records: &[TrialRecord], rate: f64) -> OverflowEstimate {
    let n = records.len() as u64;
    let ge = records.iter().filter(|r| r.rate_sample >= rate).count() as u64;
    let gt = records.iter().filter(|r| r.rate_sample > rate).count() as u64;
    OverflowEstimate {
        rate,
        inclusive: Estimate::proportion(ge, n),
        strict: Estimate::proportion(gt, n),
    }
}

pub fn overflow_probability(
    source: &Pmf,
    d: &Dictionary,
    rate: f64,
    trials: u64,
    seed: u64,
) -> Result<OverflowEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(overflow_from(&run_trials(source, d, trials, seed)?, rate))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRate {
    pub epsilon: f64,
    /// Smallest observed rate `r` with fraction of samples above `r` at most
    /// `epsilon`.
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    /// Fewer than `100 / epsilon` trials.
    pub low_trials: bool,
}

/// Trial lengths as a sorted histogram.
#[derive(Debug, Clone)]
pub struct LengthHistogram {
    /// `(length, count)` in increasing length.
    pub bins: Vec<(usize, u64)>,
    pub total: u64,
}

impl LengthHistogram {
    pub fn new(records: &[TrialRecord]) -> Self {
        let mut lens: Vec<usize> = records.iter().map(|r| r.length).collect();
        lens.sort_unstable();
        let mut bins: Vec<(usize, u64)> = Vec::new();
        for l in lens {
            match bins.last_mut() {
                Some((v, c)) if *v == l => *c += 1,
                _ => bins.push((l, 1)),
            }
        }
        LengthHistogram {
            bins,
            total: records.len() as u64,
        }
    }

    /// Largest observed length `l` such that at most a fraction `eps` of
    /// the trials are shorter.
    pub fn epsilon_length(&self, eps: f64) -> Option<usize> {
        self.epsilon_length_with(&self.bins.iter().map(|b| b.1).collect::<Vec<_>>(), eps)
    }

    fn epsilon_length_with(&self, counts: &[u64], eps: f64) -> Option<usize> {
        let total: u64 = counts.iter().sum();
        let mut below = 0u64;
        let mut best = None;
        for (&(l, _), &c) in self.bins.iter().zip(counts) {
            if c > 0 {
                if below as f64 / total as f64 <= eps {
                    best = Some(l);
                } else {
                    break;
                }
            }
            below += c;
        }
        best
    }
}

/// Epsilon-coding rate of `records` for a dictionary with index width
/// `width`, with a bootstrap percentile interval.
pub fn epsilon_rate_from(records: &[TrialRecord], width: u32, eps: f64, seed: u64) -> Result<EpsilonRate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must lie in (0, 1)")));
    }
    if records.is_empty() {
        return Err(Error::InvalidArgument("no trials".into()));
    }
    let h = LengthHistogram::new(records);
    let w = width as f64;
    let l = h.epsilon_length(eps).expect("the shortest length always qualifies");
    let rate = w / l as f64;
    // multinomial resampling of the length histogram
    let mut g = rng::keyed(rng::derive(seed, &[eps.to_bits()]), 1);
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut counts = vec![0u64; h.bins.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut left = h.total;
        let mut mass = 1.0f64;
        for (i, &(_, c)) in h.bins.iter().enumerate() {
            let p = c as f64 / h.total as f64;
            let k = if left == 0 {
                0
            } else if i + 1 == h.bins.len() || p >= mass {
                left
            } else {
                Binomial::new(left, (p / mass).clamp(0.0, 1.0))
                    .map_err(|e| Error::Numerical(format!("bootstrap: {e}")))?
                    .sample(&mut g)
            };
            counts[i] = k;
            left -= k;
            mass -= p;
        }
        let lb = h
            .epsilon_length_with(&counts, eps)
            .expect("a resample is never empty");
        boot.push(w / lb as f64);
    }
    boot.sort_by(f64::total_cmp);
    Ok(EpsilonRate {
        epsilon: eps,
        rate,
        ci_lo: stats::percentile(&boot, 0.025),
        ci_hi: stats::percentile(&boot, 0.975),
        trials: h.total,
        low_trials: (h.total as f64) < 100.0 / eps,
    })
}

pub fn epsilon_coding_rate(
    source: &Pmf,
    d: &Dictionary,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<EpsilonRate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let records = run_trials(source, d, trials, seed)?;
    let r = epsilon_rate_from(&records, d.index_width(), eps, seed)?;
    if r.low_trials {
        log::warn!("{trials} trials are few for epsilon = {eps}; at least {} recommended", (100.0 / eps).ceil());
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(length: usize) -> TrialRecord {
        TrialRecord {
            seed: 0,
            length,
            rate_sample: 12.0 / length as f64,
            distortion: 0.0,
        }
    }

    #[test]
    fn epsilon_rate_is_an_upper_quantile() {
        let recs: Vec<TrialRecord> = [3, 4, 4, 5, 6, 6, 6, 8, 9, 10].iter().map(|&l| rec(l)).collect();
        // one sample of ten is shorter than 4
        let r = epsilon_rate_from(&recs, 12, 0.1, 1).unwrap();
        assert_eq!(r.rate, 3.0);
        assert!(overflow_from(&recs, r.rate).strict.value <= 0.1);
        let r = epsilon_rate_from(&recs, 12, 0.05, 1).unwrap();
        assert_eq!(r.rate, 4.0);
        let r = epsilon_rate_from(&recs, 12, 0.95, 1).unwrap();
        assert_eq!(r.rate, 1.2);
        let one: Vec<TrialRecord> = vec![rec(7); 20];
        for eps in [0.01, 0.5, 0.99] {
            assert_eq!(epsilon_rate_from(&one, 12, eps, 1).unwrap().rate, 12.0 / 7.0);
        }
    }

    #[test]
    fn overflow_edges() {
        let recs: Vec<TrialRecord> = [3, 4, 5].iter().map(|&l| rec(l)).collect();
        assert_eq!(overflow_from(&recs, 0.0).inclusive.value, 1.0);
        assert_eq!(overflow_from(&recs, 13.0).inclusive.value, 0.0);
        assert_eq!(overflow_from(&recs, 3.0).inclusive.value, 2.0 / 3.0);
        assert_eq!(overflow_from(&recs, 3.0).strict.value, 1.0 / 3.0);
    }

    #[test]
    fn streams_are_reproducible() {
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(sample_stream(&p, 100, 5), sample_stream(&p, 100, 5));
        assert_ne!(sample_stream(&p, 100, 5), sample_stream(&p, 100, 6));
        assert_eq!(sample_stream(&Pmf::new(vec![1.0, 0.0]).unwrap(), 4, 1), vec![0; 4]);
    }
}
