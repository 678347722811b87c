//! Exact measure of a distortion ball `Q^n(B(x^n, D))` by dynamic
//! programming over (position, accumulated integer distortion).

use serde::Serialize;

use super::{operational_rate, DistortionSpec, Pmf};
use crate::error::{Error, Result};

/// Largest DP table accepted.
const MAX_BUDGET_CELLS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DBallMeasure {
    pub n: usize,
    /// `log2 Q^n(B(x^n, D))`, exact up to floating-point summation.
    pub exact_log2: f64,
    /// `-n R0(Q_{x^n}, Q, D) - (log2 n) / 2`.
    pub approx_log2: f64,
}

pub fn dball_log_measure(x: &[u8], output: &Pmf, spec: &DistortionSpec) -> Result<DBallMeasure> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty source sequence".into()));
    }
    if output.len() != spec.reproduction_size() {
        return Err(Error::InvalidArgument("output pmf does not match the reproduction alphabet".into()));
    }
    let k = spec.source_size();
    if let Some(&s) = x.iter().find(|&&s| s as usize >= k) {
        return Err(Error::SymbolOutOfRange {
            symbol: s as u32,
            alphabet: k,
        });
    }
    let grid = spec.grid()?;
    let budget = grid.budget(n);
    if budget + 1 > MAX_BUDGET_CELLS {
        return Err(Error::InvalidArgument(format!(
            "distortion budget of {budget} grid units is too large for the exact DP"
        )));
    }
    let width = budget as usize + 1;
    let q = output.probs();
    let mut dp = vec![0.0f64; width];
    let mut next = vec![0.0f64; width];
    dp[0] = 1.0;
    // dp holds the true masses times 2^scale_exp; rescaling by powers of two is exact
    let mut scale_exp: i32 = 0;
    for &xi in x {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (w, &mass) in dp.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (y, &qy) in q.iter().enumerate() {
                if qy == 0.0 {
                    continue;
                }
                let nw = w as u64 + grid.weight(xi, y as u8);
                if nw <= budget {
                    next[nw as usize] += mass * qy;
                }
            }
        }
        std::mem::swap(&mut dp, &mut next);
        let peak = dp.iter().copied().fold(0.0, f64::max);
        if peak == 0.0 {
            break;
        }
        if peak < f64::MIN_POSITIVE * 2f64.powi(600) {
            let e = -peak.log2().floor() as i32;
            let factor = 2f64.powi(e);
            dp.iter_mut().for_each(|v| *v *= factor);
            scale_exp += e;
        }
    }
    let total: f64 = dp.iter().sum();
    let exact_log2 = if total > 0.0 {
        total.log2() - scale_exp as f64
    } else {
        f64::NEG_INFINITY
    };

    let mut counts = vec![0u32; k];
    for &s in x {
        counts[s as usize] += 1;
    }
    let emp = Pmf::from_counts(&counts)?;
    let r0 = operational_rate(&emp, output, spec)?;
    let approx_log2 = -(n as f64) * r0 - 0.5 * (n as f64).log2();
    Ok(DBallMeasure {
        n,
        exact_log2,
        approx_log2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distortion_is_sequence_probability() {
        let spec = DistortionSpec::hamming(2, 0.0).unwrap();
        let q = Pmf::new(vec![0.25, 0.75]).unwrap();
        let x = [0u8, 1, 1, 0, 1];
        let m = dball_log_measure(&x, &q, &spec).unwrap();
        let want: f64 = x.iter().map(|&s| q.probs()[s as usize].log2()).sum();
        assert_eq!(m.exact_log2, want);
    }

    #[test]
    fn single_letter_ball() {
        let spec = DistortionSpec::new(vec![vec![0.0, 0.5, 1.0], vec![1.0, 0.0, 0.5], vec![0.5, 1.0, 0.0]], 0.5)
            .unwrap();
        let q = Pmf::new(vec![0.5, 0.25, 0.25]).unwrap();
        let m = dball_log_measure(&[0], &q, &spec).unwrap();
        assert_eq!(m.exact_log2, 0.75f64.log2());
    }

    #[test]
    fn long_sequences_do_not_underflow() {
        let spec = DistortionSpec::hamming(2, 0.0).unwrap();
        let q = Pmf::uniform(2);
        let x = vec![1u8; 3000];
        let m = dball_log_measure(&x, &q, &spec).unwrap();
        assert_eq!(m.exact_log2, -3000.0);
    }
}
