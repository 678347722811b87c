//! Rate-distortion engine: the rate-distortion function, its sensitivity to
//! the source distribution, the operational lossy rate and exact D-ball
//! measures.

mod blahut;
mod dball;
mod operational;
mod sensitivity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::DistortionGrid;

pub use blahut::{rate_distortion, rate_distortion_with, SolverOptions};
pub use dball::{dball_log_measure, DBallMeasure};
pub use operational::operational_rate;
pub use sensitivity::{kkt_gradient, rd_sensitivity, RDSensitivity};

/// Tolerance on `sum(probs) == 1`.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// Default solver tolerance (bits).
pub const DEFAULT_TOL: f64 = 1e-9;

/// A probability mass function over a finite alphabet `{0, .., k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty probability vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidPmf(format!("entry {i} = {p} is not a non-negative real")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {sum}, expected 1")));
        }
        Ok(Pmf(probs))
    }

    /// Empirical distribution `counts / n`.
    pub fn from_counts(counts: &[u32]) -> Result<Self> {
        let n: u64 = counts.iter().map(|&c| c as u64).sum();
        if n == 0 {
            return Err(Error::InvalidPmf("counts sum to zero".into()));
        }
        Ok(Pmf(counts.iter().map(|&c| c as f64 / n as f64).collect()))
    }

    pub fn uniform(k: usize) -> Self {
        Pmf(vec![1.0 / k as f64; k])
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut v = vec![0.0; k];
        v[at] = 1.0;
        Pmf(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }

    pub fn min_positive(&self) -> f64 {
        self.0
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.0
    }
}

/// Single-letter distortion matrix `d(x, y)` (rows: source letters, columns:
/// reproduction letters) together with the fidelity level `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
    level: f64,
}

impl DistortionSpec {
    pub fn new(matrix: Vec<Vec<f64>>, level: f64) -> Result<Self> {
        let rows = matrix.len();
        if rows == 0 {
            return Err(Error::InvalidSpec("empty distortion matrix".into()));
        }
        let cols = matrix[0].len();
        if cols == 0 || matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidSpec("distortion matrix rows have unequal or zero length".into()));
        }
        Self::from_flat(matrix.into_iter().flatten().collect(), rows, cols, level)
    }

    pub fn from_flat(matrix: Vec<f64>, rows: usize, cols: usize, level: f64) -> Result<Self> {
        if rows == 0 || cols == 0 || matrix.len() != rows * cols {
            return Err(Error::InvalidSpec(format!(
                "matrix of {} entries does not match {rows}x{cols}",
                matrix.len()
            )));
        }
        if rows > 64 || cols > 256 {
            return Err(Error::InvalidSpec("alphabets larger than 64x256 are not supported".into()));
        }
        for (i, &v) in matrix.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "d({}, {}) = {v} must be finite and non-negative",
                    i / cols,
                    i % cols
                )));
            }
        }
        if !level.is_finite() || level < 0.0 {
            return Err(Error::InvalidSpec(format!("level D = {level} must be finite and >= 0")));
        }
        Ok(DistortionSpec {
            rows,
            cols,
            matrix,
            level,
        })
    }

    /// Hamming distortion on a `k`-letter alphabet.
    pub fn hamming(k: usize, level: f64) -> Result<Self> {
        let m = (0..k * k)
            .map(|i| if i / k == i % k { 0.0 } else { 1.0 })
            .collect();
        Self::from_flat(m, k, k, level)
    }

    pub fn with_level(&self, level: f64) -> Result<Self> {
        Self::from_flat(self.matrix.clone(), self.rows, self.cols, level)
    }

    pub fn source_size(&self) -> usize {
        self.rows
    }

    pub fn reproduction_size(&self) -> usize {
        self.cols
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.cols..(x + 1) * self.cols]
    }

    /// Largest single-letter distortion.
    pub fn d_max(&self) -> f64 {
        self.matrix.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest achievable expected distortion under `source`.
    pub fn min_distortion(&self, source: &Pmf) -> f64 {
        source
            .probs()
            .iter()
            .enumerate()
            .map(|(x, &p)| p * self.row(x).iter().copied().fold(f64::INFINITY, f64::min))
            .sum()
    }

    /// Distortion at which the rate first reaches zero: `min_y E d(X, y)`.
    pub fn critical_distortion(&self, source: &Pmf) -> f64 {
        (0..self.cols)
            .map(|y| {
                source
                    .probs()
                    .iter()
                    .enumerate()
                    .map(|(x, &p)| p * self.d(x, y))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Integer grid used for exact distortion comparisons.
    pub fn grid(&self) -> Result<DistortionGrid> {
        DistortionGrid::from_matrix(&self.matrix, self.rows, self.cols, self.level)
    }

    /// Copy whose level is replaced by its exact rational value, so that
    /// values written to disk reload bit-identically.
    pub fn snapped(&self) -> Result<Self> {
        let g = self.grid()?;
        self.with_level(g.level.to_f64())
    }

    pub(crate) fn check_source(&self, source: &Pmf) -> Result<()> {
        if source.len() != self.rows {
            return Err(Error::InvalidArgument(format!(
                "source has {} letters but the distortion matrix has {} rows",
                source.len(),
                self.rows
            )));
        }
        Ok(())
    }
}

/// Solution of the rate-distortion problem at one fidelity level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RDResult {
    /// `R(P, D)` in bits per symbol.
    pub rate: f64,
    /// `|dR/dD|` in bits per unit distortion; infinite at the minimum distortion.
    pub slope: f64,
    /// Optimal reproduction marginal over the reproduction alphabet.
    pub output_dist: Pmf,
    /// Expected distortion achieved by the returned test channel.
    pub distortion: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![0.3, 0.7]).is_ok());
        assert!(Pmf::new(vec![0.3, 0.6]).is_err());
        assert!(Pmf::new(vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![f64::NAN, 1.0]).is_err());
        let p = Pmf::from_counts(&[1, 3]).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn spec_validation() {
        assert!(DistortionSpec::new(vec![vec![0.0, 1.0], vec![1.0]], 0.1).is_err());
        assert!(DistortionSpec::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]], 0.1).is_err());
        assert!(DistortionSpec::hamming(2, -0.1).is_err());
        let s = DistortionSpec::hamming(3, 0.2).unwrap();
        assert_eq!(s.d(0, 0), 0.0);
        assert_eq!(s.d(2, 1), 1.0);
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((s.critical_distortion(&p) - 0.5).abs() < 1e-15);
        assert_eq!(s.min_distortion(&p), 0.0);
    }

    #[test]
    fn pmf_serde_validates() {
        let p: Pmf = serde_json::from_str("[0.5, 0.5]").unwrap();
        assert_eq!(p, Pmf::uniform(2));
        assert!(serde_json::from_str::<Pmf>("[0.5, 0.4]").is_err());
    }
}
