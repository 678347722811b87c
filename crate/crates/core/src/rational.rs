//! Exact rational representation of distortion values.
//!
//! Semifaithfulness checks compare summed per-letter distortions against
//! `n * D` with integer arithmetic, so every matrix entry and the fidelity
//! level are mapped onto a common rational grid first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest denominator accepted when snapping a float onto a rational.
pub const MAX_DENOMINATOR: u64 = 1_000_000;

/// A non-negative rational number `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den);
        Rational {
            num: num / g,
            den: den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Best rational approximation of `x` with denominator at most
    /// `max_den`, accepted only if it reproduces `x` to within a relative
    /// error of 1e-14.
    pub fn approximate(x: f64, max_den: u64) -> Option<Rational> {
        if !x.is_finite() || x < 0.0 {
            return None;
        }
        if x == 0.0 {
            return Some(Rational { num: 0, den: 1 });
        }
        let tol = 1e-14 * x.max(1e-300);
        // continued fraction convergents
        let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
        let mut v = x;
        for _ in 0..64 {
            let a = v.floor();
            if a > u64::MAX as f64 / 2.0 {
                break;
            }
            let a = a as u64;
            let p2 = a.checked_mul(p1).and_then(|t| t.checked_add(p0));
            let q2 = a.checked_mul(q1).and_then(|t| t.checked_add(q0));
            let (p2, q2) = match (p2, q2) {
                (Some(p), Some(q)) => (p, q),
                _ => break,
            };
            if q2 > max_den {
                break;
            }
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
            if (p1 as f64 / q1 as f64 - x).abs() <= tol {
                return Some(Rational::new(p1, q1));
            }
            let frac = v - a as f64;
            if frac <= 0.0 {
                break;
            }
            v = 1.0 / frac;
        }
        if q1 > 0 && (p1 as f64 / q1 as f64 - x).abs() <= tol {
            Some(Rational::new(p1, q1))
        } else {
            None
        }
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// A distortion matrix and level mapped to integers: `d(x, y) = weight(x, y) / scale`
/// and `D = level.num / level.den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistortionGrid {
    pub rows: usize,
    pub cols: usize,
    /// Row-major integer weights.
    pub weights: Vec<u64>,
    pub scale: u64,
    pub level: Rational,
    /// `Some(w)` when the matrix is `w * [x != y]` (square), enabling
    /// mismatch-count fast paths.
    pub hamming_weight: Option<u64>,
}

impl DistortionGrid {
    pub fn from_matrix(matrix: &[f64], rows: usize, cols: usize, level: f64) -> Result<Self> {
        let mut rats = Vec::with_capacity(matrix.len());
        for (i, &v) in matrix.iter().enumerate() {
            let r = Rational::approximate(v, MAX_DENOMINATOR).ok_or_else(|| Error::NotOnGrid {
                entry: format!("d({}, {})", i / cols, i % cols),
                value: v,
                max_den: MAX_DENOMINATOR,
            })?;
            rats.push(r);
        }
        let level_r = Rational::approximate(level, MAX_DENOMINATOR).ok_or(Error::NotOnGrid {
            entry: "D".to_string(),
            value: level,
            max_den: MAX_DENOMINATOR,
        })?;
        let mut scale = 1u64;
        for (i, r) in rats.iter().enumerate() {
            scale = match lcm(scale, r.den) {
                Some(s) if s <= MAX_DENOMINATOR => s,
                _ => {
                    return Err(Error::NotOnGrid {
                        entry: format!("d({}, {})", i / cols, i % cols),
                        value: matrix[i],
                        max_den: MAX_DENOMINATOR,
                    })
                }
            };
        }
        let weights: Vec<u64> = rats.iter().map(|r| r.num * (scale / r.den)).collect();
        let hamming_weight = if rows == cols {
            let w = if rows > 1 { weights[1] } else { 0 };
            let ok = (0..rows).all(|x| {
                (0..cols).all(|y| weights[x * cols + y] == if x == y { 0 } else { w })
            });
            ok.then_some(w)
        } else {
            None
        };
        Ok(DistortionGrid {
            rows,
            cols,
            weights,
            scale,
            level: level_r,
            hamming_weight,
        })
    }

    #[inline]
    pub fn weight(&self, x: u8, y: u8) -> u64 {
        self.weights[x as usize * self.cols + y as usize]
    }

    /// Largest total integer weight `W` with `W / scale <= n * D`.
    pub fn budget(&self, n: usize) -> u64 {
        let num = n as u128 * self.level.num as u128 * self.scale as u128;
        (num / self.level.den as u128) as u64
    }

    /// Exact test of `(1/n) * sum_i d(x_i, y_i) <= D`.
    pub fn within(&self, total_weight: u64, n: usize) -> bool {
        total_weight as u128 * self.level.den as u128
            <= n as u128 * self.level.num as u128 * self.scale as u128
    }

    pub fn total_weight(&self, x: &[u8], y: &[u8]) -> u64 {
        x.iter().zip(y).map(|(&a, &b)| self.weight(a, b)).sum()
    }

    pub fn distortion(&self, x: &[u8], y: &[u8]) -> f64 {
        if x.is_empty() {
            return 0.0;
        }
        self.total_weight(x, y) as f64 / self.scale as f64 / x.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approximates_common_values() {
        assert_eq!(Rational::approximate(0.1, MAX_DENOMINATOR), Some(Rational::new(1, 10)));
        assert_eq!(Rational::approximate(0.25, MAX_DENOMINATOR), Some(Rational::new(1, 4)));
        assert_eq!(
            Rational::approximate(1.0 / 3.0, MAX_DENOMINATOR),
            Some(Rational::new(1, 3))
        );
        assert_eq!(Rational::approximate(2.0, MAX_DENOMINATOR), Some(Rational::new(2, 1)));
        assert_eq!(Rational::approximate(0.0, MAX_DENOMINATOR), Some(Rational::new(0, 1)));
        assert_eq!(Rational::approximate(std::f64::consts::PI, 1000), None);
        assert_eq!(Rational::approximate(-1.0, 10), None);
    }

    #[test]
    fn grid_budget_is_exact() {
        let g = DistortionGrid::from_matrix(&[0.0, 1.0, 1.0, 0.0], 2, 2, 0.1).unwrap();
        assert_eq!(g.hamming_weight, Some(1));
        assert_eq!(g.budget(20), 2);
        assert_eq!(g.budget(19), 1);
        assert!(g.within(2, 20));
        assert!(!g.within(3, 20));
    }

    #[test]
    fn grid_reports_offending_entry() {
        let err = DistortionGrid::from_matrix(&[0.0, std::f64::consts::E, 1.0, 0.0], 2, 2, 0.1)
            .unwrap_err();
        match err {
            Error::NotOnGrid { entry, .. } => assert_eq!(entry, "d(0, 1)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_with_mixed_denominators() {
        let g = DistortionGrid::from_matrix(&[0.0, 0.5, 1.0 / 3.0, 0.0], 2, 2, 0.25).unwrap();
        assert_eq!(g.scale, 6);
        assert_eq!(g.weights, vec![0, 3, 2, 0]);
        assert_eq!(g.hamming_weight, None);
        // n = 4: budget = 4 * 1/4 * 6 = 6
        assert_eq!(g.budget(4), 6);
    }
}
