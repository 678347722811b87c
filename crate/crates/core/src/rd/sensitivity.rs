//! Gradient, Hessian and dispersion of the rate-distortion function with
//! respect to the source distribution.
//!
//! Coordinates are treated as independent by extending `R` homogeneously
//! off the simplex: `R~(P) = |P| * R(P / |P|, D)`. Under that extension the
//! gradient component for letter `x` equals the D-tilted information
//! `-lambda * D - log2 sum_y q*(y) 2^(-lambda d(x, y))`, which is what the
//! closed form below evaluates. Dispersion is a variance, so the choice of
//! extension does not affect it.

use serde::Serialize;

use super::blahut::{rate_distortion_with, SolverOptions};
use super::{DistortionSpec, Pmf, RDResult};
use crate::error::{Error, Result};

/// Solver tolerance used for every evaluation inside the sensitivity analysis.
const SENSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RDSensitivity {
    pub rate: f64,
    /// Closed-form gradient `R'(x)`, bits per unit probability.
    pub gradient: Vec<f64>,
    /// Central finite-difference gradient.
    pub fd_gradient: Vec<f64>,
    /// Row-major finite-difference Hessian.
    pub hessian: Vec<f64>,
    pub hessian_fnorm: f64,
    /// `Var_{X ~ P}(R'(X))`, bits squared.
    pub dispersion: f64,
    /// Set when some source letter has zero probability (one-sided gradient).
    pub boundary: bool,
}

/// Closed-form gradient from a converged solution.
pub fn kkt_gradient(source: &Pmf, spec: &DistortionSpec, sol: &RDResult) -> Result<Vec<f64>> {
    spec.check_source(source)?;
    let lambda = sol.slope;
    let level = spec.level();
    let q = sol.output_dist.probs();
    (0..spec.source_size())
        .map(|x| {
            let row = spec.row(x);
            let m = row.iter().copied().fold(f64::INFINITY, f64::min);
            if lambda == 0.0 {
                return Ok(0.0);
            }
            if lambda.is_infinite() {
                if (level - m).abs() > 1e-12 * level.max(1.0) {
                    return Err(Error::Numerical(format!(
                        "rate is not differentiable in letter {x} at the minimum distortion"
                    )));
                }
                let mass: f64 = row
                    .iter()
                    .zip(q)
                    .filter(|(&d, _)| d == m)
                    .map(|(_, &qy)| qy)
                    .sum();
                return Ok(-mass.log2());
            }
            let s: f64 = row
                .iter()
                .zip(q)
                .map(|(&d, &qy)| qy * (-lambda * (d - m)).exp2())
                .sum();
            Ok(-lambda * (level - m) - s.log2())
        })
        .collect()
}

fn solve(source: &Pmf, spec: &DistortionSpec) -> Result<RDResult> {
    let opts = SolverOptions {
        tol: SENSITIVITY_TOL,
        ..SolverOptions::default()
    };
    let r = rate_distortion_with(source, spec, &opts)?;
    if !r.converged {
        return Err(Error::Numerical("rate-distortion solver did not converge".into()));
    }
    Ok(r)
}

/// `R~(P + h e_i)` for the homogeneous extension.
fn extended_rate(probs: &[f64], i: usize, h: f64, spec: &DistortionSpec) -> Result<f64> {
    let mass = 1.0 + h;
    let moved: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(j, &p)| if j == i { (p + h) / mass } else { p / mass })
        .collect();
    Ok(mass * solve(&Pmf(moved), spec)?.rate)
}

fn gradient_at(probs: &[f64], i: usize, h: f64, spec: &DistortionSpec) -> Result<Vec<f64>> {
    let mass = 1.0 + h;
    let moved: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(j, &p)| if j == i { (p + h) / mass } else { p / mass })
        .collect();
    let src = Pmf(moved);
    let sol = solve(&src, spec)?;
    kkt_gradient(&src, spec, &sol)
}

pub fn rd_sensitivity(source: &Pmf, spec: &DistortionSpec, step: f64) -> Result<RDSensitivity> {
    spec.check_source(source)?;
    if !(step > 0.0 && step < 0.1) {
        return Err(Error::InvalidArgument(format!("step {step} must lie in (0, 0.1)")));
    }
    let probs = source.probs();
    let k = probs.len();
    let boundary = probs.iter().any(|&p| p == 0.0);
    if let Some((i, &p)) = probs.iter().enumerate().find(|(_, &p)| p > 0.0 && p < step) {
        return Err(Error::InvalidArgument(format!(
            "source entry {i} = {p} is closer to the simplex boundary than the step {step}"
        )));
    }

    let sol = solve(source, spec)?;
    let gradient = kkt_gradient(source, spec, &sol)?;

    let mut fd_gradient = vec![0.0; k];
    for i in 0..k {
        let up = extended_rate(probs, i, step, spec)?;
        // one-sided at the boundary
        fd_gradient[i] = if probs[i] == 0.0 {
            (up - sol.rate) / step
        } else {
            let down = extended_rate(probs, i, -step, spec)?;
            (up - down) / (2.0 * step)
        };
    }
    let tol = 10.0 * step;
    for i in 0..k {
        if (fd_gradient[i] - gradient[i]).abs() > tol {
            return Err(Error::GradientMismatch {
                coord: i,
                fd: fd_gradient[i],
                kkt: gradient[i],
                tol,
            });
        }
    }

    // Hessian by differencing the closed-form gradient
    let min_p = probs
        .iter()
        .copied()
        .filter(|&p| p > 0.0)
        .fold(f64::INFINITY, f64::min);
    let h = if min_p >= 2e-4 { step.max(1e-4) } else { step };
    let mut hessian = vec![0.0; k * k];
    for j in 0..k {
        let up = gradient_at(probs, j, h, spec)?;
        let col: Vec<f64> = if probs[j] == 0.0 {
            up.iter().zip(&gradient).map(|(a, b)| (a - b) / h).collect()
        } else {
            let down = gradient_at(probs, j, -h, spec)?;
            up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        };
        for i in 0..k {
            hessian[i * k + j] = col[i];
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let m = 0.5 * (hessian[i * k + j] + hessian[j * k + i]);
            hessian[i * k + j] = m;
            hessian[j * k + i] = m;
        }
    }
    let hessian_fnorm = hessian.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mean: f64 = probs.iter().zip(&gradient).map(|(p, g)| p * g).sum();
    let dispersion = probs
        .iter()
        .zip(&gradient)
        .map(|(p, g)| p * (g - mean) * (g - mean))
        .sum::<f64>()
        .max(0.0);

    Ok(RDSensitivity {
        rate: sol.rate,
        gradient,
        fd_gradient,
        hessian,
        hessian_fnorm,
        dispersion,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn varentropy_at_zero_distortion() {
        let src = Pmf::new(vec![0.3, 0.7]).unwrap();
        let spec = DistortionSpec::hamming(2, 0.0).unwrap();
        let s = rd_sensitivity(&src, &spec, 1e-4).unwrap();
        let want = 0.21 * (0.7f64 / 0.3).log2().powi(2);
        assert!((s.dispersion - want).abs() < 1e-6, "{} vs {want}", s.dispersion);
        // -log2 p gauge
        assert!((s.gradient[0] + 0.3f64.log2()).abs() < 1e-6);
    }

    #[test]
    fn uniform_source_has_zero_dispersion() {
        for k in [2, 3] {
            let spec = DistortionSpec::hamming(k, 0.1).unwrap();
            let s = rd_sensitivity(&Pmf::uniform(k), &spec, 1e-4).unwrap();
            assert!(s.dispersion < 1e-10, "{}", s.dispersion);
        }
    }

    #[test]
    fn binary_hamming_dispersion() {
        let src = Pmf::new(vec![0.3, 0.7]).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let s = rd_sensitivity(&src, &spec, 1e-4).unwrap();
        assert!((s.dispersion - 0.3137).abs() < 1e-3);
        assert!((s.dispersion - 0.21 * (7.0f64 / 3.0).log2().powi(2)).abs() < 1e-6);
        // Euler identity for the homogeneous extension: sum_x P(x) R'(x) = R
        let mean: f64 = src.probs().iter().zip(&s.gradient).map(|(p, g)| p * g).sum();
        assert!((mean - s.rate).abs() < 1e-8);
    }

    #[test]
    fn rejects_boundary_step() {
        let src = Pmf::new(vec![1e-6, 1.0 - 1e-6]).unwrap();
        let spec = DistortionSpec::hamming(2, 0.0).unwrap();
        assert!(matches!(
            rd_sensitivity(&src, &spec, 1e-4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn kink_is_reported() {
        // the rate has a kink at p = D
        let src = Pmf::new(vec![0.1, 0.9]).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        assert!(matches!(
            rd_sensitivity(&src, &spec, 1e-3),
            Err(Error::GradientMismatch { .. })
        ));
    }
}
