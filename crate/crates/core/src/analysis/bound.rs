//! Second-order achievability bound and the Hessian constant it needs.

use serde::Serialize;

use super::stats::q_inv;
use crate::error::{Error, Result};
use crate::rd::{kkt_gradient, rate_distortion, rd_sensitivity, DistortionSpec, Pmf, DEFAULT_TOL};

/// Finite-difference step for Hessian evaluations in the neighbourhood search.
const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundInputs {
    pub source: Pmf,
    pub spec: DistortionSpec,
    /// Dictionary budget `M`.
    pub budget: u64,
    pub epsilon: f64,
    pub upsilon: f64,
    pub c_h: f64,
    /// Constant `c` of the `c / log2 M` term.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub rate: f64,
    pub sigma: f64,
    pub q_inv: f64,
    /// `upsilon + |X| - 1 + C_H (1 + |X|)`.
    pub c_third: f64,
    pub second_order: f64,
    pub third_order: f64,
    pub slack_term: f64,
    pub value: f64,
}

/// `R + sigma sqrt(R / log2 M) Q^-1(eps) + C_third R log2 log2 M / log2 M + c / log2 M`.
pub fn theorem_bound(b: &BoundInputs) -> Result<BoundReport> {
    if !(b.epsilon > 0.0 && b.epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {} must lie in (0, 1)", b.epsilon)));
    }
    for (name, v) in [("upsilon", b.upsilon), ("C_H", b.c_h), ("slack", b.slack)] {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} = {v} is not finite")));
        }
    }
    let lm = (b.budget as f64).log2();
    if !(lm.log2() > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log2 log2 M must be positive (M = {})",
            b.budget
        )));
    }
    let sol = rate_distortion(&b.source, &b.spec, DEFAULT_TOL)?;
    if !sol.converged {
        return Err(Error::Numerical("rate-distortion solver did not converge".into()));
    }
    let sigma = dispersion(&b.source, &b.spec, &sol)?.sqrt();
    let k = b.spec.source_size() as f64;
    let c_third = b.upsilon + k - 1.0 + b.c_h * (1.0 + k);
    let qi = q_inv(b.epsilon);
    let second_order = sigma * (sol.rate / lm).sqrt() * qi;
    let third_order = c_third * sol.rate * lm.log2() / lm;
    let slack_term = b.slack / lm;
    Ok(BoundReport {
        rate: sol.rate,
        sigma,
        q_inv: qi,
        c_third,
        second_order,
        third_order,
        slack_term,
        value: sol.rate + second_order + third_order + slack_term,
    })
}

fn dispersion(source: &Pmf, spec: &DistortionSpec, sol: &crate::rd::RDResult) -> Result<f64> {
    let g = kkt_gradient(source, spec, sol)?;
    let p = source.probs();
    let mean: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
    Ok(p
        .iter()
        .zip(&g)
        .map(|(a, b)| a * (b - mean) * (b - mean))
        .sum::<f64>()
        .max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianBound {
    /// Largest Hessian Frobenius norm found.
    pub c_h: f64,
    /// `log2 M / R(P, D)`.
    pub n_r: f64,
    /// Euclidean radius `sqrt(2 + 2|X|) sqrt(ln n_R / n_R)`.
    pub radius: f64,
    /// Grid points inside the neighbourhood and the simplex.
    pub candidates: usize,
    pub evaluated: usize,
    /// Points dropped because the rate is not twice differentiable there
    /// (at the zero-rate kink or too close to the simplex boundary).
    pub skipped: usize,
    pub argmax: Vec<f64>,
}

/// Maximize the Hessian Frobenius norm over the neighbourhood of `source`
/// whose radius is set by `M`, on a grid of `points` per free coordinate.
pub fn hessian_bound(source: &Pmf, spec: &DistortionSpec, budget: u64, points: usize) -> Result<HessianBound> {
    if points < 2 {
        return Err(Error::InvalidArgument("at least two grid points per axis".into()));
    }
    let sol = rate_distortion(source, spec, DEFAULT_TOL)?;
    let k = source.len();
    let lm = (budget as f64).log2();
    if !(sol.rate > 0.0) {
        return Err(Error::InvalidArgument(
            "the neighbourhood is undefined at zero rate".into(),
        ));
    }
    let n_r = lm / sol.rate;
    let radius = if n_r > 1.0 {
        (2.0 + 2.0 * k as f64).sqrt() * (n_r.ln() / n_r).sqrt()
    } else {
        0.0
    };
    let p = source.probs();
    let free = k - 1;
    let axis: Vec<f64> = (0..points)
        .map(|i| -radius + 2.0 * radius * i as f64 / (points - 1) as f64)
        .collect();
    let mut out = HessianBound {
        c_h: 0.0,
        n_r,
        radius,
        candidates: 0,
        evaluated: 0,
        skipped: 0,
        argmax: p.to_vec(),
    };
    let total = points.checked_pow(free as u32).ok_or_else(|| {
        Error::InvalidArgument(format!("{points}^{free} grid points overflow"))
    })?;
    let margin = 4.0 * HESSIAN_STEP;
    for idx in 0..total {
        let mut q = vec![0.0; k];
        let mut rest = idx;
        let mut shift = 0.0;
        for (i, qi) in q.iter_mut().take(free).enumerate() {
            let delta = axis[rest % points];
            rest /= points;
            *qi = p[i] + delta;
            shift += delta;
        }
        q[free] = p[free] - shift;
        let dist = q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist > radius * (1.0 + 1e-12) || q.iter().any(|&v| v <= 0.0) {
            continue;
        }
        out.candidates += 1;
        if q.iter().any(|&v| v < margin) {
            out.skipped += 1;
            continue;
        }
        let qp = Pmf::new(q.clone())?;
        if (spec.critical_distortion(&qp) - spec.level()).abs() < margin {
            out.skipped += 1;
            continue;
        }
        match rd_sensitivity(&qp, spec, HESSIAN_STEP) {
            Ok(s) => {
                out.evaluated += 1;
                if s.hessian_fnorm > out.c_h {
                    out.c_h = s.hessian_fnorm;
                    out.argmax = q;
                }
            }
            Err(Error::GradientMismatch { .. }) | Err(Error::InvalidArgument(_)) => out.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::h2;

    #[test]
    fn uniform_source_has_no_second_order_term() {
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let b = theorem_bound(&BoundInputs {
            source: Pmf::uniform(2),
            spec,
            budget: 1 << 12,
            epsilon: 0.1,
            upsilon: 4.0,
            c_h: 2.0,
            slack: 0.0,
        })
        .unwrap();
        let r = 1.0 - h2(0.1);
        let lm = 12.0f64;
        let c_third = 4.0 + 1.0 + 2.0 * 3.0;
        assert!(b.sigma < 1e-6);
        assert!((b.value - r * (1.0 + c_third * lm.log2() / lm)).abs() < 1e-6);
    }

    #[test]
    fn median_drops_second_order() {
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let b = theorem_bound(&BoundInputs {
            source: Pmf::new(vec![0.3, 0.7]).unwrap(),
            spec,
            budget: 1 << 16,
            epsilon: 0.5,
            upsilon: 4.0,
            c_h: 0.0,
            slack: 0.0,
        })
        .unwrap();
        assert!(b.second_order.abs() < 1e-9);
    }

    #[test]
    fn neighbourhood_skips_the_kink() {
        // p = 0.2 at M = 2^10 reaches past p = D
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let h = hessian_bound(&Pmf::new(vec![0.2, 0.8]).unwrap(), &spec, 1 << 10, 13).unwrap();
        assert!(h.radius > 0.1 * 2f64.sqrt());
        assert!(h.evaluated > 0);
        assert!(h.c_h.is_finite() && h.c_h > 0.0);
    }
}
