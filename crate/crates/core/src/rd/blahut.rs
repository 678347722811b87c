//! Alternating minimization (Blahut-Arimoto) at fixed slope, wrapped in a
//! bisection on the slope so that the distortion constraint is met.

use std::f64::consts::LN_2;

use super::{DistortionSpec, Pmf, RDResult, DEFAULT_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target accuracy of the rate, in bits.
    pub tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_inner: 500_000,
            max_outer: 400,
        }
    }
}

pub fn rate_distortion(source: &Pmf, spec: &DistortionSpec, tol: f64) -> Result<RDResult> {
    rate_distortion_with(
        source,
        spec,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

/// Source restricted to its support, with distortions shifted by each
/// row's minimum so that the exponential kernel never underflows on the
/// best reproduction letter.
struct Problem {
    p: Vec<f64>,
    /// `d(x, y) - min_y d(x, y)`, rows over the effective alphabet.
    shifted: Vec<f64>,
    cols: usize,
    d_min: f64,
}

impl Problem {
    fn new(source: &Pmf, spec: &DistortionSpec) -> Self {
        let cols = spec.reproduction_size();
        let mut p = Vec::new();
        let mut shifted = Vec::new();
        let mut d_min = 0.0;
        for (x, &px) in source.probs().iter().enumerate() {
            if px <= 0.0 {
                continue;
            }
            let row = spec.row(x);
            let m = row.iter().copied().fold(f64::INFINITY, f64::min);
            p.push(px);
            shifted.extend(row.iter().map(|&v| v - m));
            d_min += px * m;
        }
        Problem {
            p,
            shifted,
            cols,
            d_min,
        }
    }

    fn rows(&self) -> usize {
        self.p.len()
    }

    /// Kernel `exp(-s * shifted)`; `None` is the infinite-slope limit.
    fn kernel(&self, s: Option<f64>) -> Vec<f64> {
        match s {
            Some(s) => self.shifted.iter().map(|&v| (-s * v).exp()).collect(),
            None => self
                .shifted
                .iter()
                .map(|&v| if v == 0.0 { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    /// Runs the fixed-slope iteration in place on `q` until the duality gap
    /// drops below `gap_tol` nats. Returns (iterations, converged).
    fn iterate(&self, kernel: &[f64], q: &mut [f64], gap_tol: f64, max_iter: usize) -> (usize, bool) {
        let rows = self.rows();
        let cols = self.cols;
        let mut z = vec![0.0; rows];
        let mut c = vec![0.0; cols];
        for it in 1..=max_iter {
            for x in 0..rows {
                let k = &kernel[x * cols..(x + 1) * cols];
                z[x] = k.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
            }
            c.iter_mut().for_each(|v| *v = 0.0);
            for x in 0..rows {
                if z[x] <= 0.0 {
                    continue;
                }
                let w = self.p[x] / z[x];
                let k = &kernel[x * cols..(x + 1) * cols];
                for y in 0..cols {
                    c[y] += w * k[y];
                }
            }
            let max_c = c.iter().copied().fold(0.0, f64::max);
            let mut total = 0.0;
            for y in 0..cols {
                q[y] *= c[y];
                total += q[y];
            }
            if total > 0.0 {
                q.iter_mut().for_each(|v| *v /= total);
            }
            if max_c.ln() < gap_tol {
                return (it, true);
            }
        }
        (max_iter, false)
    }

    /// Expected distortion (unshifted), mutual information in bits and the
    /// output marginal of the test channel induced by `q`.
    fn evaluate(&self, kernel: &[f64], q: &[f64]) -> (f64, f64, Vec<f64>) {
        let rows = self.rows();
        let cols = self.cols;
        let mut r = vec![0.0; cols];
        let mut w = vec![0.0; rows * cols];
        let mut dist = self.d_min;
        for x in 0..rows {
            let k = &kernel[x * cols..(x + 1) * cols];
            let z: f64 = k.iter().zip(q).map(|(a, b)| a * b).sum();
            for y in 0..cols {
                let wy = if z > 0.0 { q[y] * k[y] / z } else { 0.0 };
                w[x * cols + y] = wy;
                r[y] += self.p[x] * wy;
                dist += self.p[x] * wy * self.shifted[x * cols + y];
            }
        }
        let mut info = 0.0;
        for x in 0..rows {
            for y in 0..cols {
                let wy = w[x * cols + y];
                if wy > 0.0 && r[y] > 0.0 {
                    info += self.p[x] * wy * (wy / r[y]).log2();
                }
            }
        }
        (dist, info.max(0.0), r)
    }
}

struct SlopePoint {
    distortion: f64,
    info: f64,
    output: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn solve_at(problem: &Problem, s: Option<f64>, q: &mut Vec<f64>, gap_tol: f64, max_iter: usize) -> SlopePoint {
    let kernel = problem.kernel(s);
    let (iterations, converged) = problem.iterate(&kernel, q, gap_tol, max_iter);
    let (distortion, info, output) = problem.evaluate(&kernel, q);
    SlopePoint {
        distortion,
        info,
        output,
        iterations,
        converged,
    }
}

/// Keeps a warm start away from exact zeros, which the multiplicative
/// update can never leave.
fn refresh(q: &mut [f64]) {
    let k = q.len() as f64;
    q.iter_mut().for_each(|v| *v = 0.999_999 * *v + 1e-6 / k);
}

pub fn rate_distortion_with(source: &Pmf, spec: &DistortionSpec, opts: &SolverOptions) -> Result<RDResult> {
    spec.check_source(source)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    let level = spec.level();
    let cols = spec.reproduction_size();
    let problem = Problem::new(source, spec);
    let eps = 1e-12 * level.max(1.0);
    if level < problem.d_min - eps {
        return Err(Error::Infeasible {
            level,
            min_distortion: problem.d_min,
        });
    }

    // slack constraint: a constant reproduction letter already meets D
    let mut best_y = 0;
    let mut d_crit = f64::INFINITY;
    for y in 0..cols {
        let e: f64 = (0..source.len()).map(|x| source.probs()[x] * spec.d(x, y)).sum();
        if e < d_crit {
            d_crit = e;
            best_y = y;
        }
    }
    if level >= d_crit - eps {
        return Ok(RDResult {
            rate: 0.0,
            slope: 0.0,
            output_dist: Pmf::point_mass(cols, best_y),
            distortion: d_crit,
            iterations: 0,
            converged: true,
        });
    }

    let gap_tol = opts.tol / 10.0 * LN_2;
    let mut q = vec![1.0 / cols as f64; cols];

    if level <= problem.d_min + eps {
        let pt = solve_at(&problem, None, &mut q, gap_tol, opts.max_inner);
        return Ok(RDResult {
            rate: pt.info,
            slope: f64::INFINITY,
            output_dist: Pmf(pt.output),
            distortion: pt.distortion,
            iterations: pt.iterations,
            converged: pt.converged,
        });
    }

    let dist_tol = opts.tol * level.max(1.0);
    let mut iterations = 0usize;
    let mut converged = true;

    // bracket the slope
    let mut s_lo = 0.0f64;
    let mut s_hi = 1.0f64;
    let mut hi_pt;
    let mut doublings = 0;
    loop {
        refresh(&mut q);
        hi_pt = solve_at(&problem, Some(s_hi), &mut q, gap_tol, opts.max_inner);
        iterations += hi_pt.iterations;
        converged &= hi_pt.converged;
        if hi_pt.distortion <= level {
            break;
        }
        s_lo = s_hi;
        s_hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Numerical(format!(
                "could not bracket the slope for D = {level}"
            )));
        }
    }

    let mut best = (s_hi, hi_pt);
    let mut outer_ok = (best.1.distortion - level).abs() < dist_tol;
    let mut outer = 0;
    while !outer_ok && outer < opts.max_outer {
        outer += 1;
        let s_mid = 0.5 * (s_lo + s_hi);
        refresh(&mut q);
        let pt = solve_at(&problem, Some(s_mid), &mut q, gap_tol, opts.max_inner);
        iterations += pt.iterations;
        converged &= pt.converged;
        let hit = (pt.distortion - level).abs() < dist_tol;
        if pt.distortion > level {
            s_lo = s_mid;
        } else {
            s_hi = s_mid;
        }
        best = (s_mid, pt);
        if hit {
            outer_ok = true;
        } else if s_hi - s_lo <= 1e-14 * s_hi {
            // a jump in D(s): the curve is affine around D with slope -s
            outer_ok = true;
        }
    }
    converged &= outer_ok;

    let (s, pt) = best;
    let lambda = s / LN_2;
    let rate = (pt.info + lambda * (pt.distortion - level)).max(0.0);
    Ok(RDResult {
        rate,
        slope: lambda,
        output_dist: Pmf(pt.output),
        distortion: pt.distortion,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::h2;

    fn binary(p: f64) -> Pmf {
        Pmf::new(vec![p, 1.0 - p]).unwrap()
    }

    #[test]
    fn uniform_binary_hamming() {
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let r = rate_distortion(&Pmf::uniform(2), &spec, 1e-9).unwrap();
        assert!(r.converged);
        assert!((r.rate - (1.0 - h2(0.1))).abs() < 1e-8, "{}", r.rate);
        assert!((r.rate - 0.5310).abs() < 1e-4);
        // slope = log2((1 - D) / D)
        assert!((r.slope - (0.9f64 / 0.1).log2()).abs() < 1e-5);
    }

    #[test]
    fn zero_distortion_is_entropy() {
        for probs in [vec![0.3, 0.7], vec![0.2, 0.3, 0.5], vec![0.25, 0.25, 0.25, 0.25]] {
            let k = probs.len();
            let src = Pmf::new(probs).unwrap();
            let spec = DistortionSpec::hamming(k, 0.0).unwrap();
            let r = rate_distortion(&src, &spec, 1e-9).unwrap();
            assert!((r.rate - src.entropy()).abs() < 1e-8);
            assert!(r.slope.is_infinite());
        }
    }

    #[test]
    fn rate_vanishes_at_critical_distortion() {
        let src = binary(0.3);
        for d in [0.3, 0.35, 1.0] {
            let spec = DistortionSpec::hamming(2, d).unwrap();
            let r = rate_distortion(&src, &spec, 1e-9).unwrap();
            assert_eq!(r.rate, 0.0);
            assert_eq!(r.slope, 0.0);
            assert_eq!(r.output_dist.probs(), &[0.0, 1.0]);
        }
    }

    #[test]
    fn infeasible_level_is_an_error() {
        let spec = DistortionSpec::new(vec![vec![0.5, 1.0], vec![1.0, 0.5]], 0.2).unwrap();
        let err = rate_distortion(&Pmf::uniform(2), &spec, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn zero_probability_letters_are_dropped() {
        let spec = DistortionSpec::hamming(3, 0.1).unwrap();
        let src = Pmf::new(vec![0.4, 0.0, 0.6]).unwrap();
        let r = rate_distortion(&src, &spec, 1e-10).unwrap();
        // binary Hamming on the support, reproduction letter 1 unused
        assert!((r.rate - (h2(0.4) - h2(0.1))).abs() < 1e-7, "{}", r.rate);
        assert!(r.output_dist.probs()[1] < 1e-6);
    }

    #[test]
    fn binary_oracle_grid() {
        for &p in &[0.15f64, 0.3, 0.45, 0.7] {
            for &d in &[0.01, 0.05, 0.1] {
                if d >= p.min(1.0 - p) {
                    continue;
                }
                let spec = DistortionSpec::hamming(2, d).unwrap();
                let r = rate_distortion(&binary(p), &spec, 1e-9).unwrap();
                let want = h2(p) - h2(d);
                assert!((r.rate - want).abs() < 1e-7, "p={p} d={d}: {} vs {want}", r.rate);
                assert!(r.converged);
            }
        }
    }
}
