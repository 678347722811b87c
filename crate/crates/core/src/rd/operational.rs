//! Operational lossy rate `R0(P, Q, D) = inf_U [I(X; U) + D(P_U || Q)]`.
//!
//! Evaluated through its dual, a concave maximization over one slope:
//! `max_{l >= 0} [-l D - sum_x P(x) log2 sum_y Q(y) 2^(-l d(x, y))]`.

use super::{DistortionSpec, Pmf};
use crate::error::Result;

struct Dual<'a> {
    p: &'a [f64],
    q: &'a [f64],
    spec: &'a DistortionSpec,
    /// per-row minimum distortion over the support of `q`
    row_min: Vec<f64>,
}

impl Dual<'_> {
    /// Objective value and derivative at slope `l` (bits).
    fn eval(&self, l: f64) -> (f64, f64) {
        let level = self.spec.level();
        let mut value = -l * level;
        let mut deriv = -level;
        for (x, &px) in self.p.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            let m = self.row_min[x];
            let mut z = 0.0;
            let mut zd = 0.0;
            for (y, &qy) in self.q.iter().enumerate() {
                if qy == 0.0 {
                    continue;
                }
                let d = self.spec.d(x, y);
                let w = qy * (-l * (d - m)).exp2();
                z += w;
                zd += w * d;
            }
            value -= px * (z.log2() - l * m);
            deriv += px * zd / z;
        }
        (value, deriv)
    }
}

/// Returns `f64::INFINITY` when no test channel into the support of `output`
/// meets the distortion level.
pub fn operational_rate(source: &Pmf, output: &Pmf, spec: &DistortionSpec) -> Result<f64> {
    spec.check_source(source)?;
    if output.len() != spec.reproduction_size() {
        return Err(crate::Error::InvalidArgument(format!(
            "output pmf has {} letters, reproduction alphabet has {}",
            output.len(),
            spec.reproduction_size()
        )));
    }
    let p = source.probs();
    let q = output.probs();
    let row_min: Vec<f64> = (0..spec.source_size())
        .map(|x| {
            q.iter()
                .enumerate()
                .filter(|(_, &qy)| qy > 0.0)
                .map(|(y, _)| spec.d(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let level = spec.level();
    let floor: f64 = p
        .iter()
        .zip(&row_min)
        .filter(|(&px, _)| px > 0.0)
        .map(|(px, m)| px * m)
        .sum();
    let eps = 1e-12 * level.max(1.0);
    if floor > level + eps {
        return Ok(f64::INFINITY);
    }
    let dual = Dual {
        p,
        q,
        spec,
        row_min,
    };
    let (v0, d0) = dual.eval(0.0);
    if d0 <= 0.0 {
        return Ok(v0.max(0.0));
    }
    if floor >= level - eps {
        // supremum reached only as the slope grows without bound
        let limit: f64 = p
            .iter()
            .enumerate()
            .filter(|(_, &px)| px > 0.0)
            .map(|(x, &px)| {
                let m = dual.row_min[x];
                let mass: f64 = q
                    .iter()
                    .enumerate()
                    .filter(|(y, &qy)| qy > 0.0 && spec.d(x, *y) == m)
                    .map(|(_, &qy)| qy)
                    .sum();
                -px * mass.log2()
            })
            .sum();
        return Ok(limit.max(0.0));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while dual.eval(hi).1 > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dual.eval(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(dual.eval(0.5 * (lo + hi)).0.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::{h2, rate_distortion};

    #[test]
    fn matches_rate_distortion_at_optimal_output() {
        for (probs, d) in [(vec![0.3, 0.7], 0.1), (vec![0.5, 0.5], 0.2), (vec![0.2, 0.3, 0.5], 0.15)] {
            let k = probs.len();
            let src = Pmf::new(probs).unwrap();
            let spec = DistortionSpec::hamming(k, d).unwrap();
            let rd = rate_distortion(&src, &spec, 1e-10).unwrap();
            let r0 = operational_rate(&src, &rd.output_dist, &spec).unwrap();
            assert!((r0 - rd.rate).abs() < 1e-6, "{r0} vs {}", rd.rate);
        }
    }

    #[test]
    fn zero_when_level_exceeds_every_distortion() {
        let spec = DistortionSpec::hamming(2, 1.0).unwrap();
        let src = Pmf::new(vec![0.3, 0.7]).unwrap();
        let q = Pmf::new(vec![0.9, 0.1]).unwrap();
        assert_eq!(operational_rate(&src, &q, &spec).unwrap(), 0.0);
    }

    #[test]
    fn infinite_without_support() {
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let src = Pmf::new(vec![0.5, 0.5]).unwrap();
        let q = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert!(operational_rate(&src, &q, &spec).unwrap().is_infinite());
    }

    #[test]
    fn lossless_limit_is_cross_entropy() {
        // D = 0: R0 = sum_x P(x) log2 1/Q(x)
        let spec = DistortionSpec::hamming(2, 0.0).unwrap();
        let src = Pmf::new(vec![0.5, 0.5]).unwrap();
        let q = Pmf::new(vec![0.25, 0.75]).unwrap();
        let want = -0.5 * 0.25f64.log2() - 0.5 * 0.75f64.log2();
        assert!((operational_rate(&src, &q, &spec).unwrap() - want).abs() < 1e-12);
        let _ = h2(0.1);
    }
}
