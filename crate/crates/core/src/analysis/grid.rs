//! Sweep over sources, distortion levels, budgets and epsilons.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bound::{hessian_bound, theorem_bound, BoundInputs};
use super::stats::least_squares;
use super::{epsilon_rate_from, overflow_from, run_trials};
use crate::covering::DEFAULT_UPSILON;
use crate::dictionary::{BuildConfig, Builder, Dictionary};
use crate::error::{Error, Result};
use crate::rd::{DistortionSpec, Pmf};
use crate::rng::{self, DEFAULT_SEED};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Probability of letter 0 of each binary source.
    pub ps: Vec<f64>,
    /// Hamming distortion levels.
    pub levels: Vec<f64>,
    /// `log2 M` values.
    pub log2_budgets: Vec<u32>,
    pub epsilons: Vec<f64>,
    pub trials: u64,
    pub upsilon: f64,
    pub seed: u64,
    /// Grid points per axis of the Hessian search.
    pub hessian_points: usize,
    /// Constant of the `c / log2 M` term added to the bound.
    pub slack: f64,
    /// Epsilon of the second-order regression.
    pub regression_epsilon: f64,
    pub build: BuildConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            ps: vec![0.2, 0.3, 0.4],
            levels: vec![0.05, 0.1],
            log2_budgets: vec![10, 12, 14, 16],
            epsilons: vec![0.05, 0.1, 0.25],
            trials: 100_000,
            upsilon: DEFAULT_UPSILON,
            seed: DEFAULT_SEED,
            hessian_points: 13,
            slack: 0.0,
            regression_epsilon: 0.1,
            build: BuildConfig::default(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.ps.is_empty() || self.levels.is_empty() || self.log2_budgets.is_empty() || self.epsilons.is_empty() {
            return bad("grid axes must be non-empty".into());
        }
        if let Some(p) = self.ps.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return bad(format!("ps: {p} must lie in (0, 1)"));
        }
        if let Some(d) = self.levels.iter().find(|&&d| !(d >= 0.0 && d.is_finite())) {
            return bad(format!("levels: {d} must be finite and >= 0"));
        }
        if let Some(k) = self.log2_budgets.iter().find(|&&k| !(2..=40).contains(&k)) {
            return bad(format!("log2_budgets: {k} must lie in 2..=40"));
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return bad(format!("epsilons: {e} must lie in (0, 1)"));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.upsilon >= 0.0 && self.upsilon.is_finite()) {
            return bad(format!("upsilon: {} must be finite and >= 0", self.upsilon));
        }
        if self.hessian_points < 2 {
            return bad("hessian_points must be at least 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub p: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub epsilon: f64,
    #[serde(rename = "R_empirical")]
    pub r_empirical: f64,
    pub bound: f64,
    #[serde(rename = "R_PD")]
    pub rate: f64,
    pub sigma: f64,
    #[serde(rename = "C_H")]
    pub c_h: f64,
    pub trials: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub gamma: f64,
    pub m_actual: u64,
    /// Fraction of trials with rate sample above `R_empirical`.
    pub overflow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DictionarySummary {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub gamma: f64,
    pub m_actual: u64,
    pub max_len: usize,
    pub closed_form_gamma: f64,
    pub probes: usize,
    pub augmented: usize,
    pub level_bound_violations: usize,
    pub crc32: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    /// `(R_empirical - bound) log2 M` per row.
    pub c: Vec<f64>,
    /// Smallest single constant covering every row.
    pub c_fit: f64,
    /// Smallest constant per budget, in `log2_budgets` order.
    pub c_per_budget: Vec<(u64, f64)>,
    /// Every row is already under the bound without slack.
    pub zero_slack: bool,
    pub stable: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondOrderFit {
    pub p: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub intercept: f64,
    /// `sigma Q^-1(eps)`.
    pub target: f64,
    pub relative_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondOrderReport {
    pub epsilon: f64,
    pub fits: Vec<SecondOrderFit>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
    pub dictionaries: Vec<DictionarySummary>,
    pub sandwich: SandwichReport,
    pub second_order: SecondOrderReport,
}

fn binary(p: f64) -> Result<Pmf> {
    Pmf::new(vec![p, 1.0 - p])
}

/// Run the whole grid. Dictionaries for one distortion level share a
/// builder, so coverings are computed once per type.
pub fn run_grid(cfg: &GridConfig) -> Result<GridReport> {
    run_grid_with(cfg, |_, _| {})
}

/// As [`run_grid`], handing each dictionary to `visit` once built.
pub fn run_grid_with<F: FnMut(&DictionarySummary, &Dictionary)>(cfg: &GridConfig, mut visit: F) -> Result<GridReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut dictionaries = Vec::new();
    for &d in &cfg.levels {
        let spec = DistortionSpec::hamming(2, d)?;
        let mut bcfg = cfg.build.clone();
        bcfg.cover.upsilon = cfg.upsilon;
        let builder = Builder::new(&spec, bcfg)?;
        for &k in &cfg.log2_budgets {
            let m = 1u64 << k;
            let choice = builder.choose_gamma(m)?;
            let dict = builder.build(choice.gamma, m)?;
            let summary = DictionarySummary {
                d,
                m,
                gamma: choice.gamma,
                m_actual: dict.len(),
                max_len: dict.max_len(),
                closed_form_gamma: choice.closed_form,
                probes: choice.trace.len(),
                augmented: dict.levels().iter().map(|l| l.augmented).sum(),
                level_bound_violations: dict.levels().iter().filter(|l| !l.within_bound()).count(),
                crc32: dict.checksum(),
            };
            log::info!(
                "D = {d}, M = 2^{k}: gamma {:.4}, {} codewords, longest segment {}",
                summary.gamma,
                summary.m_actual,
                summary.max_len
            );
            visit(&summary, &dict);
            for &p in &cfg.ps {
                let source = binary(p)?;
                let hb = hessian_bound(&source, builder.spec(), m, cfg.hessian_points)?;
                let key = rng::derive(cfg.seed, &[p.to_bits(), d.to_bits(), k as u64]);
                let records = run_trials(&source, &dict, cfg.trials, key)?;
                if let Some(r) = records.iter().find(|r| r.distortion > d) {
                    return Err(Error::Integrity(format!(
                        "trial {} reproduced with distortion {} > {d}",
                        r.seed, r.distortion
                    )));
                }
                for &eps in &cfg.epsilons {
                    let er = epsilon_rate_from(&records, dict.index_width(), eps, key)?;
                    let b = theorem_bound(&BoundInputs {
                        source: source.clone(),
                        spec: builder.spec().clone(),
                        budget: m,
                        epsilon: eps,
                        upsilon: cfg.upsilon,
                        c_h: hb.c_h,
                        slack: cfg.slack,
                    })?;
                    rows.push(GridRow {
                        p,
                        d,
                        m,
                        epsilon: eps,
                        r_empirical: er.rate,
                        bound: b.value,
                        rate: b.rate,
                        sigma: b.sigma,
                        c_h: hb.c_h,
                        trials: er.trials,
                        ci_lo: er.ci_lo,
                        ci_hi: er.ci_hi,
                        gamma: choice.gamma,
                        m_actual: dict.len(),
                        overflow: overflow_from(&records, er.rate).strict.value,
                    });
                }
            }
            dictionaries.push(summary);
        }
    }
    let sandwich = sandwich_check(&rows);
    let second_order = second_order_check(&rows, cfg.regression_epsilon);
    Ok(GridReport {
        rows,
        dictionaries,
        sandwich,
        second_order,
    })
}

/// Fit the single constant `c` with `R_empirical <= bound + c / log2 M` on
/// every row and check it is stable across budgets.
pub fn sandwich_check(rows: &[GridRow]) -> SandwichReport {
    let c: Vec<f64> = rows
        .iter()
        .map(|r| (r.r_empirical - r.bound) * (r.m as f64).log2())
        .collect();
    let c_fit = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut budgets: Vec<u64> = rows.iter().map(|r| r.m).collect();
    budgets.sort_unstable();
    budgets.dedup();
    let c_per_budget: Vec<(u64, f64)> = budgets
        .iter()
        .map(|&m| {
            let cm = rows
                .iter()
                .zip(&c)
                .filter(|(r, _)| r.m == m)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            (m, cm)
        })
        .collect();
    let zero_slack = c_fit <= 0.0;
    let stable = zero_slack
        || c_per_budget
            .iter()
            .all(|&(_, cm)| (cm - c_fit).abs() <= 0.5 * c_fit.abs());
    SandwichReport {
        c,
        c_fit,
        c_per_budget,
        zero_slack,
        stable,
        pass: !rows.is_empty() && stable,
    }
}

/// Regress `(R_empirical - R) sqrt(log2 M / R)` on `1 / sqrt(log2 M)` and
/// `log2 log2 M / sqrt(log2 M)` for each source and level at `epsilon`,
/// comparing the intercept with `sigma Q^-1(epsilon)`.
pub fn second_order_check(rows: &[GridRow], epsilon: f64) -> SecondOrderReport {
    let mut keys: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.epsilon == epsilon)
        .map(|r| (r.p, r.d))
        .collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    let qi = super::stats::q_inv(epsilon);
    let fits: Vec<SecondOrderFit> = keys
        .iter()
        .map(|&(p, d)| {
            let sel: Vec<&GridRow> = rows
                .iter()
                .filter(|r| r.epsilon == epsilon && r.p == p && r.d == d)
                .collect();
            let target = sel[0].sigma * qi;
            let x: Vec<f64> = sel
                .iter()
                .flat_map(|r| {
                    let l = (r.m as f64).log2();
                    [1.0, 1.0 / l.sqrt(), l.log2() / l.sqrt()]
                })
                .collect();
            let y: Vec<f64> = sel
                .iter()
                .map(|r| (r.r_empirical - r.rate) * ((r.m as f64).log2() / r.rate).sqrt())
                .collect();
            let intercept = least_squares(&x, &y, 3).map_or(f64::NAN, |(b, _)| b[0]);
            let relative_error = ((intercept - target) / target).abs();
            SecondOrderFit {
                p,
                d,
                intercept,
                target,
                relative_error,
                pass: relative_error <= 0.2,
            }
        })
        .collect();
    SecondOrderReport {
        epsilon,
        pass: !fits.is_empty() && fits.iter().all(|f| f.pass),
        fits,
    }
}

pub fn write_csv(rows: &[GridRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(m: u64, r: f64, bound: f64) -> GridRow {
        GridRow {
            p: 0.3,
            d: 0.1,
            m,
            epsilon: 0.1,
            r_empirical: r,
            bound,
            rate: 0.4,
            sigma: 0.5,
            c_h: 1.0,
            trials: 10,
            ci_lo: r,
            ci_hi: r,
            gamma: 1.0,
            m_actual: m,
            overflow: 0.0,
        }
    }

    #[test]
    fn sandwich_rules() {
        let ok = sandwich_check(&[row(1 << 10, 0.5, 0.9), row(1 << 12, 0.5, 0.8)]);
        assert!(ok.zero_slack && ok.pass);
        // c = 1.0 at both budgets
        let stable = sandwich_check(&[row(1 << 10, 0.6, 0.5), row(1 << 20, 0.55, 0.5)]);
        assert!(!stable.zero_slack && stable.stable);
        let unstable = sandwich_check(&[row(1 << 10, 0.6, 0.5), row(1 << 20, 0.8, 0.5)]);
        assert!(!unstable.pass);
    }

    #[test]
    fn regression_recovers_planted_intercept() {
        let rows: Vec<GridRow> = [10u32, 12, 14, 16]
            .iter()
            .map(|&k| {
                let l = k as f64;
                let y = 0.5 * 1.2816 + 0.3 / l.sqrt() - 0.1 * l.log2() / l.sqrt();
                row(1 << k, 0.4 + y / (l / 0.4).sqrt(), 9.0)
            })
            .collect();
        let rep = second_order_check(&rows, 0.1);
        assert!(rep.pass, "{:?}", rep.fits);
        assert!((rep.fits[0].intercept - 0.5 * 1.2816).abs() < 1e-6);
    }
}
