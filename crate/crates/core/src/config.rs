//! Run configuration shared by the command-line tools.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::GridConfig;
use crate::covering::DEFAULT_UPSILON;
use crate::dictionary::BuildConfig;
use crate::error::{Error, Result};
use crate::rd::{DistortionSpec, Pmf};
use crate::rng::DEFAULT_SEED;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "VFLOSSY_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub source: Vec<f64>,
    /// `"hamming"` or a path to a JSON matrix (array of rows).
    pub distortion: String,
    #[serde(rename = "D")]
    pub level: f64,
    #[serde(rename = "M")]
    pub budget: u64,
    pub epsilons: Vec<f64>,
    pub upsilon: f64,
    pub seed: u64,
    pub trials: u64,
    pub output: PathBuf,
    pub build: BuildConfig,
    /// Sweep run by `analyze`; without it `analyze` evaluates the single
    /// point above.
    pub grid: Option<GridAxes>,
}

/// Axes of an `analyze` sweep over binary Hamming sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxes {
    pub ps: Vec<f64>,
    pub levels: Vec<f64>,
    pub log2_budgets: Vec<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            source: vec![0.5, 0.5],
            distortion: "hamming".into(),
            level: 0.1,
            budget: 1 << 12,
            epsilons: vec![0.05, 0.1, 0.25],
            upsilon: DEFAULT_UPSILON,
            seed: DEFAULT_SEED,
            trials: 100_000,
            output: PathBuf::from("out"),
            build: BuildConfig::default(),
            grid: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Replace the seed with `VFLOSSY_SEED` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = parse_seed(&v).map_err(|m| Error::Config(format!("{SEED_ENV}: {m}")))?;
        }
        Ok(())
    }

    pub fn pmf(&self) -> Result<Pmf> {
        Pmf::new(self.source.clone()).map_err(|e| Error::Config(format!("source: {e}")))
    }

    pub fn spec(&self) -> Result<DistortionSpec> {
        let k = self.source.len();
        let spec = if self.distortion == "hamming" {
            DistortionSpec::hamming(k, self.level)
        } else {
            let path = Path::new(&self.distortion);
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let matrix: Vec<Vec<f64>> = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("distortion: {}: {e}", path.display())))?;
            DistortionSpec::new(matrix, self.level)
        }
        .map_err(|e| Error::Config(format!("distortion: {e}")))?;
        if spec.source_size() != k {
            return Err(Error::Config(format!(
                "distortion: matrix has {} rows, source has {k} letters",
                spec.source_size()
            )));
        }
        Ok(spec)
    }

    /// Build settings with the run's seed and covering constant.
    pub fn build_config(&self) -> BuildConfig {
        let mut b = self.build.clone();
        b.seed = self.seed;
        b.cover.upsilon = self.upsilon;
        b
    }

    pub fn grid_config(&self) -> Option<GridConfig> {
        self.grid.as_ref().map(|g| GridConfig {
            ps: g.ps.clone(),
            levels: g.levels.clone(),
            log2_budgets: g.log2_budgets.clone(),
            epsilons: self.epsilons.clone(),
            trials: self.trials,
            upsilon: self.upsilon,
            seed: self.seed,
            build: self.build_config(),
            ..GridConfig::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.pmf()?;
        if !(self.level >= 0.0 && self.level.is_finite()) {
            return Err(Error::Config(format!("D: {} must be finite and >= 0", self.level)));
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Config(format!("epsilons: {e} must lie in (0, 1)")));
        }
        if !(self.upsilon >= 0.0 && self.upsilon.is_finite()) {
            return Err(Error::Config(format!("upsilon: {} must be finite and >= 0", self.upsilon)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials: must be at least 1".into()));
        }
        Ok(())
    }
}

/// Decimal or `0x` hexadecimal seed.
pub fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("{s:?} is not a seed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"D": 0.2, "M": 256}"#).is_ok());
        let e = RunConfig::from_json(r#"{"D": 0.2, "bogus": 1}"#).unwrap_err();
        assert!(e.to_string().contains("bogus"));
    }

    #[test]
    fn bad_source_names_the_field() {
        let c = RunConfig {
            source: vec![0.5, 0.4],
            ..RunConfig::default()
        };
        let e = c.validate().unwrap_err();
        assert!(e.to_string().contains("source"));
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seed("0x10"), Ok(16));
        assert_eq!(parse_seed("42"), Ok(42));
        assert!(parse_seed("x").is_err());
    }
}
