use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{Bisection, PolicyConfig};

fn default_replications() -> u64 {
    1
}

fn default_n0() -> u64 {
    1
}

fn default_eps_mu() -> f64 {
    1e-6
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> u32 {
    200
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Experiment description read from JSON. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: PathBuf,
    /// Optional family name; must match the instance file when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    pub horizon: u64,
    /// Periods at which the trajectory is recorded. Defaults to 20
    /// log-spaced points from the initial block length to the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_n0")]
    pub n0: u64,
    #[serde(default = "default_eps_mu")]
    pub eps_mu: f64,
    #[serde(default = "default_tol")]
    pub bisection_tol: f64,
    #[serde(default = "default_max_iter")]
    pub bisection_max_iter: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config whose relative paths refer to `base_dir`.
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.horizon == 0 {
            return bad("horizon must be positive");
        }
        if self.n0 == 0 {
            return bad("n0 must be at least 1");
        }
        if !(self.eps_mu > 0.0 && self.eps_mu.is_finite()) {
            return bad("eps_mu must be positive");
        }
        if !(self.bisection_tol > 0.0 && self.bisection_tol < 1.0) || self.bisection_max_iter == 0 {
            return bad("bisection_tol must lie in (0, 1) and bisection_max_iter be positive");
        }
        Ok(())
    }

    pub fn instance_path(&self) -> PathBuf {
        self.base_dir.join(&self.instance)
    }

    /// Output directory, unless overridden by the caller.
    pub fn output_path(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig {
            n0: self.n0,
            eps_mu: self.eps_mu,
            bisection: Bisection {
                tol: self.bisection_tol,
                max_iter: self.bisection_max_iter,
            },
        }
    }

    /// Checkpoint grid, validated against the initial block length.
    pub fn resolved_checkpoints(&self, isb_length: u64) -> Result<Vec<u64>> {
        if self.horizon < isb_length {
            return Err(Error::HorizonTooShort {
                horizon: self.horizon,
                isb: isb_length,
            });
        }
        let Some(cps) = &self.checkpoints else {
            return Ok(default_checkpoints(isb_length, self.horizon, 20));
        };
        if cps.is_empty() {
            return Err(Error::Config("checkpoint list is empty".into()));
        }
        if cps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("checkpoints must be strictly increasing".into()));
        }
        if let Some(c) = cps.iter().find(|&&c| c < isb_length || c > self.horizon) {
            return Err(Error::Config(format!(
                "checkpoint {c} outside [{isb_length}, {}]",
                self.horizon
            )));
        }
        Ok(cps.clone())
    }
}

/// Up to `count` log-spaced integers from `lo` to `hi`, always ending at
/// `hi`.
pub fn default_checkpoints(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    let lo = lo.max(1).min(hi);
    if count < 2 || lo == hi {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (count - 1) as f64;
            (x.exp().round() as u64).clamp(lo, hi)
        })
        .collect();
    out.dedup();
    if out.last() != Some(&hi) {
        out.push(hi);
    }
    out
}
