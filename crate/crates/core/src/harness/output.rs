use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::policy::RunStats;
use crate::error::{Error, Result};

/// One replication at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub rep: u64,
    pub n: u64,
    pub regret: f64,
    pub counts: Vec<u64>,
    pub slack: Vec<f64>,
    pub blocks_completed: u64,
}

/// Replication averages at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: u64,
    pub avg_regret: f64,
    pub avg_counts: Vec<f64>,
    pub avg_slack: Vec<f64>,
    pub avg_blocks_completed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// SHA-256 of the resolved config and the instance file.
    pub config_hash: String,
    pub code_version: String,
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub seed_rule: String,
    pub rng: String,
    pub checkpoint_rule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub metadata: Metadata,
    pub checkpoints: Vec<SummaryRow>,
    /// Lower bound report, or `null` with `lower_bound_error` set.
    pub lower_bound: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound_error: Option<String>,
    pub counting_violations: u64,
    pub ordering_fallbacks: u64,
    /// Singleton blocks of bandit 1 inserted to bank surplus.
    pub surplus_blocks: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultBundle {
    pub summary: Summary,
    pub rows: Vec<RawRow>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn mean(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    values.sum::<f64>() / count as f64
}

impl ResultBundle {
    pub(crate) fn assemble(
        cfg: &ExperimentConfig,
        instance_text: &str,
        checkpoints: &[u64],
        rows: Vec<RawRow>,
        lower_bound: Result<Value>,
        runs: &[RunStats],
    ) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_string(cfg).unwrap_or_default().as_bytes());
        hasher.update(b"\n");
        hasher.update(instance_text.as_bytes());
        let config_hash = hex(&hasher.finalize());

        let summary_rows = checkpoints
            .iter()
            .map(|&n| {
                let at: Vec<&RawRow> = rows.iter().filter(|r| r.n == n).collect();
                let r = at.len();
                let k = at.first().map_or(0, |x| x.counts.len());
                let l = at.first().map_or(0, |x| x.slack.len());
                SummaryRow {
                    n,
                    avg_regret: mean(at.iter().map(|x| x.regret), r),
                    avg_counts: (0..k).map(|a| mean(at.iter().map(|x| x.counts[a] as f64), r)).collect(),
                    avg_slack: (0..l).map(|j| mean(at.iter().map(|x| x.slack[j]), r)).collect(),
                    avg_blocks_completed: mean(at.iter().map(|x| x.blocks_completed as f64), r),
                }
            })
            .collect();

        let (lower_bound, lower_bound_error) = match lower_bound {
            Ok(v) => (v, None),
            Err(e) => (Value::Null, Some(e.to_string())),
        };
        let summary = Summary {
            metadata: Metadata {
                config_hash,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                horizon: cfg.horizon,
                replications: cfg.replications,
                base_seed: cfg.base_seed,
                seed_rule: "replication r uses seed base_seed + r".into(),
                rng: "ChaCha8 (rand_chacha 0.9), one stream per bandit".into(),
                checkpoint_rule: "snapshot taken at exactly period n; a block cut by the horizon runs up to n".into(),
            },
            checkpoints: summary_rows,
            lower_bound,
            lower_bound_error,
            counting_violations: runs.iter().map(|r| r.counting_violations).sum(),
            ordering_fallbacks: runs.iter().map(|r| r.ordering_fallbacks).sum(),
            surplus_blocks: runs.iter().map(|r| r.surplus_blocks).sum(),
        };
        ResultBundle { summary, rows }
    }

    /// Raw rows as CSV: `rep,n,regret,T_1..T_k,slack_1..slack_L,blocks_completed`.
    pub fn raw_csv(&self) -> String {
        let k = self.rows.first().map_or(0, |r| r.counts.len());
        let l = self.rows.first().map_or(0, |r| r.slack.len());
        let mut out = String::from("rep,n,regret");
        (1..=k).for_each(|a| {
            let _ = write!(out, ",T_{a}");
        });
        (1..=l).for_each(|j| {
            let _ = write!(out, ",slack_{j}");
        });
        out.push_str(",blocks_completed\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.rep, r.n, r.regret);
            r.counts.iter().for_each(|t| {
                let _ = write!(out, ",{t}");
            });
            r.slack.iter().for_each(|s| {
                let _ = write!(out, ",{s}");
            });
            let _ = writeln!(out, ",{}", r.blocks_completed);
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serialises");
        s.push('\n');
        s
    }
}

/// Writes `raw.csv` and `summary.json` into `dir`, returning their paths.
pub fn write_bundle(bundle: &ResultBundle, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let raw = dir.join("raw.csv");
    std::fs::write(&raw, bundle.raw_csv()).map_err(|e| Error::io(&raw, e))?;
    let summary = dir.join("summary.json");
    std::fs::write(&summary, bundle.summary_json()).map_err(|e| Error::io(&summary, e))?;
    Ok((raw, summary))
}

/// Reads a summary from its file or from the directory holding it.
pub fn read_summary(path: &Path) -> Result<Summary> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: file, source })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotRow {
    pub n: u64,
    pub avg_regret: f64,
    /// `M log n`.
    pub m_log_n: f64,
    pub regret_over_log_n: f64,
}

/// Regret curve against the `M log n` reference.
pub fn plot_rows(summary: &Summary) -> Vec<PlotRow> {
    let m = summary.lower_bound.get("M").and_then(Value::as_f64).unwrap_or(0.0);
    summary
        .checkpoints
        .iter()
        .map(|c| {
            let log_n = (c.n as f64).ln();
            PlotRow {
                n: c.n,
                avg_regret: c.avg_regret,
                m_log_n: m * log_n,
                regret_over_log_n: c.avg_regret / log_n,
            }
        })
        .collect()
}

pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut out = String::from("n,avg_regret,M_log_n,regret_over_log_n\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.n, r.avg_regret, r.m_log_n, r.regret_over_log_n);
    }
    out
}
