//! Experiment runner: configuration, replications and result files.
//!
//! Replication `r` (0-based) uses seed `base_seed + r`. Replications run in
//! parallel but are collected in index order, so every output is identical
//! to a sequential run.

mod config;
mod output;

use rayon::prelude::*;

pub use config::{default_checkpoints, ExperimentConfig};
pub use output::{
    plot_csv, plot_rows, read_summary, write_bundle, Metadata, PlotRow, RawRow, ResultBundle, Summary, SummaryRow,
};

use crate::analysis::{lower_bound_m, regret_given};
use crate::blocks::build_isb;
use crate::env::BanditProblem;
use crate::error::{Error, Result};
use crate::lp::BasisCatalog;
use crate::policy::{run_policy, RunStats};
use crate::rational::to_f64;

/// Runs every replication of `cfg` on `problem`.
pub fn run_replications(problem: &BanditProblem, cfg: &ExperimentConfig, checkpoints: &[u64]) -> Result<Vec<RunStats>> {
    let policy = cfg.policy();
    (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = cfg.base_seed.wrapping_add(rep);
            run_policy(problem, &policy, cfg.horizon, seed, checkpoints).map_err(|e| Error::Replication {
                rep,
                seed,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Loads the instance named by `cfg`, runs it and assembles the bundle.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let instance_path = cfg.instance_path();
    let instance_text = std::fs::read_to_string(&instance_path).map_err(|e| Error::io(&instance_path, e))?;
    let problem = BanditProblem::load(&instance_path)?;
    if let Some(name) = &cfg.family {
        if name != problem.family.name() {
            return Err(Error::Config(format!(
                "config names family {name} but {} is {}",
                instance_path.display(),
                problem.family.name()
            )));
        }
    }
    let isb = build_isb(&problem.instance, cfg.n0)?;
    let checkpoints = cfg.resolved_checkpoints(isb.length)?;
    let runs = run_replications(&problem, cfg, &checkpoints)?;

    let z_star = BasisCatalog::new(&problem.instance)?.optimum(problem.instance.means()).z;
    let mut rows = Vec::new();
    for (rep, run) in runs.iter().enumerate() {
        for cp in &run.checkpoints {
            rows.push(RawRow {
                rep: rep as u64,
                n: cp.n,
                regret: to_f64(&regret_given(&problem.instance, &z_star, &cp.counts)),
                counts: cp.counts.clone(),
                slack: cp.slack.iter().map(to_f64).collect(),
                blocks_completed: cp.blocks_completed,
            });
        }
    }
    let lower_bound = lower_bound_m(&problem, cfg.policy().bisection).map(|r| r.to_json());
    Ok(ResultBundle::assemble(
        cfg,
        &instance_text,
        &checkpoints,
        rows,
        lower_bound,
        &runs,
    ))
}
