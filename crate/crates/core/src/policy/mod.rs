//! The Z-UCB block policy.
//!
//! At each block boundary the policy solves the activation LP on the current
//! mean estimates, inflates every bandit's mean to the edge of its KL
//! confidence ball (radius `log S / T`), and for each bandit whose inflated
//! mean could change the optimum re-solves the LP with only that mean
//! inflated. The block executed next realises the basis with the largest
//! re-solved objective.

mod estimators;
pub mod kl;

pub use estimators::EstimatorState;
pub use kl::Bisection;

use crate::blocks::{build_isb, order_units, BlockSchedule};
use crate::env::{BanditProblem, CostModel, Environment, Family};
use crate::error::{Error, Result};
use crate::lp::{Basis, BasisCatalog};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyConfig {
    /// Repetitions of the initial sampling pattern.
    pub n0: u64,
    /// Floor applied to mean estimates before they enter the LP.
    pub eps_mu: f64,
    /// Discrete KL-UCB bisection.
    pub bisection: Bisection,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            n0: 1,
            eps_mu: 1e-6,
            bisection: Bisection::default(),
        }
    }
}

/// `theta + sigma sqrt(2 radius)`.
pub fn normal_known_inflation(mean: f64, sigma: f64, radius: f64) -> f64 {
    mean + sigma * (2.0 * radius.max(0.0)).sqrt()
}

/// `mu + sigma sqrt(S^(2/(T-2)) - 1)`; needs `T >= 3`.
pub fn normal_unknown_inflation(mean: f64, sd: f64, s: u64, t: u64) -> Result<f64> {
    if t < 3 {
        return Err(Error::InsufficientSamples {
            bandit: 0,
            needed: 3,
            have: t,
        });
    }
    let growth = ((2.0 / (t - 2) as f64) * (s as f64).ln()).exp_m1();
    Ok(mean + sd * growth.max(0.0).sqrt())
}

/// Inflation `v_alpha` of `bandit`'s mean after `s` total activations.
pub fn inflation_v(family: &Family, est: &EstimatorState, bandit: usize, s: u64, bis: Bisection) -> Result<f64> {
    let t = est.count(bandit);
    if t == 0 {
        return Err(Error::InsufficientSamples {
            bandit: bandit + 1,
            needed: 1,
            have: 0,
        });
    }
    let radius = (s as f64).ln() / t as f64;
    match family {
        Family::NormalKnownVar { sigma } => Ok(normal_known_inflation(est.mean(bandit), sigma[bandit], radius)),
        Family::NormalUnknownVar => {
            normal_unknown_inflation(est.mean(bandit), est.variance(bandit).sqrt(), s, t).map_err(|_| {
                Error::InsufficientSamples {
                    bandit: bandit + 1,
                    needed: 3,
                    have: t,
                }
            })
        }
        Family::DiscreteFinite { supports } => {
            Ok(kl::kl_ucb(&est.frequencies(bandit), &supports[bandit], radius, bis))
        }
    }
}

/// Bandits whose inflated mean exceeds `mu*_alpha = phi_alpha + mu_alpha`.
pub fn candidate_set_phi(reduced_costs: &[f64], estimates: &[f64], inflations: &[f64]) -> Vec<usize> {
    (0..estimates.len())
        .filter(|&a| reduced_costs[a] + estimates[a] < inflations[a])
        .collect()
}

/// Objective and vertex of the LP whose bandit-`alpha` mean is replaced by
/// `v`. An infinite `v` makes the objective infinite; the vertex is then the
/// one giving `alpha` the largest probability.
pub fn index_u(catalog: &BasisCatalog, estimates: &[f64], alpha: usize, v: f64) -> (f64, usize) {
    if v.is_infinite() {
        let best = (0..catalog.len())
            .filter(|&i| catalog.vertex(i).basis.contains(alpha))
            .max_by(|&i, &j| {
                let xi = catalog.vertex(i).x_f64()[alpha];
                let xj = catalog.vertex(j).x_f64()[alpha];
                xi.total_cmp(&xj)
                    .then(catalog.objective(i, estimates).total_cmp(&catalog.objective(j, estimates)))
                    // max_by keeps the last maximum; prefer the earlier vertex.
                    .then(j.cmp(&i))
            })
            .unwrap_or_else(|| catalog.optimum(estimates).index);
        return (f64::INFINITY, best);
    }
    let mut means = estimates.to_vec();
    means[alpha] = v;
    let opt = catalog.optimum(&means);
    (opt.z, opt.index)
}

/// Everything computed at one block boundary.
#[derive(Clone, Debug)]
pub struct IndexReport {
    /// Floored mean estimates fed to the LP.
    pub estimates: Vec<f64>,
    /// Optimal basis of the estimate LP and its objective.
    pub base: Basis,
    pub base_z: f64,
    pub reduced_costs: Vec<f64>,
    pub inflations: Vec<f64>,
    /// Members of the candidate set, ascending.
    pub candidates: Vec<usize>,
    /// `(u_alpha, b0_alpha)` for candidates, `None` otherwise.
    pub indices: Vec<Option<(f64, Basis)>>,
    /// Whether the index LP of each candidate has a unique optimum.
    pub index_unique: Vec<bool>,
    pub chosen: Basis,
    chosen_vertex: usize,
}

impl IndexReport {
    pub fn chosen_vertex(&self) -> usize {
        self.chosen_vertex
    }
}

/// Runs one block-boundary decision.
pub fn choose_block(
    catalog: &BasisCatalog,
    family: &Family,
    est: &EstimatorState,
    s: u64,
    cfg: &PolicyConfig,
) -> Result<IndexReport> {
    let k = catalog.bandits();
    let estimates: Vec<f64> = (0..k).map(|a| est.mean(a).max(cfg.eps_mu)).collect();
    let base = catalog.optimum(&estimates);
    let reduced_costs = catalog.reduced_costs(base.index, &estimates);
    let inflations = (0..k)
        .map(|a| match inflation_v(family, est, a, s, cfg.bisection) {
            Ok(v) => Ok(v),
            Err(Error::InsufficientSamples { needed: 3, .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<f64>>>()?;
    let candidates = candidate_set_phi(&reduced_costs, &estimates, &inflations);

    let mut indices = vec![None; k];
    let mut index_unique = vec![false; k];
    let mut chosen: Option<(f64, usize)> = None;
    for &a in &candidates {
        let (u, vertex) = index_u(catalog, &estimates, a, inflations[a]);
        if u.is_finite() {
            let mut means = estimates.clone();
            means[a] = inflations[a];
            index_unique[a] = catalog.is_unique_optimum(vertex, &means);
        }
        indices[a] = Some((u, catalog.vertex(vertex).basis.clone()));
        if chosen.is_none_or(|(best, _)| u > best) {
            chosen = Some((u, vertex));
        }
    }
    let chosen_vertex = chosen.map_or(base.index, |(_, v)| v);
    Ok(IndexReport {
        estimates,
        base: catalog.vertex(base.index).basis.clone(),
        base_z: base.z,
        reduced_costs,
        inflations,
        candidates,
        indices,
        index_unique,
        chosen: catalog.vertex(chosen_vertex).basis.clone(),
        chosen_vertex,
    })
}

/// Policy bookkeeping between blocks.
#[derive(Clone, Debug)]
pub struct PolicyState {
    pub estimators: EstimatorState,
    /// Completed blocks `l`, counting the initial sampling block.
    pub blocks_completed: u64,
    /// Total length `S(l)` of the completed blocks.
    pub completed_length: u64,
    /// `T^a(S(l))`.
    pub counts_at_boundary: Vec<u64>,
    /// Completed LP blocks per catalog vertex.
    pub block_counters: Vec<u64>,
}

/// Trajectory snapshot at a requested period.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub n: u64,
    pub counts: Vec<u64>,
    pub slack: Vec<Rational>,
    pub reward_total: f64,
    pub blocks_completed: u64,
}

/// Outcome of one simulated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    pub horizon: u64,
    pub seed: u64,
    /// `T^a(n)`.
    pub counts: Vec<u64>,
    pub slack: Vec<Rational>,
    /// `C_j(n)`.
    pub spent: Vec<Rational>,
    pub reward_total: f64,
    /// `m^0_a`.
    pub isb_counts: Vec<u64>,
    /// Basis of every catalog vertex.
    pub bases: Vec<Basis>,
    /// Block composition `m^b_a` of every catalog vertex.
    pub compositions: Vec<Vec<u64>>,
    /// Completed LP blocks per vertex.
    pub block_counts: Vec<u64>,
    /// Vertex of every completed LP block, in order.
    pub block_log: Vec<u32>,
    /// `L_n`, counting the initial sampling block.
    pub blocks_completed: u64,
    /// `S(L_n)`.
    pub completed_length: u64,
    pub checkpoints: Vec<Checkpoint>,
    /// Block-boundary checks of the counting identity and how many failed.
    pub counting_checks: u64,
    pub counting_violations: u64,
    /// LP blocks that could not be ordered from zero slack and were ordered
    /// against the ledger's actual slack instead.
    pub ordering_fallbacks: u64,
    /// Singleton blocks of bandit 1 run because the chosen block had no
    /// prefix-feasible order even against the actual slack.
    pub surplus_blocks: u64,
}

fn counting_identity_holds(state: &PolicyState, isb: &[u64], comps: &[Vec<u64>], counts: &[u64]) -> bool {
    (0..counts.len()).all(|a| {
        let from_blocks: u64 = state
            .block_counters
            .iter()
            .zip(comps)
            .map(|(t, m)| t * m[a])
            .sum();
        from_blocks + isb[a] == counts[a]
    })
}

struct Runner<'a> {
    env: Environment,
    horizon: u64,
    checkpoints: &'a [u64],
    next_checkpoint: usize,
    recorded: Vec<Checkpoint>,
    blocks_completed: u64,
}

impl Runner<'_> {
    /// Executes `schedule` until it ends or the horizon is reached. Returns
    /// whether the block completed. A checkpoint falling on the block's last
    /// activation is left for the caller to record after counting the block.
    fn execute(&mut self, schedule: &[usize], est: &mut EstimatorState) -> Result<bool> {
        for (i, &a) in schedule.iter().enumerate() {
            if self.env.period() >= self.horizon {
                return Ok(false);
            }
            let x = self.env.activate(a)?;
            est.push(a, x);
            if i + 1 < schedule.len() {
                self.record();
            }
        }
        Ok(true)
    }

    fn record(&mut self) {
        let n = self.env.period();
        while self.next_checkpoint < self.checkpoints.len() && self.checkpoints[self.next_checkpoint] == n {
            self.recorded.push(Checkpoint {
                n,
                counts: self.env.counts().to_vec(),
                slack: self.env.ledger().slacks(),
                reward_total: self.env.reward_total(),
                blocks_completed: self.blocks_completed,
            });
            self.next_checkpoint += 1;
        }
    }
}

/// Simulates the policy for `horizon` periods.
///
/// The initial sampling block runs first, then one LP block per decision.
/// A block cut off by the horizon is executed up to period `horizon` (every
/// prefix of a block is feasible), so the counts always sum to `horizon`.
/// `checkpoints` must be sorted; snapshots are taken at exactly those
/// periods.
pub fn run_policy(
    problem: &BanditProblem,
    cfg: &PolicyConfig,
    horizon: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<RunStats> {
    let inst = &problem.instance;
    let k = inst.bandits();
    let catalog = BasisCatalog::new(inst)?;
    let model = CostModel::new(inst)?;
    let isb: BlockSchedule = build_isb(inst, cfg.n0)?;
    if horizon < isb.length {
        return Err(Error::HorizonTooShort {
            horizon,
            isb: isb.length,
        });
    }
    if let Some(w) = checkpoints.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "checkpoints must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if let Some(&c) = checkpoints.iter().find(|&&c| c > horizon || c == 0) {
        return Err(Error::Config(format!("checkpoint {c} outside 1..={horizon}")));
    }

    let compositions: Vec<Vec<u64>> = catalog.vertices().iter().map(|v| v.composition.counts.clone()).collect();
    let mut orders: Vec<Option<Vec<usize>>> = vec![None; catalog.len()];
    let zero = vec![0i128; inst.resources()];

    let mut runner = Runner {
        env: Environment::new(problem, seed)?,
        horizon,
        checkpoints,
        next_checkpoint: 0,
        recorded: Vec::new(),
        blocks_completed: 0,
    };
    let mut state = PolicyState {
        estimators: EstimatorState::new(&problem.family, k),
        blocks_completed: 0,
        completed_length: 0,
        counts_at_boundary: vec![0; k],
        block_counters: vec![0; catalog.len()],
    };
    let mut block_log = Vec::new();
    let mut counting_checks = 0;
    let mut counting_violations = 0;
    let mut ordering_fallbacks = 0;
    let mut surplus_blocks = 0;
    let singleton = catalog
        .find(&Basis::new(vec![0], (0..inst.resources()).collect())?)
        .expect("bandit 1 alone is a vertex");

    let mut check_boundary = |state: &mut PolicyState, runner: &Runner| {
        state.counts_at_boundary = runner.env.counts().to_vec();
        counting_checks += 1;
        if !counting_identity_holds(state, &isb.counts, &compositions, runner.env.counts()) {
            counting_violations += 1;
        }
    };

    // The horizon is at least the ISB length, so the ISB always completes.
    runner.execute(&isb.activations, &mut state.estimators)?;
    state.blocks_completed = 1;
    state.completed_length = isb.length;
    runner.blocks_completed = 1;
    check_boundary(&mut state, &runner);
    runner.record();

    while runner.env.period() < horizon {
        let report = choose_block(&catalog, &problem.family, &state.estimators, state.completed_length, cfg)?;
        let mut v = report.chosen_vertex;
        let fallback;
        let schedule: &[usize] = match &orders[v] {
            Some(order) => order,
            None => match order_units(&compositions[v], &model, &zero) {
                Ok(order) => orders[v].insert(order),
                Err(Error::InfeasibleOrdering(_)) => {
                    match order_units(&compositions[v], &model, runner.env.ledger().slack_units()) {
                        Ok(order) => {
                            ordering_fallbacks += 1;
                            fallback = order;
                            &fallback
                        }
                        // Not schedulable yet: bank surplus with the
                        // singleton block of bandit 1 and decide again.
                        Err(Error::InfeasibleOrdering(_)) => {
                            surplus_blocks += 1;
                            v = singleton;
                            &[0]
                        }
                        Err(e) => return Err(e),
                    }
                }
                Err(e) => return Err(e),
            },
        };
        let length = schedule.len() as u64;
        if !runner.execute(schedule, &mut state.estimators)? {
            break;
        }
        state.block_counters[v] += 1;
        state.blocks_completed += 1;
        state.completed_length += length;
        runner.blocks_completed = state.blocks_completed;
        block_log.push(v as u32);
        check_boundary(&mut state, &runner);
        runner.record();
    }

    let ledger = runner.env.ledger();
    debug_assert_eq!(ledger.period(), horizon);
    Ok(RunStats {
        horizon,
        seed,
        counts: runner.env.counts().to_vec(),
        slack: ledger.slacks(),
        spent: (0..inst.resources()).map(|j| ledger.spent(j)).collect(),
        reward_total: runner.env.reward_total(),
        isb_counts: isb.counts.clone(),
        bases: catalog.vertices().iter().map(|v| v.basis.clone()).collect(),
        compositions,
        block_counts: state.block_counters,
        block_log,
        blocks_completed: state.blocks_completed,
        completed_length: state.completed_length,
        checkpoints: runner.recorded,
        counting_checks,
        counting_violations,
        ordering_fallbacks,
        surplus_blocks,
    })
}
