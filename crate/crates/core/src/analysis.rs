//! Regret accounting and the asymptotic lower bound.
//!
//! Regret here is the single-path pseudo-regret `n z* - sum_a mu_a T^a(n)`
//! computed from realised activation counts; the harness averages it over
//! replications. The lower bound constant is
//! `M = sum_{a in D} phi_a / K_a`, where `D` holds the bandits that are in
//! no optimal basis but could enter one under some admissible parameter,
//! `phi_a` is the reduced cost under an optimal basis and `K_a` the smallest
//! KL divergence moving bandit `a`'s mean above `mu_a + phi_a`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::env::{BanditParam, BanditProblem, Family};
use crate::error::{Error, Result};
use crate::lp::{Basis, BasisCatalog, ProblemInstance};
use crate::policy::kl::{kinf, Bisection};
use crate::policy::RunStats;
use crate::rational::{display, to_f64, Rational};

fn q(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn optimal_value(inst: &ProblemInstance) -> Result<Rational> {
    let catalog = BasisCatalog::new(inst)?;
    Ok(catalog.optimum(inst.means()).z)
}

/// `n z* - sum_a mu_a T^a(n)` with `n = sum_a T^a(n)`.
pub fn pseudo_regret(inst: &ProblemInstance, counts: &[u64]) -> Result<Rational> {
    let z = optimal_value(inst)?;
    Ok(regret_given(inst, &z, counts))
}

pub(crate) fn regret_given(inst: &ProblemInstance, z_star: &Rational, counts: &[u64]) -> Rational {
    let n: u64 = counts.iter().sum();
    let earned: Rational = counts.iter().zip(inst.means()).map(|(t, m)| q(*t) * m).sum();
    q(n) * z_star - earned
}

/// The two nonnegative parts of the regret under an optimal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretDecomposition {
    /// `sum_j phi_j T^j(n)`: cost of activating non-basic bandits.
    pub exploration: Rational,
    /// `sum_i g_i (n c^0_i - C_i(n))`: value of unused budget.
    pub slack: Rational,
}

impl RegretDecomposition {
    pub fn total(&self) -> Rational {
        &self.exploration + &self.slack
    }
}

/// Splits the pseudo-regret of `counts` using the optimal basis `basis`.
pub fn regret_decomposition(inst: &ProblemInstance, basis: &Basis, counts: &[u64]) -> Result<RegretDecomposition> {
    let catalog = BasisCatalog::new(inst)?;
    basis.check_dims(inst)?;
    let not_optimal = || Error::NotOptimalBasis(basis.to_string());
    let index = catalog.find(basis).ok_or_else(not_optimal)?;
    let means = inst.means();
    if !catalog.is_dual_feasible(index, means) {
        return Err(not_optimal());
    }
    let g = catalog.dual(index, means);
    let phi = catalog.reduced_costs(index, means);
    let exploration = phi.iter().zip(counts).map(|(p, t)| p * q(*t)).sum();
    let slack = (0..inst.resources())
        .map(|i| {
            let unused: Rational = counts
                .iter()
                .enumerate()
                .map(|(j, t)| (inst.rate(i) - inst.cost(j, i)) * q(*t))
                .sum();
            &g[i] * unused
        })
        .sum();
    Ok(RegretDecomposition { exploration, slack })
}

/// Block regret after the first `l` completed blocks (the initial sampling
/// block counts as block 1): `S(l) z* - sum_b sum_j mu_j m^b_j T~^b(l) -
/// sum_j mu_j m^0_j`.
pub fn block_regret(inst: &ProblemInstance, stats: &RunStats, l: u64) -> Result<Rational> {
    if l == 0 || l > stats.blocks_completed {
        return Err(Error::Domain(format!(
            "block index {l} outside 1..={}",
            stats.blocks_completed
        )));
    }
    let z = optimal_value(inst)?;
    let mut per_vertex = vec![0u64; stats.bases.len()];
    for &v in &stats.block_log[..(l - 1) as usize] {
        per_vertex[v as usize] += 1;
    }
    let mut counts = stats.isb_counts.clone();
    for (v, t) in per_vertex.iter().enumerate() {
        for (a, m) in stats.compositions[v].iter().enumerate() {
            counts[a] += m * t;
        }
    }
    // With S(l) = sum of counts this is the pseudo-regret of the block counts.
    Ok(regret_given(inst, &z, &counts))
}

/// Bounds relating the block regret at `L_n` to the regret at `n`:
/// `lower <= R(n) <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sandwich {
    pub regret: Rational,
    pub lower: Rational,
    pub upper: Rational,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.regret && self.regret <= self.upper
    }
}

/// `R~(L_n) + (n - S(L_n)) z* - sum_a M_a mu_a <= R(n) <= R~(L_n) + (n - S(L_n)) z*`,
/// with `M_a` the largest multiplicity of bandit `a` in any LP block.
pub fn sandwich(inst: &ProblemInstance, stats: &RunStats) -> Result<Sandwich> {
    let catalog = BasisCatalog::new(inst)?;
    let z = catalog.optimum(inst.means()).z;
    let regret = regret_given(inst, &z, &stats.counts);
    let blocks = block_regret(inst, stats, stats.blocks_completed)?;
    let upper = blocks + q(stats.horizon - stats.completed_length) * &z;
    let slop: Rational = catalog
        .max_multiplicity()
        .iter()
        .zip(inst.means())
        .map(|(m, mu)| q(*m) * mu)
        .sum();
    let lower = &upper - slop;
    Ok(Sandwich { regret, lower, upper })
}

/// `K_a` for a bandit with reduced cost `phi`: the least divergence
/// `I(theta_a, theta')` over parameters with mean above `mu_a + phi`.
/// Infinite when that mean is out of the family's reach.
pub fn k_alpha(problem: &BanditProblem, alpha: usize, phi: &Rational, bis: Bisection) -> Result<f64> {
    if phi.is_negative() {
        return Err(Error::Domain(format!(
            "reduced cost of bandit {} is negative ({})",
            alpha + 1,
            display(phi)
        )));
    }
    if phi.is_zero() {
        return Ok(0.0);
    }
    let phi = to_f64(phi);
    let theta = &problem.truth[alpha];
    match (&problem.family, theta) {
        (Family::NormalKnownVar { sigma }, _) => Ok(phi * phi / (2.0 * sigma[alpha] * sigma[alpha])),
        (Family::NormalUnknownVar, BanditParam::NormalUnknown { var, .. }) => Ok(0.5 * (phi * phi / var).ln_1p()),
        (Family::DiscreteFinite { supports }, BanditParam::Discrete { probs }) => {
            let target = to_f64(problem.instance.mean(alpha)) + phi;
            Ok(kinf(probs, &supports[alpha], target, bis))
        }
        _ => Err(Error::Domain(format!(
            "parameter of bandit {} does not match family {}",
            alpha + 1,
            problem.family.name()
        ))),
    }
}

/// Optimal bases, the ones certified by nonnegative reduced costs, and the
/// reference basis used for `phi` (the one `solve_primal` returns).
struct Optima {
    catalog: BasisCatalog,
    z_star: Rational,
    all: Vec<usize>,
    certified: Vec<usize>,
    reference: usize,
}

fn optima(inst: &ProblemInstance) -> Result<Optima> {
    let catalog = BasisCatalog::new(inst)?;
    let best = catalog.optimum(inst.means());
    let certified = best
        .ties
        .iter()
        .copied()
        .filter(|&i| catalog.is_dual_feasible(i, inst.means()))
        .collect();
    Ok(Optima {
        z_star: best.z,
        all: best.ties,
        certified,
        reference: best.index,
        catalog,
    })
}

fn outside_optimal_bases(opt: &Optima, k: usize) -> Vec<usize> {
    (0..k)
        .filter(|&a| opt.all.iter().all(|&i| !opt.catalog.vertex(i).basis.contains(a)))
        .collect()
}

fn can_reach(problem: &BanditProblem, alpha: usize, phi: &Rational) -> bool {
    let target = to_f64(problem.instance.mean(alpha)) + to_f64(phi);
    target < problem.family.max_mean(alpha)
}

/// Bandits in no optimal basis whose mean can be pushed past
/// `mu_a + phi_a` within the family.
pub fn set_d(problem: &BanditProblem) -> Result<Vec<usize>> {
    let inst = &problem.instance;
    let opt = optima(inst)?;
    let phi = opt.catalog.reduced_costs(opt.reference, inst.means());
    Ok(outside_optimal_bases(&opt, inst.bandits())
        .into_iter()
        .filter(|&a| can_reach(problem, a, &phi[a]))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundReport {
    pub z_star: Rational,
    pub optimal_bases: Vec<Basis>,
    /// Bandit ids (0-based) in `D`.
    pub d: Vec<usize>,
    pub phi: BTreeMap<usize, Rational>,
    pub k: BTreeMap<usize, f64>,
    pub m: f64,
}

impl LowerBoundReport {
    /// JSON view with 1-based bandit labels. `phi` and `z_star` are also
    /// given exactly as `p/q` strings.
    pub fn to_json(&self) -> Value {
        let label = |a: &usize| (a + 1).to_string();
        let phi: serde_json::Map<String, Value> =
            self.phi.iter().map(|(a, p)| (label(a), json!(to_f64(p)))).collect();
        let phi_exact: serde_json::Map<String, Value> =
            self.phi.iter().map(|(a, p)| (label(a), json!(display(p)))).collect();
        let k: serde_json::Map<String, Value> = self
            .k
            .iter()
            .map(|(a, v)| (label(a), if v.is_finite() { json!(v) } else { json!("Infinite") }))
            .collect();
        json!({
            "z_star": to_f64(&self.z_star),
            "z_star_exact": display(&self.z_star),
            "O_star": self.optimal_bases.iter().map(Basis::labels).collect::<Vec<_>>(),
            "D": self.d.iter().map(|a| a + 1).collect::<Vec<_>>(),
            "phi": phi,
            "phi_exact": phi_exact,
            "K": k,
            "M": self.m,
        })
    }
}

/// Lower bound constant `M` with its ingredients. Fails with `AmbiguousPhi`
/// when certified optimal bases disagree on some `phi_a`, `a` in `D`.
pub fn lower_bound_m(problem: &BanditProblem, bis: Bisection) -> Result<LowerBoundReport> {
    let inst = &problem.instance;
    let opt = optima(inst)?;
    let means = inst.means();
    let reference_phi = opt.catalog.reduced_costs(opt.reference, means);

    let mut d = Vec::new();
    let mut phi = BTreeMap::new();
    let mut k = BTreeMap::new();
    let mut m = 0.0;
    for a in outside_optimal_bases(&opt, inst.bandits()) {
        let mut values: Vec<Rational> = opt
            .certified
            .iter()
            .map(|&i| opt.catalog.reduced_costs(i, means)[a].clone())
            .collect();
        values.sort();
        values.dedup();
        if values.len() > 1 {
            return Err(Error::AmbiguousPhi {
                bandit: a + 1,
                values: values.iter().map(display).collect(),
            });
        }
        let p = reference_phi[a].clone();
        if !can_reach(problem, a, &p) {
            continue;
        }
        let kv = k_alpha(problem, a, &p, bis)?;
        if kv > 0.0 && kv.is_finite() {
            m += to_f64(&p) / kv;
        }
        d.push(a);
        phi.insert(a, p);
        k.insert(a, kv);
    }
    Ok(LowerBoundReport {
        z_star: opt.z_star,
        optimal_bases: opt.all.iter().map(|&i| opt.catalog.vertex(i).basis.clone()).collect(),
        d,
        phi,
        k,
        m,
    })
}
