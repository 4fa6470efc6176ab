//! Exact solution of the activation LP and its dual.
//!
//! The LP is
//!
//! ```text
//! max  sum_i mu_i x_i
//! s.t. sum_i c^i_j x_i + y_j = c^0_j   (j = 1..L)
//!      sum_i x_i = 1,  x, y >= 0
//! ```
//!
//! Every basic feasible solution is enumerated (see [`BasisCatalog`]);
//! [`solve_simplex`] is an independent Bland-rule route used to cross-check
//! the optimum.

mod catalog;
mod instance;
mod linalg;
mod simplex;

use num_traits::Zero;

pub use catalog::{BasisCatalog, BlockComposition, LpScalar, Optimum, Vertex};
pub use instance::{Basis, ProblemInstance};
pub use simplex::{solve_simplex, SimplexOutcome};

use crate::error::{Error, Result};
use crate::rational::Rational;
use catalog::{basis_matrix, compose};
use linalg::{invert, mat_vec, vec_mat};

/// Optimal basic feasible solution with its dual certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub basis: Basis,
    /// Activation probabilities `x_i`.
    pub x: Vec<Rational>,
    /// Resource slacks `y_j`.
    pub slack: Vec<Rational>,
    pub z_star: Rational,
    /// `(g_1, .., g_L, g_{L+1})`.
    pub dual: Vec<Rational>,
    /// `phi_alpha` for every bandit.
    pub reduced_costs: Vec<Rational>,
    /// No other basis is optimal: the BFS is nondegenerate and every
    /// non-basic variable (bandit or slack) has a positive reduced cost.
    pub unique: bool,
    pub degenerate: bool,
}

impl LpSolution {
    /// Objective of the dual at this solution's dual vector.
    pub fn dual_objective(&self, rates: &[Rational]) -> Rational {
        let l = rates.len();
        rates.iter().zip(&self.dual).map(|(c, g)| c * g).sum::<Rational>() + &self.dual[l]
    }
}

/// `w` such that `phi_alpha = w . mu` for every mean vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedCostWeights {
    pub weights: Vec<Rational>,
}

impl ReducedCostWeights {
    pub fn apply(&self, means: &[Rational]) -> Rational {
        self.weights.iter().zip(means).map(|(w, m)| w * m).sum()
    }
}

/// Builds the full solution record for catalog vertex `index` at the
/// instance's means.
pub fn solution_at(catalog: &BasisCatalog, index: usize, means: &[Rational]) -> LpSolution {
    let v = catalog.vertex(index);
    let dual = catalog.dual(index, means);
    let reduced_costs = catalog.reduced_costs(index, means);
    LpSolution {
        basis: v.basis.clone(),
        x: v.x.clone(),
        slack: v.slack.clone(),
        z_star: catalog.objective(index, means),
        dual,
        reduced_costs,
        unique: catalog.is_unique_optimum(index, means),
        degenerate: v.degenerate,
    }
}

/// Optimal BFS in exact arithmetic. Ties between optimal bases go to the
/// lexicographically smallest dual-feasible basis.
pub fn solve_primal(inst: &ProblemInstance) -> Result<LpSolution> {
    let catalog = BasisCatalog::new(inst)?;
    let best = catalog.optimum(inst.means());
    Ok(solution_at(&catalog, best.index, inst.means()))
}

/// Every feasible basis whose BFS attains `z*`.
pub fn enumerate_optimal_bases(inst: &ProblemInstance) -> Result<Vec<Basis>> {
    let catalog = BasisCatalog::new(inst)?;
    let best = catalog.optimum(inst.means());
    Ok(best
        .ties
        .iter()
        .map(|&i| catalog.vertex(i).basis.clone())
        .collect())
}

fn basis_inverse(basis: &Basis, inst: &ProblemInstance) -> Result<Vec<Vec<Rational>>> {
    basis.check_dims(inst)?;
    invert(&basis_matrix(inst, basis)).ok_or_else(|| Error::SingularBasis(basis.to_string()))
}

fn basic_means(basis: &Basis, inst: &ProblemInstance) -> Vec<Rational> {
    basis
        .bandits()
        .iter()
        .map(|&b| inst.mean(b).clone())
        .chain(basis.slacks().iter().map(|_| Rational::zero()))
        .collect()
}

/// `v^B = mu_B B^{-1}`.
pub fn dual_vector(basis: &Basis, inst: &ProblemInstance) -> Result<Vec<Rational>> {
    let binv = basis_inverse(basis, inst)?;
    Ok(vec_mat(&basic_means(basis, inst), &binv))
}

/// `phi^B_alpha = c^alpha . g + g_{L+1} - mu_alpha`.
pub fn reduced_cost(basis: &Basis, inst: &ProblemInstance, alpha: usize) -> Result<Rational> {
    let g = dual_vector(basis, inst)?;
    if basis.contains(alpha) {
        return Ok(Rational::zero());
    }
    let price: Rational = inst.column(alpha).iter().zip(&g).map(|(a, g)| a * g).sum();
    Ok(price - inst.mean(alpha))
}

pub fn reduced_cost_weights(
    basis: &Basis,
    inst: &ProblemInstance,
    alpha: usize,
) -> Result<ReducedCostWeights> {
    let binv = basis_inverse(basis, inst)?;
    let mut weights = vec![Rational::zero(); inst.bandits()];
    if basis.contains(alpha) {
        return Ok(ReducedCostWeights { weights });
    }
    let y = mat_vec(&binv, &inst.column(alpha));
    for (p, &b) in basis.bandits().iter().enumerate() {
        weights[b] = y[p].clone();
    }
    weights[alpha] -= Rational::from_integer(1.into());
    Ok(ReducedCostWeights { weights })
}

/// Integer activation counts `m_l = x_l X(b)` with `X(b)` the least common
/// denominator of the basic probabilities.
pub fn block_composition(solution: &LpSolution) -> Result<BlockComposition> {
    compose(&solution.x)
}
