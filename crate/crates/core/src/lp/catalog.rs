//! Enumeration of every basic feasible solution of the activation LP.
//!
//! Primal feasibility of a basis depends only on the cost data, so the set of
//! vertices (and their exact activation probabilities) is computed once per
//! cost structure. Optimising for a particular mean vector then reduces to
//! scoring the stored vertices, either exactly over rationals or in `f64`
//! for the policy's per-block re-solves.

use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::instance::{Basis, ProblemInstance};
use super::linalg::{invert, mat_vec, Matrix};
use crate::error::{Error, Result};
use crate::rational::{lcm_of_denominators, to_f64, Rational};

/// Arithmetic used to score vertices. Implemented for exact rationals and
/// for `f64`.
pub trait LpScalar:
    Clone + PartialOrd + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn coeff(exact: &Rational, approx: f64) -> Self;
    fn is_nonnegative(&self) -> bool;
    fn is_positive(&self) -> bool;
}

impl LpScalar for Rational {
    fn coeff(exact: &Rational, _approx: f64) -> Self {
        exact.clone()
    }

    fn is_nonnegative(&self) -> bool {
        !Signed::is_negative(self)
    }

    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

/// Roundoff allowance when checking dual signs in floating point.
const F64_SIGN_TOL: f64 = 1e-9;

impl LpScalar for f64 {
    fn coeff(_exact: &Rational, approx: f64) -> Self {
        approx
    }

    fn is_nonnegative(&self) -> bool {
        *self >= -F64_SIGN_TOL
    }

    fn is_positive(&self) -> bool {
        *self > F64_SIGN_TOL
    }
}

/// Integer activation counts `m_l` of an LPB block and its length `X(b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockComposition {
    pub counts: Vec<u64>,
    pub length: u64,
}

/// Exact block composition from activation probabilities: the block length
/// is the least common denominator of the positive probabilities.
pub(crate) fn compose(x: &[Rational]) -> Result<BlockComposition> {
    let one = Rational::from_integer(1.into());
    if x.iter().any(Signed::is_negative) || x.iter().sum::<Rational>() != one {
        return Err(Error::NonRationalProbabilities);
    }
    let positive: Vec<&Rational> = x.iter().filter(|v| Signed::is_positive(*v)).collect();
    let lcd: BigInt = lcm_of_denominators(positive.iter().copied());
    let length = lcd.to_u64().ok_or(Error::NonRationalProbabilities)?;
    let counts = x
        .iter()
        .map(|v| {
            let m = v * Rational::from_integer(lcd.clone());
            debug_assert!(m.is_integer());
            m.to_integer().to_u64().ok_or(Error::NonRationalProbabilities)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockComposition { counts, length })
}

/// One basic feasible solution.
#[derive(Clone, Debug)]
pub struct Vertex {
    pub basis: Basis,
    /// Activation probabilities, one per bandit.
    pub x: Vec<Rational>,
    /// Resource slacks `y_j`.
    pub slack: Vec<Rational>,
    /// A basic variable sits at zero.
    pub degenerate: bool,
    pub composition: BlockComposition,
    binv: Matrix,
    x_f64: Vec<f64>,
    binv_f64: Vec<Vec<f64>>,
}

impl Vertex {
    pub fn x_f64(&self) -> &[f64] {
        &self.x_f64
    }
}

/// Result of scoring the catalog for a mean vector.
#[derive(Clone, Debug)]
pub struct Optimum<T> {
    /// Index of the selected vertex.
    pub index: usize,
    pub z: T,
    /// Every vertex attaining `z`, in catalog order.
    pub ties: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct BasisCatalog {
    bandits: usize,
    resources: usize,
    /// Bandit columns `(c^i_1, .., c^i_L, 1)`.
    columns: Vec<Vec<Rational>>,
    columns_f64: Vec<Vec<f64>>,
    vertices: Vec<Vertex>,
}

fn combinations(n: usize, r: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, n, r, &mut Vec::with_capacity(r), out);
}

impl BasisCatalog {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        let k = inst.bandits();
        let l = inst.resources();
        let rhs = inst.rhs();

        let mut subsets = Vec::new();
        combinations(k + l, l + 1, &mut subsets);

        let mut vertices = Vec::new();
        for cols in subsets {
            let bandits: Vec<usize> = cols.iter().copied().filter(|&c| c < k).collect();
            if bandits.is_empty() {
                continue;
            }
            let slacks: Vec<usize> = cols.iter().filter(|&&c| c >= k).map(|c| c - k).collect();
            let basis = Basis::new(bandits, slacks)?;
            let Some(binv) = invert(&basis_matrix(inst, &basis)) else {
                continue;
            };
            let values = mat_vec(&binv, &rhs);
            if values.iter().any(Signed::is_negative) {
                continue;
            }
            let mut x = vec![Rational::zero(); k];
            let mut slack = vec![Rational::zero(); l];
            let nb = basis.bandits().len();
            for (p, &b) in basis.bandits().iter().enumerate() {
                x[b] = values[p].clone();
            }
            for (p, &s) in basis.slacks().iter().enumerate() {
                slack[s] = values[nb + p].clone();
            }
            let degenerate = values.iter().any(Zero::is_zero);
            let composition = compose(&x)?;
            let x_f64 = x.iter().map(to_f64).collect();
            let binv_f64 = binv.iter().map(|row| row.iter().map(to_f64).collect()).collect();
            vertices.push(Vertex {
                basis,
                x,
                slack,
                degenerate,
                composition,
                binv,
                x_f64,
                binv_f64,
            });
        }
        if vertices.is_empty() {
            return Err(Error::InfeasibleInstance);
        }
        vertices.sort_by(|a, b| a.basis.cmp(&b.basis));

        let columns: Vec<Vec<Rational>> = (0..k).map(|i| inst.column(i)).collect();
        let columns_f64 = columns.iter().map(|c| c.iter().map(to_f64).collect()).collect();
        Ok(BasisCatalog {
            bandits: k,
            resources: l,
            columns,
            columns_f64,
            vertices,
        })
    }

    pub fn bandits(&self) -> usize {
        self.bandits
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> &Vertex {
        &self.vertices[index]
    }

    pub fn find(&self, basis: &Basis) -> Option<usize> {
        self.vertices.binary_search_by(|v| v.basis.cmp(basis)).ok()
    }

    /// Largest multiplicity of each bandit over all feasible LPB blocks.
    pub fn max_multiplicity(&self) -> Vec<u64> {
        (0..self.bandits)
            .map(|i| {
                self.vertices
                    .iter()
                    .map(|v| v.composition.counts[i])
                    .max()
                    .unwrap_or(0)
            })
            .collect()
    }

    pub fn objective<T: LpScalar>(&self, index: usize, means: &[T]) -> T {
        let v = &self.vertices[index];
        v.basis.bandits().iter().fold(T::zero(), |acc, &b| {
            acc + T::coeff(&v.x[b], v.x_f64[b]) * means[b].clone()
        })
    }

    /// Dual vector `(g_1, .., g_L, g_{L+1}) = mu_B B^{-1}`.
    pub fn dual<T: LpScalar>(&self, index: usize, means: &[T]) -> Vec<T> {
        let v = &self.vertices[index];
        (0..=self.resources)
            .map(|c| {
                v.basis
                    .bandits()
                    .iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (p, &b)| {
                        acc + means[b].clone() * T::coeff(&v.binv[p][c], v.binv_f64[p][c])
                    })
            })
            .collect()
    }

    /// Reduced costs of all bandits under vertex `index`; exactly zero for
    /// basic bandits.
    pub fn reduced_costs<T: LpScalar>(&self, index: usize, means: &[T]) -> Vec<T> {
        let g = self.dual(index, means);
        self.reduced_costs_from_dual(index, &g, means)
    }

    pub(crate) fn reduced_costs_from_dual<T: LpScalar>(
        &self,
        index: usize,
        g: &[T],
        means: &[T],
    ) -> Vec<T> {
        let basis = &self.vertices[index].basis;
        (0..self.bandits)
            .map(|a| {
                if basis.contains(a) {
                    return T::zero();
                }
                let col = &self.columns[a];
                let col_f = &self.columns_f64[a];
                let price = (0..=self.resources).fold(T::zero(), |acc, r| {
                    acc + T::coeff(&col[r], col_f[r]) * g[r].clone()
                });
                price - means[a].clone()
            })
            .collect()
    }

    /// All reduced costs (bandits and slacks) are nonnegative.
    pub fn is_dual_feasible<T: LpScalar>(&self, index: usize, means: &[T]) -> bool {
        let g = self.dual(index, means);
        g[..self.resources].iter().all(LpScalar::is_nonnegative)
            && self
                .reduced_costs_from_dual(index, &g, means)
                .iter()
                .all(LpScalar::is_nonnegative)
    }

    /// Unique optimality: nondegenerate and every non-basic variable has a
    /// strictly positive reduced cost.
    pub fn is_unique_optimum<T: LpScalar>(&self, index: usize, means: &[T]) -> bool {
        let v = &self.vertices[index];
        if v.degenerate {
            return false;
        }
        let g = self.dual(index, means);
        let phi = self.reduced_costs_from_dual(index, &g, means);
        let slacks_ok = (0..self.resources)
            .filter(|j| !v.basis.slacks().contains(j))
            .all(|j| g[j].is_positive());
        let bandits_ok = (0..self.bandits)
            .filter(|&a| !v.basis.contains(a))
            .all(|a| phi[a].is_positive());
        slacks_ok && bandits_ok
    }

    /// Best vertex for `means`. Among vertices attaining the maximum the
    /// first dual-feasible one in lexicographic basis order is selected
    /// (falling back to the first tie).
    pub fn optimum<T: LpScalar>(&self, means: &[T]) -> Optimum<T> {
        let mut best: Option<T> = None;
        let mut ties: Vec<usize> = Vec::new();
        for i in 0..self.vertices.len() {
            let z = self.objective(i, means);
            match &best {
                Some(b) if z < *b => {}
                Some(b) if z == *b => ties.push(i),
                _ => {
                    best = Some(z);
                    ties.clear();
                    ties.push(i);
                }
            }
        }
        let z = best.expect("catalog is never empty");
        let index = if ties.len() == 1 {
            ties[0]
        } else {
            ties.iter()
                .copied()
                .find(|&i| self.is_dual_feasible(i, means))
                .unwrap_or(ties[0])
        };
        Optimum { index, z, ties }
    }
}

pub(crate) fn basis_matrix(inst: &ProblemInstance, basis: &Basis) -> Matrix {
    let l = inst.resources();
    let cols: Vec<Vec<Rational>> = basis
        .bandits()
        .iter()
        .map(|&b| inst.column(b))
        .chain(basis.slacks().iter().map(|&s| inst.slack_column(s)))
        .collect();
    (0..=l)
        .map(|r| cols.iter().map(|c| c[r].clone()).collect())
        .collect()
}
