//! Revised primal simplex with Bland's anticycling rule, in exact arithmetic.
//!
//! Starts from the always-feasible basis {bandit 1, every slack} and pivots
//! until no variable has a negative reduced cost. Kept independent of the
//! vertex catalog so the two routes can be checked against each other.

use num_traits::{Signed, Zero};

use super::instance::{Basis, ProblemInstance};
use super::linalg::{invert, mat_vec, vec_mat};
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Debug)]
pub struct SimplexOutcome {
    pub basis: Basis,
    pub z: Rational,
    pub pivots: usize,
}

const MAX_PIVOTS: usize = 100_000;

pub fn solve_simplex(inst: &ProblemInstance) -> Result<SimplexOutcome> {
    let k = inst.bandits();
    let l = inst.resources();
    let n_vars = k + l;
    let rhs = inst.rhs();

    let column = |v: usize| {
        if v < k {
            inst.column(v)
        } else {
            inst.slack_column(v - k)
        }
    };
    let cost = |v: usize| {
        if v < k {
            inst.mean(v).clone()
        } else {
            Rational::zero()
        }
    };
    let to_basis = |vars: &[usize]| {
        Basis::new(
            vars.iter().copied().filter(|&v| v < k).collect(),
            vars.iter().copied().filter(|&v| v >= k).map(|v| v - k).collect(),
        )
    };

    // Basic variables, position p holds the variable basic in row p.
    let mut basic: Vec<usize> = std::iter::once(0).chain(k..k + l).collect();

    for pivots in 0..MAX_PIVOTS {
        let mut sorted = basic.clone();
        sorted.sort_unstable();
        let basis = to_basis(&sorted)?;
        // Work with the column order in `basic`.
        let b: Vec<Vec<Rational>> = {
            let cols: Vec<Vec<Rational>> = basic.iter().map(|&v| column(v)).collect();
            (0..=l)
                .map(|r| cols.iter().map(|c| c[r].clone()).collect())
                .collect()
        };
        let binv = invert(&b).ok_or_else(|| Error::SingularBasis(basis.to_string()))?;
        let x_b = mat_vec(&binv, &rhs);
        let c_b: Vec<Rational> = basic.iter().map(|&v| cost(v)).collect();
        let duals = vec_mat(&c_b, &binv);

        // Bland: smallest index with positive profit c_v - g.a_v.
        let entering = (0..n_vars).filter(|v| !basic.contains(v)).find(|&v| {
            let a = column(v);
            let price: Rational = a.iter().zip(&duals).map(|(x, y)| x * y).sum();
            (cost(v) - price).is_positive()
        });
        let Some(entering) = entering else {
            let z = c_b.iter().zip(&x_b).map(|(c, x)| c * x).sum();
            return Ok(SimplexOutcome { basis, z, pivots });
        };

        let direction = mat_vec(&binv, &column(entering));
        let mut leave: Option<(usize, Rational)> = None;
        for p in 0..=l {
            if !direction[p].is_positive() {
                continue;
            }
            let ratio = &x_b[p] / &direction[p];
            leave = match leave {
                None => Some((p, ratio)),
                Some((q, best)) => {
                    if ratio < best || (ratio == best && basic[p] < basic[q]) {
                        Some((p, ratio))
                    } else {
                        Some((q, best))
                    }
                }
            };
        }
        // The feasible region is bounded, so some row always blocks.
        let (row, _) = leave.ok_or(Error::InfeasibleInstance)?;
        basic[row] = entering;
    }
    Err(Error::InfeasibleInstance)
}
