use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{display, parse_rational, Rational};

/// Cost data and bandit means of the activation LP.
///
/// Bandits are indexed from 0 internally; the labelling convention (bandit 0
/// is the cheapest in every resource) must already be applied by the caller.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    costs: Vec<Vec<Rational>>,
    rates: Vec<Rational>,
    means: Vec<Rational>,
}

impl ProblemInstance {
    pub fn new(costs: Vec<Vec<Rational>>, rates: Vec<Rational>, means: Vec<Rational>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let k = costs.len();
        let l = rates.len();
        if k < 2 {
            return bad(format!("need at least 2 bandits, got {k}"));
        }
        if l < 1 {
            return bad("need at least one resource".into());
        }
        if l >= k {
            return bad(format!("resource count {l} must be smaller than bandit count {k}"));
        }
        if means.len() != k {
            return bad(format!("{} means for {k} bandits", means.len()));
        }
        for (i, row) in costs.iter().enumerate() {
            if row.len() != l {
                return bad(format!("bandit {} has {} costs, expected {l}", i + 1, row.len()));
            }
            for (j, c) in row.iter().enumerate() {
                if *c == rates[j] {
                    return bad(format!(
                        "bandit {} cost for resource {} equals the replenishment rate",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        if let Some(j) = (0..l).find(|&j| costs[0][j] >= rates[j]) {
            return bad(format!(
                "bandit 1 must be strictly below the rate of every resource (resource {} violates)",
                j + 1
            ));
        }
        if !(0..l).any(|j| rates[j] < costs[k - 1][j]) {
            return bad(format!("bandit {k} must exceed the rate of at least one resource"));
        }
        let inst = ProblemInstance {
            costs,
            rates,
            means: Vec::new(),
        };
        inst.with_means(means)
    }

    /// Builds an instance from decimal (or `p/q`) strings.
    pub fn from_strs(costs: &[&[&str]], rates: &[&str], means: &[&str]) -> Result<Self> {
        let costs = costs
            .iter()
            .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let rates = rates.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
        let means = means.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
        Self::new(costs, rates, means)
    }

    /// Same cost data, different means.
    pub fn with_means(&self, means: Vec<Rational>) -> Result<Self> {
        if means.len() != self.costs.len() {
            return Err(Error::InvalidInstance(format!(
                "{} means for {} bandits",
                means.len(),
                self.costs.len()
            )));
        }
        if let Some(i) = means.iter().position(|m| !m.is_positive()) {
            return Err(Error::InvalidInstance(format!(
                "mean of bandit {} must be positive, got {}",
                i + 1,
                display(&means[i])
            )));
        }
        Ok(ProblemInstance {
            costs: self.costs.clone(),
            rates: self.rates.clone(),
            means,
        })
    }

    pub fn bandits(&self) -> usize {
        self.costs.len()
    }

    pub fn resources(&self) -> usize {
        self.rates.len()
    }

    pub fn cost(&self, bandit: usize, resource: usize) -> &Rational {
        &self.costs[bandit][resource]
    }

    pub fn costs(&self) -> &[Vec<Rational>] {
        &self.costs
    }

    pub fn rate(&self, resource: usize) -> &Rational {
        &self.rates[resource]
    }

    pub fn rates(&self) -> &[Rational] {
        &self.rates
    }

    pub fn mean(&self, bandit: usize) -> &Rational {
        &self.means[bandit]
    }

    pub fn means(&self) -> &[Rational] {
        &self.means
    }

    /// Net effect `c^i_j - c^0_j` of one activation of `bandit` on resource `j`.
    pub fn delta(&self, bandit: usize, resource: usize) -> Rational {
        &self.costs[bandit][resource] - &self.rates[resource]
    }

    /// LP column of a bandit: its costs followed by the probability-row 1.
    pub(crate) fn column(&self, bandit: usize) -> Vec<Rational> {
        let mut col = self.costs[bandit].clone();
        col.push(Rational::from_integer(1.into()));
        col
    }

    /// Column of slack `j`: unit vector in resource row `j`.
    pub(crate) fn slack_column(&self, resource: usize) -> Vec<Rational> {
        (0..=self.resources())
            .map(|r| {
                if r == resource {
                    Rational::from_integer(1.into())
                } else {
                    Rational::zero()
                }
            })
            .collect()
    }

    pub(crate) fn rhs(&self) -> Vec<Rational> {
        let mut rhs = self.rates.clone();
        rhs.push(Rational::from_integer(1.into()));
        rhs
    }
}

/// A choice of basic variables: bandit ids plus the slack ids completing the
/// `(L+1) x (L+1)` basic matrix. Ordered lexicographically by bandit ids,
/// then slack ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Basis {
    bandits: Vec<usize>,
    slacks: Vec<usize>,
}

impl Basis {
    pub fn new(mut bandits: Vec<usize>, mut slacks: Vec<usize>) -> Result<Self> {
        bandits.sort_unstable();
        bandits.dedup();
        slacks.sort_unstable();
        slacks.dedup();
        if bandits.is_empty() {
            return Err(Error::InvalidInstance("a basis needs at least one bandit".into()));
        }
        Ok(Basis { bandits, slacks })
    }

    pub fn bandits(&self) -> &[usize] {
        &self.bandits
    }

    pub fn slacks(&self) -> &[usize] {
        &self.slacks
    }

    pub fn contains(&self, bandit: usize) -> bool {
        self.bandits.binary_search(&bandit).is_ok()
    }

    pub fn size(&self) -> usize {
        self.bandits.len() + self.slacks.len()
    }

    pub(crate) fn check_dims(&self, inst: &ProblemInstance) -> Result<()> {
        let l = inst.resources();
        if self.size() != l + 1
            || self.bandits.iter().any(|&b| b >= inst.bandits())
            || self.slacks.iter().any(|&s| s >= l)
        {
            return Err(Error::InvalidInstance(format!(
                "basis {self} does not fit an instance with {} bandits and {l} resources",
                inst.bandits()
            )));
        }
        Ok(())
    }

    /// One-based bandit labels, as used in reports.
    pub fn labels(&self) -> Vec<usize> {
        self.bandits.iter().map(|b| b + 1).collect()
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.bandits.iter().map(|b| (b + 1).to_string()).collect();
        write!(f, "{{{}", ids.join(","))?;
        if !self.slacks.is_empty() {
            let ys: Vec<String> = self.slacks.iter().map(|s| format!("y{}", s + 1)).collect();
            write!(f, "; {}", ys.join(","))?;
        }
        write!(f, "}}")
    }
}
