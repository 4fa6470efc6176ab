//! Exact resource accounting.
//!
//! All costs and rates are rescaled by the least common multiple `D` of their
//! denominators, so the ledger works on integer "units" of `1/D`. Slack of
//! resource `j` after `n` periods is `n c^0_j - C_j(n)` (plus any starting
//! surplus) and must never go negative.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::lp::ProblemInstance;
use crate::rational::{display, lcm_of_denominators, Rational};

/// Integer-scaled cost structure of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostModel {
    scale: i128,
    /// `(c^i_j - c^0_j) * D` per bandit and resource.
    deltas: Vec<Vec<i128>>,
    /// `c^0_j * D`.
    rates: Vec<i128>,
}

impl CostModel {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        let all = inst.costs().iter().flatten().chain(inst.rates());
        let lcd = lcm_of_denominators(all);
        let scale = lcd
            .to_i64()
            .ok_or_else(|| Error::InvalidInstance("cost denominators are too large".into()))?
            as i128;
        let to_units = |r: &Rational| -> Result<i128> {
            let v = r * Rational::from_integer(lcd.clone());
            v.to_integer()
                .to_i64()
                .map(i128::from)
                .ok_or_else(|| Error::InvalidInstance("cost value is too large".into()))
        };
        let rates = inst.rates().iter().map(to_units).collect::<Result<Vec<_>>>()?;
        let deltas = (0..inst.bandits())
            .map(|i| {
                (0..inst.resources())
                    .map(|j| Ok(to_units(inst.cost(i, j))? - rates[j]))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CostModel { scale, deltas, rates })
    }

    pub fn bandits(&self) -> usize {
        self.deltas.len()
    }

    pub fn resources(&self) -> usize {
        self.rates.len()
    }

    /// Scaled net cost of one activation of `bandit` on `resource`.
    pub fn delta_units(&self, bandit: usize, resource: usize) -> i128 {
        self.deltas[bandit][resource]
    }

    pub fn rate_units(&self, resource: usize) -> i128 {
        self.rates[resource]
    }

    pub fn scale(&self) -> i128 {
        self.scale
    }

    pub fn to_rational(&self, units: i128) -> Rational {
        Rational::new(BigInt::from(units), BigInt::from(self.scale))
    }

    /// Largest unit count not exceeding `r`. Deltas are whole units, so
    /// `r + delta >= 0` iff `floor_units(r) + delta_units >= 0`.
    pub fn floor_units(&self, r: &Rational) -> i128 {
        let v = (r * Rational::from_integer(BigInt::from(self.scale))).floor();
        v.to_integer().to_i128().unwrap_or(if r.is_negative() {
            i128::MIN / 2
        } else {
            i128::MAX / 2
        })
    }
}

/// Running budget state of one trajectory.
#[derive(Clone, Debug)]
pub struct BudgetLedger {
    model: CostModel,
    period: u64,
    start: Vec<i128>,
    slack: Vec<i128>,
}

impl BudgetLedger {
    pub fn new(model: CostModel) -> Self {
        let l = model.resources();
        BudgetLedger {
            model,
            period: 0,
            start: vec![0; l],
            slack: vec![0; l],
        }
    }

    /// Ledger that starts with a surplus (used to replay a block from the
    /// middle of a trajectory).
    pub fn with_starting_slack(model: CostModel, start: &[Rational]) -> Self {
        let start: Vec<i128> = start.iter().map(|s| model.floor_units(s)).collect();
        BudgetLedger {
            model,
            period: 0,
            slack: start.clone(),
            start,
        }
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    /// Number of accepted activations `n`.
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn slack_units(&self) -> &[i128] {
        &self.slack
    }

    pub fn slack(&self, resource: usize) -> Rational {
        self.model.to_rational(self.slack[resource])
    }

    pub fn slacks(&self) -> Vec<Rational> {
        (0..self.slack.len()).map(|j| self.slack(j)).collect()
    }

    /// Cumulative consumption `C_j(n)`.
    pub fn spent(&self, resource: usize) -> Rational {
        let j = resource;
        let units = self.start[j] + self.period as i128 * self.model.rates[j] - self.slack[j];
        self.model.to_rational(units)
    }

    pub fn can_activate(&self, bandit: usize) -> bool {
        self.slack
            .iter()
            .enumerate()
            .all(|(j, s)| s - self.model.deltas[bandit][j] >= 0)
    }

    /// Records one activation of `bandit`; refuses (leaving the ledger
    /// untouched) if any resource slack would become negative.
    pub fn activate(&mut self, bandit: usize) -> Result<()> {
        for (j, s) in self.slack.iter().enumerate() {
            let next = s - self.model.deltas[bandit][j];
            if next < 0 {
                return Err(Error::BudgetViolation {
                    period: self.period + 1,
                    bandit: bandit + 1,
                    resource: j + 1,
                    slack: display(&self.model.to_rational(next)),
                });
            }
        }
        for (j, s) in self.slack.iter_mut().enumerate() {
            *s -= self.model.deltas[bandit][j];
        }
        self.period += 1;
        Ok(())
    }
}
