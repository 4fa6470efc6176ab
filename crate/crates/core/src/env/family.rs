use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parametric reward family shared by all bandits of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Family {
    /// Normal rewards with unknown means and known per-bandit standard
    /// deviations.
    NormalKnownVar { sigma: Vec<f64> },
    /// Normal rewards with unknown means and unknown variances.
    NormalUnknownVar,
    /// Finitely supported rewards; `supports[a]` lists bandit `a`'s values.
    #[serde(rename = "discrete")]
    DiscreteFinite { supports: Vec<Vec<f64>> },
}

/// Parameter `theta_a` of a single bandit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BanditParam {
    NormalUnknown { mean: f64, var: f64 },
    Normal { mean: f64 },
    Discrete { probs: Vec<f64> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::NormalKnownVar { .. } => "normal-known-var",
            Family::NormalUnknownVar => "normal-unknown-var",
            Family::DiscreteFinite { .. } => "discrete",
        }
    }

    pub fn validate(&self, bandits: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        match self {
            Family::NormalKnownVar { sigma } => {
                if sigma.len() != bandits {
                    return bad(format!("{} standard deviations for {bandits} bandits", sigma.len()));
                }
                if let Some(a) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
                    return bad(format!("sigma of bandit {} must be positive", a + 1));
                }
            }
            Family::NormalUnknownVar => {}
            Family::DiscreteFinite { supports } => {
                if supports.len() != bandits {
                    return bad(format!("{} supports for {bandits} bandits", supports.len()));
                }
                for (a, s) in supports.iter().enumerate() {
                    if s.len() < 2 {
                        return bad(format!("support of bandit {} needs at least 2 values", a + 1));
                    }
                    if s.iter().any(|v| !v.is_finite()) {
                        return bad(format!("support of bandit {} has a non-finite value", a + 1));
                    }
                    for i in 0..s.len() {
                        if s[i + 1..].contains(&s[i]) {
                            return bad(format!("support of bandit {} repeats {}", a + 1, s[i]));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn validate_param(&self, bandit: usize, p: &BanditParam) -> Result<()> {
        match (self, p) {
            (Family::NormalKnownVar { .. }, BanditParam::Normal { mean }) if mean.is_finite() => Ok(()),
            (Family::NormalUnknownVar, BanditParam::NormalUnknown { mean, var })
                if mean.is_finite() && *var >= 0.0 && var.is_finite() =>
            {
                Ok(())
            }
            (Family::DiscreteFinite { supports }, BanditParam::Discrete { probs }) => {
                if probs.len() != supports[bandit].len() {
                    return Err(Error::Domain(format!(
                        "bandit {} has {} probabilities for {} support points",
                        bandit + 1,
                        probs.len(),
                        supports[bandit].len()
                    )));
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::Domain(format!("bandit {} has an invalid probability", bandit + 1)));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "probabilities of bandit {} sum to {total}",
                        bandit + 1
                    )));
                }
                Ok(())
            }
            _ => Err(Error::Domain(format!(
                "parameter {p:?} does not belong to family {}",
                self.name()
            ))),
        }
    }

    pub fn mean_of(&self, bandit: usize, p: &BanditParam) -> Result<f64> {
        self.validate_param(bandit, p)?;
        Ok(match (self, p) {
            (_, BanditParam::Normal { mean }) | (_, BanditParam::NormalUnknown { mean, .. }) => *mean,
            (Family::DiscreteFinite { supports }, BanditParam::Discrete { probs }) => {
                supports[bandit].iter().zip(probs).map(|(r, p)| r * p).sum()
            }
            _ => unreachable!("checked by validate_param"),
        })
    }

    /// Closed-form Kullback-Leibler information `I(theta, theta')`.
    ///
    /// For the unknown-variance family this is `1/2 log(1 + (mu' - mu)^2 / sigma^2)`,
    /// the divergence after optimising out the alternative's variance.
    pub fn kl_divergence(&self, bandit: usize, p: &BanditParam, q: &BanditParam) -> Result<f64> {
        self.validate_param(bandit, p)?;
        self.validate_param(bandit, q)?;
        match (self, p, q) {
            (Family::NormalKnownVar { sigma }, BanditParam::Normal { mean: a }, BanditParam::Normal { mean: b }) => {
                let s = sigma[bandit];
                Ok((b - a).powi(2) / (2.0 * s * s))
            }
            (
                Family::NormalUnknownVar,
                BanditParam::NormalUnknown { mean: a, var },
                BanditParam::NormalUnknown { mean: b, .. },
            ) => {
                let d2 = (b - a).powi(2);
                if d2 == 0.0 {
                    Ok(0.0)
                } else if *var == 0.0 {
                    Ok(f64::INFINITY)
                } else {
                    Ok(0.5 * (d2 / var).ln_1p())
                }
            }
            (Family::DiscreteFinite { .. }, BanditParam::Discrete { probs: p }, BanditParam::Discrete { probs: q }) => {
                discrete_kl(p, q)
            }
            _ => unreachable!("checked by validate_param"),
        }
    }

    /// Draws one reward for `bandit` from its true parameter.
    pub fn sample<R: Rng + ?Sized>(&self, bandit: usize, p: &BanditParam, rng: &mut R) -> f64 {
        match (self, p) {
            (Family::NormalKnownVar { sigma }, BanditParam::Normal { mean }) => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma[bandit] * z
            }
            (Family::NormalUnknownVar, BanditParam::NormalUnknown { mean, var }) => {
                let z: f64 = StandardNormal.sample(rng);
                mean + var.sqrt() * z
            }
            (Family::DiscreteFinite { supports }, BanditParam::Discrete { probs }) => {
                // Inverse CDF on one uniform draw.
                let u: f64 = rng.random();
                let support = &supports[bandit];
                let mut acc = 0.0;
                for (r, p) in support.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *r;
                    }
                }
                // u landed in the rounding gap above the last partial sum.
                let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(support.len() - 1);
                support[last]
            }
            _ => panic!("parameter {p:?} does not belong to family {}", self.name()),
        }
    }

    /// Largest achievable mean for `bandit` (`+inf` for the Normal families).
    pub fn max_mean(&self, bandit: usize) -> f64 {
        match self {
            Family::DiscreteFinite { supports } => {
                supports[bandit].iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
            _ => f64::INFINITY,
        }
    }
}

/// `sum_x p_x log(p_x / q_x)` with `0 log 0 = 0`.
pub fn discrete_kl(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (x, (&px, &qx)) in p.iter().zip(q).enumerate() {
        if px == 0.0 {
            continue;
        }
        if qx <= 0.0 {
            return Err(Error::Domain(format!(
                "alternative puts zero mass on support point {} where the reference has {px}",
                x + 1
            )));
        }
        total += px * (px / qx).ln();
    }
    Ok(total.max(0.0))
}
