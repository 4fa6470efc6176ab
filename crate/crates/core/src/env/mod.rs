//! Reward families, exact budget accounting and the simulated environment.
//!
//! Every bandit draws from its own ChaCha8 stream (`ChaCha8Rng` seeded with
//! the replication seed, stream id = bandit index), so the rewards a bandit
//! receives do not depend on how activations of other bandits interleave.
//! Normal draws use `rand_distr::StandardNormal`; discrete draws invert the
//! CDF on one `f64` uniform.

mod family;
mod ledger;

use std::path::Path;

use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub use family::{discrete_kl, BanditParam, Family};
pub use ledger::{BudgetLedger, CostModel};

use crate::error::{Error, Result};
use crate::lp::ProblemInstance;
use crate::rational::{parse_rational, to_f64, Rational};

/// An LP instance together with its reward family and true parameters.
#[derive(Clone, Debug)]
pub struct BanditProblem {
    /// Cost data with the true means.
    pub instance: ProblemInstance,
    pub family: Family,
    pub truth: Vec<BanditParam>,
}

/// Number written either as a JSON number or as a decimal / `p/q` string.
#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    Text(String),
    Value(f64),
}

impl Num {
    fn exact(&self) -> Result<Rational> {
        match self {
            Num::Text(s) => parse_rational(s),
            // Shortest round-trip rendering, so 0.1 means 1/10.
            Num::Value(v) if v.is_finite() => parse_rational(&v.to_string()),
            Num::Value(v) => Err(Error::ParseNumber(v.to_string())),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthFile {
    means: Option<Vec<Num>>,
    variances: Option<Vec<Num>>,
    probs: Option<Vec<Vec<Num>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    k: usize,
    #[serde(rename = "L")]
    l: usize,
    costs: Vec<Vec<Num>>,
    rates: Vec<Num>,
    family: Family,
    truth: TruthFile,
}

fn exact_all(v: &[Num]) -> Result<Vec<Rational>> {
    v.iter().map(Num::exact).collect()
}

impl BanditProblem {
    pub fn new(instance: ProblemInstance, family: Family, truth: Vec<BanditParam>) -> Result<Self> {
        family.validate(instance.bandits())?;
        if truth.len() != instance.bandits() {
            return Err(Error::InvalidInstance(format!(
                "{} parameters for {} bandits",
                truth.len(),
                instance.bandits()
            )));
        }
        for (a, p) in truth.iter().enumerate() {
            let mean = family.mean_of(a, p)?;
            let exact = to_f64(instance.mean(a));
            if (mean - exact).abs() > 1e-9 * exact.abs().max(1.0) {
                return Err(Error::InvalidInstance(format!(
                    "bandit {} has LP mean {exact} but its parameter implies {mean}",
                    a + 1
                )));
            }
        }
        Ok(BanditProblem { instance, family, truth })
    }

    /// Parses the JSON instance format (see the README for the schema).
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInstance(format!("malformed instance JSON: {e}")))?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: InstanceFile =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        Self::from_file(file)
    }

    fn from_file(file: InstanceFile) -> Result<Self> {
        if file.costs.len() != file.k || file.rates.len() != file.l {
            return Err(Error::InvalidInstance(format!(
                "declared k={} and L={} but found {} cost rows and {} rates",
                file.k,
                file.l,
                file.costs.len(),
                file.rates.len()
            )));
        }
        let costs = file.costs.iter().map(|r| exact_all(r)).collect::<Result<Vec<_>>>()?;
        let rates = exact_all(&file.rates)?;
        let family = file.family;
        family.validate(file.k)?;
        let missing = |what: &str| {
            Error::InvalidInstance(format!("family {} needs truth.{what}", family.name()))
        };

        let (means, truth) = match &family {
            Family::NormalKnownVar { .. } => {
                let means = exact_all(file.truth.means.as_deref().ok_or_else(|| missing("means"))?)?;
                let truth = means.iter().map(|m| BanditParam::Normal { mean: to_f64(m) }).collect();
                (means, truth)
            }
            Family::NormalUnknownVar => {
                let means = exact_all(file.truth.means.as_deref().ok_or_else(|| missing("means"))?)?;
                let vars = exact_all(file.truth.variances.as_deref().ok_or_else(|| missing("variances"))?)?;
                if vars.len() != means.len() {
                    return Err(Error::InvalidInstance(format!(
                        "{} variances for {} means",
                        vars.len(),
                        means.len()
                    )));
                }
                if let Some(a) = vars.iter().position(|v| !v.is_positive()) {
                    return Err(Error::InvalidInstance(format!("variance of bandit {} must be positive", a + 1)));
                }
                let truth = means
                    .iter()
                    .zip(&vars)
                    .map(|(m, v)| BanditParam::NormalUnknown { mean: to_f64(m), var: to_f64(v) })
                    .collect();
                (means, truth)
            }
            Family::DiscreteFinite { supports } => {
                let probs = file.truth.probs.as_deref().ok_or_else(|| missing("probs"))?;
                if probs.len() != supports.len() {
                    return Err(Error::InvalidInstance(format!(
                        "{} probability vectors for {} bandits",
                        probs.len(),
                        supports.len()
                    )));
                }
                let mut means = Vec::with_capacity(probs.len());
                let mut truth = Vec::with_capacity(probs.len());
                for (a, (p, r)) in probs.iter().zip(supports).enumerate() {
                    let p = exact_all(p)?;
                    if p.len() != r.len() {
                        return Err(Error::InvalidInstance(format!(
                            "bandit {} has {} probabilities for {} support points",
                            a + 1,
                            p.len(),
                            r.len()
                        )));
                    }
                    if p.iter().any(|x| !x.is_positive()) || p.iter().sum::<Rational>() != Rational::from_integer(1.into()) {
                        return Err(Error::InvalidInstance(format!(
                            "probabilities of bandit {} must be positive and sum to exactly 1",
                            a + 1
                        )));
                    }
                    let mut mean = Rational::zero();
                    for (px, rx) in p.iter().zip(r) {
                        mean += px * parse_rational(&rx.to_string())?;
                    }
                    means.push(mean);
                    truth.push(BanditParam::Discrete { probs: p.iter().map(to_f64).collect() });
                }
                (means, truth)
            }
        };
        let instance = ProblemInstance::new(costs, rates, means)?;
        Self::new(instance, family, truth)
    }

    pub fn bandits(&self) -> usize {
        self.instance.bandits()
    }

    pub fn resources(&self) -> usize {
        self.instance.resources()
    }
}

/// One simulated trajectory: per-bandit reward streams and the budget ledger.
#[derive(Clone, Debug)]
pub struct Environment {
    family: Family,
    truth: Vec<BanditParam>,
    streams: Vec<ChaCha8Rng>,
    ledger: BudgetLedger,
    counts: Vec<u64>,
    reward_total: f64,
}

impl Environment {
    pub fn new(problem: &BanditProblem, seed: u64) -> Result<Self> {
        let k = problem.bandits();
        let streams = (0..k)
            .map(|a| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(a as u64);
                rng
            })
            .collect();
        Ok(Environment {
            family: problem.family.clone(),
            truth: problem.truth.clone(),
            streams,
            ledger: BudgetLedger::new(CostModel::new(&problem.instance)?),
            counts: vec![0; k],
            reward_total: 0.0,
        })
    }

    /// Draws from `bandit`'s distribution on its own stream, without any
    /// budget effect.
    pub fn sample(&mut self, bandit: usize) -> f64 {
        self.family.sample(bandit, &self.truth[bandit], &mut self.streams[bandit])
    }

    /// Charges one activation of `bandit` to the ledger and returns its
    /// reward. A violation leaves the state untouched.
    pub fn activate(&mut self, bandit: usize) -> Result<f64> {
        self.ledger.activate(bandit)?;
        let x = self.sample(bandit);
        self.counts[bandit] += 1;
        self.reward_total += x;
        Ok(x)
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    /// Activations so far, `T^a(n)`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn period(&self) -> u64 {
        self.ledger.period()
    }

    /// `V(n)`, the sum of all rewards received.
    pub fn reward_total(&self) -> f64 {
        self.reward_total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INSTANCE_B: &str = r#"{
        "k": 3, "L": 1,
        "costs": [["0"], ["2"], ["2"]],
        "rates": ["1"],
        "family": {"name": "normal-known-var", "sigma": [1, 1, 1]},
        "truth": {"means": ["1", "2", "1.5"]}
    }"#;

    #[test]
    fn loads_instance_b() {
        let p = BanditProblem::from_json(INSTANCE_B).unwrap();
        assert_eq!(p.bandits(), 3);
        assert_eq!(p.instance.mean(2), &parse_rational("3/2").unwrap());
        assert_eq!(p.family.name(), "normal-known-var");
    }

    #[test]
    fn loads_discrete_with_exact_mean() {
        let text = r#"{
            "k": 2, "L": 1,
            "costs": [[0], [2]], "rates": [1],
            "family": {"name": "discrete", "supports": [[0, 1], [0, 1, 2]]},
            "truth": {"probs": [["1/2", "1/2"], [0.1, 0.2, 0.7]]}
        }"#;
        let p = BanditProblem::from_json(text).unwrap();
        assert_eq!(p.instance.mean(1), &parse_rational("1.6").unwrap());
    }

    #[test]
    fn rejects_bad_files() {
        assert!(BanditProblem::from_json("{").is_err());
        let no_truth = INSTANCE_B.replace(r#""means""#, r#""variances""#);
        assert!(BanditProblem::from_json(&no_truth).is_err());
        let wrong_k = INSTANCE_B.replace(r#""k": 3"#, r#""k": 4"#);
        assert!(BanditProblem::from_json(&wrong_k).is_err());
    }

    #[test]
    fn activation_examples() {
        let text = INSTANCE_B
            .replace(r#"[["0"], ["2"], ["2"]]"#, r#"[["0"], ["2"]]"#)
            .replace(r#""k": 3"#, r#""k": 2"#)
            .replace("[1, 1, 1]", "[1, 1]")
            .replace(r#"["1", "2", "1.5"]"#, r#"["1", "2"]"#);
        let p = BanditProblem::from_json(&text).unwrap();
        let mut env = Environment::new(&p, 1).unwrap();
        assert!(matches!(env.activate(1), Err(Error::BudgetViolation { .. })));
        env.activate(0).unwrap();
        env.activate(1).unwrap();
        assert_eq!(env.counts(), &[1, 1]);
        assert!(env.ledger().slack(0).is_zero());
    }

    #[test]
    fn streams_are_independent_of_interleaving() {
        let p = BanditProblem::from_json(INSTANCE_B).unwrap();
        let mut a = Environment::new(&p, 42).unwrap();
        let mut b = Environment::new(&p, 42).unwrap();
        let only: Vec<f64> = (0..20).map(|_| a.sample(2)).collect();
        let mut mixed = Vec::new();
        for i in 0..20 {
            b.sample(i % 2);
            mixed.push(b.sample(2));
        }
        assert_eq!(only, mixed);
    }

    #[test]
    fn reward_total_is_sum_of_samples() {
        let p = BanditProblem::from_json(INSTANCE_B).unwrap();
        let mut env = Environment::new(&p, 5).unwrap();
        let mut total = 0.0;
        for a in [0, 0, 1, 0, 2] {
            total += env.activate(a).unwrap();
        }
        assert_eq!(env.reward_total(), total);
        assert_eq!(env.period(), 5);
    }
}
