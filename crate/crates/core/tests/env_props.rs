mod common;

use cmab_core::env::{discrete_kl, BanditParam, BanditProblem, BudgetLedger, CostModel, Environment, Family};
use cmab_core::{Error, Rational};
use num_traits::Signed;
use proptest::prelude::*;

use common::{random_instance, INSTANCE_B};

fn simplex(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn simplex_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, d).prop_map(simplex)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn discrete_kl_matches_direct_sum(d in 2usize..6, seed in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let p = simplex((0..d).map(|_| rand::Rng::random_range(&mut rng, 0.01..1.0)).collect());
        let r = simplex((0..d).map(|_| rand::Rng::random_range(&mut rng, 0.01..1.0)).collect());
        let mut direct = 0.0;
        for i in 0..d {
            direct += p[i] * (p[i] / r[i]).ln();
        }
        let kl = discrete_kl(&p, &r).unwrap();
        prop_assert!((kl - direct.max(0.0)).abs() < 1e-12);
        prop_assert!(kl >= 0.0);
        prop_assert!(discrete_kl(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn normal_kl_nonnegative_and_zero_only_at_equality(a in -5.0f64..5.0, b in -5.0f64..5.0, s in 0.1f64..3.0, v in 0.1f64..4.0) {
        let f = Family::NormalKnownVar { sigma: vec![s] };
        let kl = f.kl_divergence(0, &BanditParam::Normal { mean: a }, &BanditParam::Normal { mean: b }).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert_eq!(kl == 0.0, a == b);
        let g = Family::NormalUnknownVar;
        let kl = g
            .kl_divergence(
                0,
                &BanditParam::NormalUnknown { mean: a, var: v },
                &BanditParam::NormalUnknown { mean: b, var: v },
            )
            .unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert_eq!(kl == 0.0, a == b);
    }

    #[test]
    fn discrete_kl_positive_off_diagonal(p in simplex_strategy(3), q in simplex_strategy(3)) {
        let kl = discrete_kl(&p, &q).unwrap();
        let same = p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-12);
        prop_assert!(kl >= 0.0);
        if !same {
            prop_assert!(kl > 0.0);
        }
    }

    #[test]
    fn ledger_refuses_exactly_when_a_slack_would_go_negative(seed in any::<u64>(), picks in prop::collection::vec(0usize..6, 1..200)) {
        let inst = random_instance(seed);
        let mut ledger = BudgetLedger::new(CostModel::new(&inst).unwrap());
        // Rational oracle of the slacks.
        let mut slack: Vec<Rational> = vec![Rational::from_integer(0.into()); inst.resources()];
        for p in picks {
            let a = p % inst.bandits();
            let next: Vec<Rational> = (0..inst.resources()).map(|j| &slack[j] - inst.delta(a, j)).collect();
            let ok = next.iter().all(|s| !s.is_negative());
            match ledger.activate(a) {
                Ok(()) => {
                    prop_assert!(ok);
                    slack = next;
                }
                Err(Error::BudgetViolation { .. }) => prop_assert!(!ok),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
            prop_assert_eq!(ledger.slacks(), slack.clone());
            prop_assert!(slack.iter().all(|s| !s.is_negative()));
        }
    }

    #[test]
    fn bandit_stream_ignores_other_activations(seed in any::<u64>(), others in prop::collection::vec(0usize..2, 0..50)) {
        let problem = BanditProblem::from_json(INSTANCE_B).unwrap();
        let mut alone = Environment::new(&problem, seed).unwrap();
        let mut mixed = Environment::new(&problem, seed).unwrap();
        let expected: Vec<f64> = (0..others.len() + 1).map(|_| alone.sample(2)).collect();
        let mut got = Vec::new();
        for o in &others {
            mixed.sample(*o);
            got.push(mixed.sample(2));
        }
        got.push(mixed.sample(2));
        prop_assert_eq!(got, expected);
    }
}

#[test]
fn fixed_seed_reproduces_samples() {
    let problem = BanditProblem::from_json(INSTANCE_B).unwrap();
    let draw = |seed| {
        let mut env = Environment::new(&problem, seed).unwrap();
        (0..100).map(|i| env.sample(i % 3)).collect::<Vec<f64>>()
    };
    assert_eq!(draw(9), draw(9));
    assert_ne!(draw(9), draw(10));
}
