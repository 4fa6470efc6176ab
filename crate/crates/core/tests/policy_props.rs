mod common;

use cmab_core::env::Family;
use cmab_core::lp::BasisCatalog;
use cmab_core::policy::kl::{kinf, kinf_minimizer, kl_ucb};
use cmab_core::policy::{
    choose_block, normal_known_inflation, normal_unknown_inflation, run_policy, Bisection, EstimatorState,
    PolicyConfig,
};
use cmab_core::rational::to_f64;
use num_traits::Signed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{kinf_grid, kl_ucb_grid, problem, random_instance, Kind};

fn distribution(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn support(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut r: Vec<f64> = Vec::new();
    while r.len() < d {
        let x = (rng.random_range(0.0..4.0f64) * 8.0).round() / 8.0;
        if !r.contains(&x) {
            r.push(x);
        }
    }
    r.sort_by(f64::total_cmp);
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn inflations_grow_with_radius_and_dominate_the_mean(
        mean in -3.0f64..3.0,
        sigma in 0.1f64..3.0,
        r1 in 0.0f64..2.0,
        dr in 0.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let lo = normal_known_inflation(mean, sigma, r1);
        let hi = normal_known_inflation(mean, sigma, r1 + dr);
        prop_assert!(mean <= lo && lo <= hi);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(2..=4);
        let p = distribution(&mut rng, d);
        let r = support(&mut rng, d);
        let base: f64 = p.iter().zip(&r).map(|(p, r)| p * r).sum();
        let cfg = Bisection::default();
        let a = kl_ucb(&p, &r, r1, cfg);
        let b = kl_ucb(&p, &r, r1 + dr, cfg);
        prop_assert!(a >= base - 1e-12);
        prop_assert!(b >= a - 1e-9 * (r[d - 1] - r[0]));
        prop_assert!(b <= r[d - 1]);
    }

    #[test]
    fn unknown_variance_inflation_grows_with_s(mean in -3.0f64..3.0, sd in 0.0f64..3.0, s in 2u64..10_000, ds in 0u64..10_000, t in 3u64..200) {
        let lo = normal_unknown_inflation(mean, sd, s, t).unwrap();
        let hi = normal_unknown_inflation(mean, sd, s + ds, t).unwrap();
        prop_assert!(mean <= lo && lo <= hi);
        let later = normal_unknown_inflation(mean, sd, s, t + 1).unwrap();
        prop_assert!(later <= lo);
    }

    #[test]
    fn kinf_minimizer_is_feasible_and_attains_kinf(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(2..=4);
        let p = distribution(&mut rng, d);
        let r = support(&mut rng, d);
        let base: f64 = p.iter().zip(&r).map(|(p, r)| p * r).sum();
        let m = base + rng.random_range(0.0..1.0) * (r[d - 1] - base) * 0.999;
        let cfg = Bisection::default();
        let q = kinf_minimizer(&p, &r, m, cfg).unwrap();
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(q.iter().all(|x| *x >= 0.0));
        let reached: f64 = q.iter().zip(&r).map(|(q, r)| q * r).sum();
        prop_assert!(reached >= m - 1e-6 * (r[d - 1] - r[0]));
        let kl: f64 = p.iter().zip(&q).map(|(p, q)| p * (p / q).ln()).sum();
        prop_assert!((kl - kinf(&p, &r, m, cfg)).abs() < 1e-6);
    }

    #[test]
    fn zero_radius_keeps_the_estimate_basis(seed in any::<u64>()) {
        let inst = random_instance(seed);
        let prob = problem(&inst, Kind::KnownVar);
        let catalog = BasisCatalog::new(&inst).unwrap();
        let mut est = EstimatorState::new(&prob.family, inst.bandits());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in 0..inst.bandits() {
            for _ in 0..3 {
                est.push(a, to_f64(inst.mean(a)) + rng.random_range(-0.5..0.5));
            }
        }
        // ln S = 0 at S = 1.
        let report = choose_block(&catalog, &prob.family, &est, 1, &PolicyConfig::default()).unwrap();
        prop_assert!(report.candidates.is_empty());
        prop_assert_eq!(report.chosen, report.base);
    }

    #[test]
    fn chosen_block_has_the_largest_index(seed in any::<u64>(), s in 2u64..100_000) {
        let inst = random_instance(seed);
        let prob = problem(&inst, Kind::KnownVar);
        let catalog = BasisCatalog::new(&inst).unwrap();
        let mut est = EstimatorState::new(&prob.family, inst.bandits());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in 0..inst.bandits() {
            for _ in 0..rng.random_range(1..20) {
                est.push(a, to_f64(inst.mean(a)) + rng.random_range(-1.0..1.0));
            }
        }
        let report = choose_block(&catalog, &prob.family, &est, s, &PolicyConfig::default()).unwrap();
        for a in 0..inst.bandits() {
            prop_assert!(report.inflations[a] >= report.estimates[a] - 1e-12 || est.mean(a) < 1e-6);
            prop_assert_eq!(report.candidates.contains(&a), report.indices[a].is_some());
        }
        let best = report.indices.iter().flatten().map(|(u, _)| *u).fold(f64::NEG_INFINITY, f64::max);
        if let Some(first) = report.indices.iter().position(|i| i.as_ref().is_some_and(|(u, _)| *u == best)) {
            prop_assert_eq!(&report.chosen, &report.indices[first].as_ref().unwrap().1);
            // Inflating a candidate never lowers the LP value.
            prop_assert!(best >= report.base_z - 1e-9);
        } else {
            prop_assert_eq!(&report.chosen, &report.base);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_stay_feasible_and_count_blocks_exactly(seed in any::<u64>(), kind in 0usize..3) {
        let inst = random_instance(seed);
        let kind = [Kind::KnownVar, Kind::UnknownVar, Kind::Discrete][kind];
        let prob = problem(&inst, kind);
        let stats = run_policy(&prob, &PolicyConfig::default(), 2000, seed, &[500, 1000, 2000]);
        let stats = match stats {
            Ok(s) => s,
            Err(cmab_core::Error::HorizonTooShort { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(stats.counts.iter().sum::<u64>(), 2000);
        prop_assert!(stats.slack.iter().all(|s| !s.is_negative()));
        prop_assert!(stats.checkpoints.iter().all(|c| c.slack.iter().all(|s| !s.is_negative())));
        prop_assert_eq!(stats.counting_violations, 0);
        prop_assert_eq!(stats.counting_checks, stats.blocks_completed);
        prop_assert_eq!(stats.checkpoints.len(), 3);
        prop_assert_eq!(stats.block_log.len() as u64 + 1, stats.blocks_completed);
        if let Family::DiscreteFinite { .. } = prob.family {
            prop_assert!(stats.reward_total.is_finite());
        }
    }
}

#[test]
fn kl_ucb_and_kinf_match_grid_oracles() {
    let cfg = Bisection::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for case in 0..60 {
        let d = 2 + case % 2;
        let mut p = distribution(&mut rng, d);
        if case % 5 == 0 {
            // No mass on the top support point.
            p[d - 1] = 0.0;
            let t: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= t);
        }
        let r = support(&mut rng, d);
        let radius = rng.random_range(0.001..1.5);
        let got = kl_ucb(&p, &r, radius, cfg);
        let want = kl_ucb_grid(&p, &r, radius);
        assert!((got - want).abs() < 1e-6, "case {case}: kl_ucb {got} vs grid {want} for p={p:?} r={r:?}");

        let base: f64 = p.iter().zip(&r).map(|(p, r)| p * r).sum();
        let m = base + rng.random_range(0.01..0.99) * (r[d - 1] - base);
        let got = kinf(&p, &r, m, cfg);
        let want = kinf_grid(&p, &r, m);
        assert!((got - want).abs() < 1e-6, "case {case}: kinf {got} vs grid {want}");
    }
}

#[test]
fn unorderable_block_waits_for_surplus() {
    // Has an LP block with no prefix-feasible order from zero slack.
    let inst = random_instance(20_066);
    let prob = problem(&inst, Kind::KnownVar);
    let stats = run_policy(&prob, &PolicyConfig::default(), 10_000, 20_066, &[]).unwrap();
    assert!(stats.surplus_blocks > 0);
    assert_eq!(stats.counting_violations, 0);
    assert!(stats.slack.iter().all(|s| !s.is_negative()));
    assert_eq!(stats.counts.iter().sum::<u64>(), 10_000);
}
