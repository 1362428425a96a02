use proptest::prelude::*;
use tradepost::format::{parse_economy, to_toml};
use tradepost::scenarios::{self, seeded_random_independent};
use tradepost::{
    aggregates, allocate, best_response, deviation_check, finite_difference_gradient, grid_oracle, kkt_residual,
    payoff, payoff_gradient, solve_perturbed, ConcernMatrix, Economy, OfferProfile, Side, SolverConfig,
};

fn profile_from(economy: &Economy, fractions: &[f64]) -> OfferProfile {
    OfferProfile::new(
        economy
            .agents()
            .iter()
            .zip(fractions)
            .map(|(a, f)| a.endowment * f)
            .collect(),
    )
}

fn named_economy(k: usize) -> Economy {
    let names = scenarios::BUILTIN_NAMES;
    scenarios::builtin(names[k % names.len()]).unwrap()
}

fn economies() -> impl Strategy<Value = Economy> {
    prop_oneof![
        any::<u64>().prop_map(seeded_random_independent),
        (0usize..16).prop_map(named_economy),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unperturbed_allocation_conserves_goods(
        economy in economies(),
        fractions in prop::collection::vec(0.0f64..=1.0, 4),
    ) {
        let profile = profile_from(&economy, &fractions);
        let alloc = allocate(&economy, &profile, 0.0).unwrap();
        let (mut x, mut y) = (0.0, 0.0);
        for b in &alloc.bundles {
            prop_assert!(b.x >= 0.0 && b.y >= 0.0);
            x += b.x;
            y += b.y;
        }
        let total = |s: Side| economy.side(s).iter().map(|&i| economy.agent(i).endowment).sum::<f64>();
        prop_assert!((x - total(Side::One)).abs() <= 1e-12 * (1.0 + x));
        prop_assert!((y - total(Side::Two)).abs() <= 1e-12 * (1.0 + y));
    }

    #[test]
    fn perturbed_bundles_stay_nonnegative(
        economy in economies(),
        fractions in prop::collection::vec(0.0f64..=1.0, 4),
        eps in 1e-6f64..1.0,
    ) {
        let alloc = allocate(&economy, &profile_from(&economy, &fractions), eps).unwrap();
        prop_assert!(alloc.traded);
        for b in &alloc.bundles {
            prop_assert!(b.x >= 0.0 && b.y >= 0.0);
        }
    }

    #[test]
    fn price_is_invariant_to_scaling_offers(
        economy in economies(),
        fractions in prop::collection::vec(0.05f64..=1.0, 4),
        t in 0.1f64..1.0,
    ) {
        let base = profile_from(&economy, &fractions);
        let scaled = OfferProfile::new(base.offers().iter().map(|o| o * t).collect());
        let p = aggregates(&economy, &base, 0.0).price;
        let q = aggregates(&economy, &scaled, 0.0).price;
        prop_assert!((p - q).abs() <= 1e-12 * p);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences(
        seed in any::<u64>(),
        fractions in prop::collection::vec(0.05f64..=0.95, 4),
        agent in 0usize..4,
        eps in prop_oneof![Just(0.0), 1e-4f64..0.1],
    ) {
        let economy = seeded_random_independent(seed);
        let profile = profile_from(&economy, &fractions);
        let g = payoff_gradient(&economy, &profile, eps, agent).unwrap();
        prop_assert!(g.is_finite());
        let fd = finite_difference_gradient(&economy, &profile, eps, agent).unwrap();
        prop_assert!((g.value - fd).abs() <= 1e-5 * (1.0 + g.value.abs()), "{} vs {}", g.value, fd);
    }

    #[test]
    fn best_response_is_feasible_and_no_worse_than_endpoints(
        economy in economies(),
        fractions in prop::collection::vec(0.0f64..=1.0, 4),
        agent in 0usize..4,
        eps in 1e-3f64..0.5,
    ) {
        let config = SolverConfig::default();
        let profile = profile_from(&economy, &fractions);
        let br = best_response(&economy, &profile, eps, agent, &config).unwrap();
        let upper = economy.agent(agent).endowment;
        prop_assert!((0.0..=upper).contains(&br.offer));
        let mut offers = profile.offers().to_vec();
        for probe in [0.0, upper, profile.offers()[agent]] {
            offers[agent] = probe;
            let v = payoff(&economy, &OfferProfile::new(offers.clone()), eps, agent).unwrap();
            prop_assert!(br.payoff >= v - 1e-12 * (1.0 + v.abs()), "{} < {} at {}", br.payoff, v, probe);
        }
    }

    #[test]
    fn toml_round_trip(seed in any::<u64>(), weights in prop::collection::vec(-1.0f64..1.0, 3)) {
        let base = seeded_random_independent(seed);
        let concerns = ConcernMatrix::from_entries(
            4,
            &[(0, 1, weights[0]), (2, 0, weights[1]), (3, 2, weights[2])],
        )
        .unwrap();
        let economy = base.with_concerns(concerns).unwrap();
        prop_assert_eq!(parse_economy(&to_toml(&economy)).unwrap(), economy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn converged_perturbed_solutions_pass_deviation_and_kkt_checks(
        seed in any::<u64>(),
        eps in 1e-3f64..0.1,
    ) {
        let economy = seeded_random_independent(seed);
        let config = SolverConfig::default();
        let start = OfferProfile::fraction_of_endowment(&economy, 0.5);
        let c = solve_perturbed(&economy, eps, &start, &config).unwrap();
        prop_assume!(c.converged);
        let gain = deviation_check(&economy, &c, &config).unwrap();
        prop_assert!(gain <= 10.0 * config.fixed_point_tolerance, "gain {gain}");
        let kkt = kkt_residual(&economy, &c).unwrap();
        prop_assert!(kkt.max_residual <= 1e-5, "kkt {}", kkt.max_residual);
    }

    #[test]
    fn zero_profile_always_survives_the_grid(economy in economies()) {
        let survivors = grid_oracle(&economy, 0.25 * economy.agent(0).endowment, 0.0).unwrap();
        prop_assert!(survivors.iter().any(|c| c.profile.offers().iter().all(|&o| o == 0.0)));
    }
}
