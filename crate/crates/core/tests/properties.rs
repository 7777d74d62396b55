use contest_entry::design::{hold_budget, DesignConfig};
use contest_entry::equilibrium::{classify, solve_participation, support_endpoint};
use contest_entry::metrics::{binomial_tails, expected_budget, rank_probability};
use contest_entry::{CostModelF64, EquilibriumF64, Regime, RewardVectorF64, SolverConfig};
use proptest::prelude::*;

fn cost_strategy() -> impl Strategy<Value = CostModelF64> {
    prop_oneof![
        (0.01f64..1.0, 0.2f64..3.0).prop_map(|(c0, s)| CostModelF64::linear(c0, s).unwrap()),
        (0.2f64..3.0).prop_map(|k| CostModelF64::exponential(k).unwrap()),
        (0.01f64..1.0, 0.2f64..3.0, 0.0f64..3.0).prop_map(|(c0, a, b)| CostModelF64::quadratic_plus(c0, a, b).unwrap()),
    ]
}

/// Monotone schedule whose top prize exceeds the entry cost.
fn instance() -> impl Strategy<Value = (RewardVectorF64, CostModelF64)> {
    (cost_strategy(), 2usize..9).prop_flat_map(|(c, n)| {
        let c0 = c.entry_cost();
        (Just(c), 1.1f64..4.0, prop::collection::vec(0.0f64..1.0, n - 1)).prop_map(move |(c, top, mut rest)| {
            rest.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let a1 = top * c0.max(0.1);
            let mut a = vec![a1];
            // lower ranks spread over [0, 0.95 a1]; a few land above c0
            a.extend(rest.iter().map(|u| 0.95 * a1 * u));
            (RewardVectorF64::validate(a).unwrap(), c)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cost_inverse_round_trips(c in cost_strategy(), q in 0.0f64..5.0) {
        let v = c.eval(q).unwrap();
        let back = c.inverse(v).unwrap();
        prop_assert!((back - q).abs() <= 1e-9 * (1.0 + q));
    }

    #[test]
    fn cost_is_increasing(c in cost_strategy(), q in 0.0f64..5.0, dq in 1e-6f64..1.0) {
        prop_assert!(c.eval(q + dq).unwrap() > c.eval(q).unwrap());
        prop_assert!(c.derivative(q).unwrap() > 0.0);
    }

    #[test]
    fn cost_text_round_trips(c in cost_strategy()) {
        let back: CostModelF64 = c.to_string().parse().unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn regime_law((a, c) in instance()) {
        let p = solve_participation(&a, &c, &SolverConfig::default()).unwrap();
        prop_assert_eq!(p == 1.0, a.bottom() >= c.entry_cost());
        prop_assert_eq!(classify(&a, &c) == Regime::Full, a.bottom() >= c.entry_cost());
        let qbar = support_endpoint(&a, &c);
        let shift = (a.bottom() - c.entry_cost()).max(0.0);
        prop_assert!((c.eval(qbar).unwrap() - (a.top() - shift)).abs() <= 1e-8);
    }

    #[test]
    fn payoff_is_flat_on_support((a, c) in instance(), t in 0.0f64..=1.0) {
        let sol = EquilibriumF64::solve(&a, &c, &SolverConfig::default()).unwrap();
        let q = t * sol.qbar();
        prop_assert!(sol.payoff_residual(q).unwrap().abs() <= 1e-8);
        let beyond = sol.qbar() * (1.0 + t) + 1e-3;
        prop_assert!(sol.payoff_residual(beyond).unwrap() < 0.0);
    }

    #[test]
    fn cdf_is_a_distribution((a, c) in instance(), t in 0.0f64..1.0, dt in 0.0f64..1.0) {
        let sol = EquilibriumF64::solve(&a, &c, &SolverConfig::default()).unwrap();
        let q0 = t * sol.qbar();
        let q1 = (t + (1.0 - t) * dt) * sol.qbar();
        let (g0, g1) = (sol.cdf(q0).unwrap(), sol.cdf(q1).unwrap());
        prop_assert!((0.0..=1.0).contains(&g0) && g0 <= g1 + 1e-15);
        prop_assert!(sol.cdf(0.0).unwrap().abs() <= 1e-12);
        prop_assert!((sol.cdf(sol.qbar()).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf((a, c) in instance(), u in 0.0f64..=1.0) {
        let sol = EquilibriumF64::solve(&a, &c, &SolverConfig::default()).unwrap();
        let q = sol.quantile(u).unwrap();
        prop_assert!((sol.cdf(q).unwrap() - u).abs() <= 1e-8);
    }

    #[test]
    fn rank_probabilities_sum_to_entry_rate((a, c) in instance()) {
        let sol = EquilibriumF64::solve(&a, &c, &SolverConfig::default()).unwrap();
        let total: f64 = (1..=sol.n()).map(|k| rank_probability(&sol, k).unwrap()).sum();
        prop_assert!((total - sol.p()).abs() <= 1e-12);
        let b = expected_budget(&sol);
        prop_assert!(b <= a.total() + 1e-12 && b >= 0.0);
    }

    #[test]
    fn tails_are_decreasing_in_rank(n in 1usize..40, p in 0.0f64..=1.0) {
        let t = binomial_tails(n, p);
        prop_assert!(t.windows(2).all(|w| w[0] >= w[1] - 1e-15));
        prop_assert!(t.iter().all(|&x| (-1e-15..=1.0 + 1e-15).contains(&x)));
    }

    #[test]
    fn hold_budget_identity((a, c) in instance(), s in 2usize..9) {
        let s = s.min(a.n());
        let same = hold_budget(&a, &c, s, a.reward(s), &DesignConfig::default()).unwrap();
        prop_assert_eq!(same, a);
    }
}

#[test]
fn single_precision_tracks_double() {
    let a32 = contest_entry::RewardVectorF32::validate(vec![1.0, 0.4, 0.1]).unwrap();
    let c32: contest_entry::CostModelF32 = "linear:c0=0.25,slope=1".parse().unwrap();
    let a64 = RewardVectorF64::validate(vec![1.0, 0.4, 0.1]).unwrap();
    let c64: CostModelF64 = "linear:c0=0.25,slope=1".parse().unwrap();
    let s32 = contest_entry::EquilibriumF32::solve(&a32, &c32, &SolverConfig::default()).unwrap();
    let s64 = EquilibriumF64::solve(&a64, &c64, &SolverConfig::default()).unwrap();
    assert!((s32.p() as f64 - s64.p()).abs() < 1e-5);
    for j in 0..=10 {
        let q = s64.qbar() * j as f64 / 10.0;
        assert!((s32.cdf((q as f32).min(s32.qbar())).unwrap() as f64 - s64.cdf(q).unwrap()).abs() < 1e-4);
    }
}
