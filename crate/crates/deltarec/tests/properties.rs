//! Property tests over random models: quantile brackets, the survival
//! recurrence, delta-rate route agreement, compensator inversion and
//! inverse-CDF sampling.

use proptest::prelude::*;

use deltarec::hazard::HazardTable;
use deltarec::{DiscreteModel, RngState, Sampler};

fn arb_model() -> impl Strategy<Value = DiscreteModel> {
    prop_oneof![
        (0.05f64..0.95).prop_map(|p| DiscreteModel::geometric(p).unwrap()),
        (1.1f64..4.0, 0.1f64..0.9)
            .prop_map(|(a, p)| DiscreteModel::negative_binomial(a, p).unwrap()),
        (1.2f64..4.0).prop_map(|a| DiscreteModel::zeta(a).unwrap()),
        (0.2f64..4.0).prop_map(|l| DiscreteModel::poisson(l).unwrap()),
        (
            proptest::collection::vec(0.01f64..0.2, 1..6),
            0.05f64..0.95
        )
            .prop_map(|(probs, tail)| DiscreteModel::tabulated_pmf(probs, tail).unwrap()),
        (
            proptest::collection::vec(0.05f64..0.9, 1..6),
            0.05f64..0.95
        )
            .prop_map(|(rates, tail)| DiscreteModel::tabulated_rates(rates, tail).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quantile_bracket(model in arb_model(), log_t in 0f64..9.0) {
        let t = 10f64.powf(log_t).max(1.0);
        let m = model.quantile_m(t);
        prop_assert!(model.survival(m) < 1.0 / t);
        prop_assert!(model.survival(m - 1) >= 1.0 / t);
    }

    #[test]
    fn survival_recurrence(model in arb_model(), k in 0i64..300) {
        let lhs = model.survival(k);
        let rhs = model.survival(k - 1) * (1.0 - model.failure_rate(k));
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn delta_rate_routes_agree(model in arb_model(), delta in prop_oneof![-3i32..0, 1i32..4]) {
        let table = HazardTable::build(&model, delta).unwrap();
        prop_assert!(table.eq_cross_check() <= 1e-12);
        prop_assert!(table.tail_bound() <= 1e-12);
    }

    #[test]
    fn theta_inverse_bracket(
        model in arb_model(),
        delta in prop_oneof![-3i32..0, 1i32..4],
        frac in 0.0f64..1.0,
    ) {
        let table = HazardTable::build(&model, delta).unwrap();
        let lo = table.theta(0);
        let hi = table.theta(table.depth());
        let t = lo + frac * (hi - lo);
        if t < hi {
            let k = table.theta_inverse(t).unwrap();
            prop_assert!(table.theta(k) <= t);
            prop_assert!(t < table.theta(k + 1));
        }
    }

    #[test]
    fn sampler_matches_linear_inversion(model in arb_model(), seed in any::<u64>()) {
        let sampler = Sampler::new(&model);
        let mut rng_fast = RngState::new(seed);
        let mut rng_slow = RngState::new(seed);
        for _ in 0..64 {
            let fast = sampler.draw(&mut rng_fast);
            // Reference method: linear scan of the survival staircase.
            let v = 1.0 - rng_slow.next_f64();
            let mut k = 0i64;
            while model.survival(k) >= v {
                k += 1;
            }
            prop_assert_eq!(fast, k);
        }
    }
}
