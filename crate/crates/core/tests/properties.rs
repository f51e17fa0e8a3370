//! Property tests over random models, beliefs and policies.

use herdlab::config::ExperimentConfig;
use herdlab::decision::Belief;
use herdlab::engine::exact::{evolve, LlrGrid};
use herdlab::engine::Environment;
use herdlab::policy::{disclose, DisclosurePolicy, EpsilonSchedule, TransferScheme};
use herdlab::signals::SignalModel;
use herdlab::Side;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn conditional_cdfs(alpha in 0.05..5.0f64, q in 0.0..=1.0f64) {
        let m = SignalModel::power(alpha).unwrap();
        let fh = m.cdf_conditional(Side::High, q).unwrap();
        let fl = m.cdf_conditional(Side::Low, q).unwrap();
        prop_assert!((0.0..=1.0).contains(&fh) && (0.0..=1.0).contains(&fl));
        prop_assert!(fh <= fl + 1e-15);
        prop_assert!(((fh + fl) / 2.0 - m.cdf(q)).abs() <= 1e-12);
        let mirrored = m.cdf_conditional(Side::Low, 1.0 - q).unwrap();
        prop_assert!((fh - (1.0 - mirrored)).abs() <= 1e-12);
    }

    #[test]
    fn cdfs_monotone(alpha in 0.05..5.0f64, a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let m = SignalModel::power(alpha).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for s in [Side::High, Side::Low] {
            prop_assert!(m.cdf_conditional(s, lo).unwrap() <= m.cdf_conditional(s, hi).unwrap());
        }
        prop_assert!(m.cdf(lo) <= m.cdf(hi));
    }

    #[test]
    fn sampler_round_trip(alpha in 0.1..4.0f64, q0 in 0.001..0.999f64, high in any::<bool>()) {
        let m = SignalModel::power(alpha).unwrap();
        let s = if high { Side::High } else { Side::Low };
        let u = m.cdf_conditional(s, q0).unwrap();
        prop_assume!(u > 0.0 && u < 1.0);
        let q = m.sample_private_belief(s, u).unwrap();
        prop_assert!((q - q0).abs() < 1e-9, "{} vs {}", q, q0);
    }

    #[test]
    fn epsilon_f_bounds(alpha in 0.01..50.0f64) {
        let m = SignalModel::power(alpha).unwrap();
        let e = m.epsilon_f();
        prop_assert!(e > 0.0 && e <= 0.5);
        let fl = m.cdf_conditional(Side::Low, 0.5).unwrap();
        prop_assert!((e - (1.0 - fl)).abs() < 1e-12);
    }

    #[test]
    fn binary_split_preserves_mean(lo in 0.01..0.49f64, hi in 0.51..0.99f64, pi in 0.01..0.99f64) {
        let p = DisclosurePolicy::BinarySplit { lo, hi };
        let b = p.branches(Belief::from_prob(pi), 1).unwrap();
        let mean: f64 = b.iter().map(|(w, nu)| w * nu.prob()).sum();
        let total: f64 = b.iter().map(|(w, _)| w).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((mean - pi).abs() < 1e-12);
    }

    #[test]
    fn disclose_returns_a_branch(eps in 0.0..=1.0f64, pi in 0.01..0.99f64, u in 0.0..1.0f64) {
        let p = DisclosurePolicy::Stochastic { epsilon: EpsilonSchedule::Constant { value: eps } };
        let nu = disclose(&p, Belief::from_prob(pi), 3, None, u).unwrap().prob();
        prop_assert!(nu == 0.5 || (nu - pi).abs() < 1e-12);
        prop_assert_eq!(nu == 0.5 && (pi - 0.5).abs() > 1e-12, u >= eps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_engine_invariants(
        alpha in 0.5..2.0f64,
        eps in 0.5..=1.0f64,
        tau in 0.0..0.6f64,
    ) {
        let model = SignalModel::power(alpha).unwrap();
        let env = Environment::new(
            model,
            DisclosurePolicy::Stochastic { epsilon: EpsilonSchedule::Constant { value: eps } },
            TransferScheme::ConstantContrarian { tau },
            None,
        ).unwrap();
        let run = evolve(&env, LlrGrid::new(1024, 80.0).unwrap(), 40).unwrap();
        prop_assert!(run.diagnostics.max_mass_error < 1e-12);
        for (t, m) in run.mean_belief.iter().enumerate() {
            prop_assert!((m - 0.5).abs() < 1e-10, "t={} E[pi]={}", t + 1, m);
        }
        for (d, x) in run.realized_increments().iter().zip(&run.delta) {
            prop_assert!(*d >= -1e-10);
            prop_assert!((d - x).abs() < 1e-8);
        }
        for p in &run.periods {
            prop_assert!(p.p_mistake_agent >= 0.0 && p.p_mistake_agent <= 1.0);
            prop_assert!(p.e_abs_transfer <= tau + 1e-15);
        }
    }

    #[test]
    fn toml_override_round_trip(alpha in 0.1..3.0f64, horizon in 1usize..500) {
        let cfg = ExperimentConfig::exact(1.0, 10)
            .with_override("distribution.alpha", &alpha.to_string()).unwrap()
            .with_override("engine.horizon", &horizon.to_string()).unwrap();
        prop_assert_eq!(cfg.distribution.alpha, alpha);
        prop_assert_eq!(cfg.engine.horizon, horizon);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
