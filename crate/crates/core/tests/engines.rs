//! Cross-checks between the Monte Carlo engine, the exact grid engine and
//! the last-k dynamic program, plus reproducibility of written results.

use std::fs;
use std::path::Path;

use herdlab::config::ExperimentConfig;
use herdlab::engine::exact::exact_evolve;
use herdlab::engine::mc::{estimate, mc_estimate, mc_run};
use herdlab::engine::Environment;
use herdlab::policy::{CutoffTail, DictatedCutoffSchedule, DisclosurePolicy, EpsilonSchedule, TransferScheme};
use herdlab::runner;
use herdlab::signals::SignalModel;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn golden_trajectory() {
    let cfg = ExperimentConfig::load(&fixture("golden_mc.toml")).unwrap();
    let traj = mc_run(&cfg, cfg.seed).unwrap();
    let expected: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixture("golden_mc_trajectory.json")).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(&traj).unwrap(), expected);
}

fn assert_mc_matches_exact(cfg: ExperimentConfig, reps: usize) {
    let exact = exact_evolve(&cfg).unwrap();
    let env = Environment::from_config(&cfg).unwrap();
    let mc = estimate(&env, cfg.engine.horizon, reps, 99).unwrap();
    for ((e, m), se) in exact.periods.iter().zip(&mc.periods).zip(&mc.agent_se) {
        // grid error is O(1e-5) at these horizons; allow it on top of 4 SE
        let z = (e.p_mistake_agent - m.p_mistake_agent).abs();
        assert!(z <= 4.0 * se + 1e-4, "t={} exact {} mc {} se {}", e.t, e.p_mistake_agent, m.p_mistake_agent, se);
        assert!((e.e_abs_transfer - m.e_abs_transfer).abs() <= 0.02, "t={}", e.t);
    }
}

#[test]
fn mc_agrees_with_exact_full() {
    assert_mc_matches_exact(ExperimentConfig::exact(1.0, 12), 100_000);
}

#[test]
fn mc_agrees_with_exact_policies() {
    let base = ExperimentConfig::exact(1.5, 10);
    assert_mc_matches_exact(
        base.clone()
            .with_disclosure(DisclosurePolicy::Stochastic {
                epsilon: EpsilonSchedule::Constant { value: 0.6 },
            })
            .with_transfers(TransferScheme::ConstantContrarian { tau: 0.2 }),
        50_000,
    );
    assert_mc_matches_exact(
        base.clone().with_disclosure(DisclosurePolicy::BinarySplit { lo: 0.3, hi: 0.8 }),
        50_000,
    );
    assert_mc_matches_exact(base.with_disclosure(DisclosurePolicy::LastK { k: 3 }), 50_000);
}

#[test]
fn mc_estimate_uses_config_seed() {
    let mut cfg = ExperimentConfig::mc(1.0, 5, 2000, 5);
    let a = mc_estimate(&cfg).unwrap();
    let b = mc_estimate(&cfg).unwrap();
    assert_eq!(a.periods, b.periods);
    cfg.seed = 6;
    let c = mc_estimate(&cfg).unwrap();
    assert_ne!(a.periods, c.periods);
}

#[test]
fn dictated_half_is_no_disclosure() {
    let mut dictated = ExperimentConfig::exact(1.0, 20);
    dictated.engine.llr_clamp = 80.0;
    dictated.dictated_cutoffs = Some(DictatedCutoffSchedule {
        prefix: vec![],
        tail: CutoffTail::Constant { value: 0.5 },
    });
    let mut none = ExperimentConfig::exact(1.0, 20).with_disclosure(DisclosurePolicy::NoDisclosure);
    none.engine.llr_clamp = 80.0;
    let a = exact_evolve(&dictated).unwrap();
    let b = exact_evolve(&none).unwrap();
    for (x, y) in a.periods.iter().zip(&b.periods) {
        assert!((x.p_mistake_agent - 0.25).abs() < 1e-12);
        assert!((x.e_abs_llr - y.e_abs_llr).abs() < 1e-12);
        assert!((x.p_mistake_planner - y.p_mistake_planner).abs() < 1e-12);
    }
}

#[test]
fn last_k_beyond_horizon_is_full_disclosure() {
    // with k ≥ t - 1 the window is the whole history
    let full = exact_evolve(&ExperimentConfig::exact(1.0, 8)).unwrap();
    let lastk = exact_evolve(&ExperimentConfig::exact(1.0, 8).with_disclosure(DisclosurePolicy::LastK { k: 8 })).unwrap();
    for (a, b) in full.periods.iter().zip(&lastk.periods) {
        assert!((a.p_mistake_agent - b.p_mistake_agent).abs() < 1e-4, "t={}", a.t);
    }
}

#[test]
fn no_disclosure_signal_gain_bound() {
    // ν = ½ every period: agent mistake ¼ ≥ ε_F · presignal mistake ½
    let mut cfg = ExperimentConfig::exact(1.0, 20).with_disclosure(DisclosurePolicy::NoDisclosure);
    cfg.engine.llr_clamp = 80.0;
    let eps = SignalModel::power(1.0).unwrap().epsilon_f();
    for p in exact_evolve(&cfg).unwrap().periods {
        assert!((p.p_mistake_presignal - 0.5).abs() < 1e-12);
        assert!((p.p_mistake_agent - 0.25).abs() < 1e-12);
        assert!(p.p_mistake_agent >= eps * p.p_mistake_presignal);
    }
}

#[test]
fn csv_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [ExperimentConfig::exact(1.0, 300), ExperimentConfig::mc(1.0, 50, 5000, 17)] {
        runner::run(&cfg, &dir.path().join("a")).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        single.install(|| runner::run(&cfg, &dir.path().join("b"))).unwrap();
        let a = fs::read(dir.path().join("a/metrics.csv")).unwrap();
        let b = fs::read(dir.path().join("b/metrics.csv")).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn invalid_config_names_key() {
    let text = fs::read_to_string(fixture("golden_mc.toml")).unwrap().replace("replications = 1", "replications = 0");
    match ExperimentConfig::from_toml_str(&text) {
        Err(herdlab::Error::Config { key, .. }) => assert_eq!(key, "engine.replications"),
        other => panic!("{other:?}"),
    }
    let err = ExperimentConfig::load(Path::new("/definitely/not/here.toml")).unwrap_err();
    assert!(err.to_string().contains("/definitely/not/here.toml"));
}
