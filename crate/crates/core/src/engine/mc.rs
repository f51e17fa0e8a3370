//! Seeded Monte Carlo over trajectories.
//!
//! Replication `r` of master seed `s` draws from `ChaCha8(s)` on stream `r`,
//! so any replication can be regenerated alone and results do not depend on
//! how replications are scheduled across workers. Per trajectory the draws
//! are: one uniform for the state, then two uniforms per period (disclosure,
//! private signal).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EngineKind, ExperimentConfig};
use crate::decision::Belief;
use crate::engine::lastk::{self, LastKTable};
use crate::engine::Environment;
use crate::metrics::{self, PeriodMetrics};
use crate::policy::{disclose, DisclosurePolicy};
use crate::{Action, Error, Result, Side, State};

/// Replications are reduced in fixed blocks of this size, in order.
const BLOCK: usize = 1024;

/// Upper bound on the total size of precomputed last-k tables.
const LASTK_TABLE_BUDGET: usize = 1 << 26;

pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// One agent's turn as seen by an observer of the whole process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodRecord {
    pub t: usize,
    pub nu: f64,
    pub tau: f64,
    pub cutoff: f64,
    pub q: f64,
    pub action: Action,
    /// Planner's belief before the action.
    pub pi: f64,
    pub llr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub seed: u64,
    pub replication: u64,
    pub theta: State,
    /// `π_1 = ½`.
    pub initial_pi: f64,
    pub periods: Vec<PeriodRecord>,
    /// Planner's belief after the last action.
    pub final_pi: f64,
    pub final_llr: f64,
}

/// Precomputed inputs shared by all replications.
struct Plan<'a> {
    env: &'a Environment,
    horizon: usize,
    lastk: Option<Vec<LastKTable>>,
}

impl<'a> Plan<'a> {
    fn new(env: &'a Environment, horizon: usize) -> Result<Self> {
        let lastk = match (&env.disclosure, &env.dictated) {
            (DisclosurePolicy::LastK { k }, None) => {
                let cells: usize = (1..=horizon).map(|t| 1usize << (t - 1).min(*k)).sum();
                if cells > LASTK_TABLE_BUDGET {
                    return Err(Error::config(
                        "engine.horizon",
                        format!("last-k tables for k={k}, T={horizon} need {cells} cells (limit {LASTK_TABLE_BUDGET})"),
                    ));
                }
                Some(lastk::tables(env, *k, horizon)?)
            }
            _ => None,
        };
        Ok(Plan { env, horizon, lastk })
    }
}

/// Per-period sums accumulated over replications.
#[derive(Debug, Clone)]
struct Sums {
    n: usize,
    agent: Vec<f64>,
    planner: Vec<f64>,
    presignal: Vec<f64>,
    abs_llr: Vec<f64>,
    abs_transfer: Vec<f64>,
}

impl Sums {
    fn new(horizon: usize) -> Self {
        Sums {
            n: 0,
            agent: vec![0.0; horizon],
            planner: vec![0.0; horizon],
            presignal: vec![0.0; horizon],
            abs_llr: vec![0.0; horizon],
            abs_transfer: vec![0.0; horizon],
        }
    }

    fn merge(mut self, other: &Sums) -> Self {
        self.n += other.n;
        for (a, b) in [
            (&mut self.agent, &other.agent),
            (&mut self.planner, &other.planner),
            (&mut self.presignal, &other.presignal),
            (&mut self.abs_llr, &other.abs_llr),
            (&mut self.abs_transfer, &other.abs_transfer),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self
    }
}

/// Runs one trajectory. With `record`, private beliefs are sampled by
/// inverse CDF and every period is kept; otherwise the action is decided as
/// `u ≥ F_θ(c)`, which is the same event as `F_θ⁻¹(u) ≥ c`.
fn simulate(
    plan: &Plan<'_>,
    rng: &mut ChaCha8Rng,
    theta_override: Option<State>,
    mut record: Option<&mut Vec<PeriodRecord>>,
    mut sums: Option<&mut Sums>,
) -> Result<(State, f64)> {
    let u_theta: f64 = rng.gen();
    let theta = theta_override.unwrap_or(if u_theta < 0.5 { Side::High } else { Side::Low });
    let env = plan.env;
    let mut llr = 0.0_f64;
    let mut window = 0usize;
    for t in 1..=plan.horizon {
        let u_disclose: f64 = rng.gen();
        let u_signal: f64 = rng.gen();
        let pi = Belief::from_llr(llr);
        let nu = match (&plan.lastk, env.dictated.is_some()) {
            (_, true) => pi,
            (Some(tables), false) => disclose(&env.disclosure, pi, t, Some(&tables[t - 1].lookup(window)), u_disclose)?,
            (None, false) => disclose(&env.disclosure, pi, t, None, u_disclose)?,
        };
        let law = env.agent_law(t, nu)?;
        let action = match record.as_deref_mut() {
            Some(rec) => {
                let u = u_signal.max(f64::MIN_POSITIVE);
                let q = env.model.sample_private_belief(theta, u)?;
                let action = if q >= law.cutoff.prob() { Side::High } else { Side::Low };
                rec.push(PeriodRecord {
                    t,
                    nu: nu.prob(),
                    tau: law.tau,
                    cutoff: law.cutoff.prob(),
                    q,
                    action,
                    pi: pi.prob(),
                    llr,
                });
                action
            }
            None => {
                if u_signal >= law.low_prob(theta) {
                    Side::High
                } else {
                    Side::Low
                }
            }
        };
        if let Some(s) = sums.as_deref_mut() {
            let i = t - 1;
            s.agent[i] += f64::from(u8::from(action != theta));
            s.presignal[i] += f64::from(u8::from(law.presignal != theta));
            s.planner[i] += Belief::from_llr(-llr.abs()).prob();
            s.abs_llr[i] += llr.abs();
            s.abs_transfer[i] += law.tau.abs();
        }
        if let Some(tables) = &plan.lastk {
            window = tables[t - 1].next_window(window, action);
        }
        llr += law.increment(action);
    }
    if let Some(s) = sums {
        s.n += 1;
    }
    Ok((theta, llr))
}

/// Simulates replication `replication` of `seed`, recording every period.
/// `theta` forces the state (the state uniform is still consumed).
pub fn simulate_trajectory(
    env: &Environment,
    horizon: usize,
    seed: u64,
    replication: u64,
    theta: Option<State>,
) -> Result<Trajectory> {
    let plan = Plan::new(env, horizon)?;
    let mut rng = replication_rng(seed, replication);
    let mut periods = Vec::with_capacity(horizon);
    let (theta, llr) = simulate(&plan, &mut rng, theta, Some(&mut periods), None)?;
    Ok(Trajectory {
        seed,
        replication,
        theta,
        initial_pi: 0.5,
        periods,
        final_pi: Belief::from_llr(llr).prob(),
        final_llr: llr,
    })
}

/// Replication 0 of `seed` under `config`.
pub fn mc_run(config: &ExperimentConfig, seed: u64) -> Result<Trajectory> {
    config.validate()?;
    let env = Environment::from_config(config)?;
    simulate_trajectory(&env, config.engine.horizon, seed, 0, None)
}

/// Per-period estimates from many replications.
#[derive(Debug, Clone, Serialize)]
pub struct McRun {
    pub periods: Vec<PeriodMetrics>,
    /// Binomial standard error of `p_mistake_agent`, per period.
    pub agent_se: Vec<f64>,
    pub replications: usize,
}

pub fn estimate(env: &Environment, horizon: usize, replications: usize, seed: u64) -> Result<McRun> {
    if replications == 0 {
        return Err(Error::config("engine.replications", "need at least one replication"));
    }
    let plan = Plan::new(env, horizon)?;
    let blocks = replications.div_ceil(BLOCK);
    let partials: Vec<Sums> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut sums = Sums::new(horizon);
            let end = ((b + 1) * BLOCK).min(replications);
            for r in b * BLOCK..end {
                let mut rng = replication_rng(seed, r as u64);
                simulate(&plan, &mut rng, None, None, Some(&mut sums))?;
            }
            Ok(sums)
        })
        .collect::<Result<_>>()?;
    let total = partials.iter().fold(Sums::new(horizon), |acc, s| acc.merge(s));
    let n = total.n as f64;
    let mut periods: Vec<PeriodMetrics> = (0..horizon)
        .map(|i| PeriodMetrics {
            t: i + 1,
            p_mistake_agent: total.agent[i] / n,
            p_mistake_planner: total.planner[i] / n,
            p_mistake_presignal: total.presignal[i] / n,
            e_abs_llr: total.abs_llr[i] / n,
            e_abs_transfer: total.abs_transfer[i] / n,
            cum_mistakes: 0.0,
            cum_transfers: 0.0,
        })
        .collect();
    metrics::accumulate(&mut periods);
    let agent_se = periods
        .iter()
        .map(|p| (p.p_mistake_agent * (1.0 - p.p_mistake_agent) / n).sqrt())
        .collect();
    Ok(McRun {
        periods,
        agent_se,
        replications,
    })
}

pub fn mc_estimate(config: &ExperimentConfig) -> Result<McRun> {
    config.validate()?;
    if config.engine.kind != EngineKind::Mc {
        return Err(Error::config("engine.kind", "mc_estimate needs engine.kind = \"mc\""));
    }
    let env = Environment::from_config(config)?;
    estimate(&env, config.engine.horizon, config.engine.replications, config.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_horizon() {
        let env = Environment::full_disclosure(1.0).unwrap();
        let tr = simulate_trajectory(&env, 0, 7, 0, None).unwrap();
        assert!(tr.periods.is_empty());
        assert_eq!(tr.initial_pi, 0.5);
        assert_eq!(tr.final_pi, 0.5);
    }

    #[test]
    fn streams_differ_by_replication() {
        let a: f64 = replication_rng(1, 0).gen();
        let b: f64 = replication_rng(1, 1).gen();
        let c: f64 = replication_rng(1, 0).gen();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn deterministic_replay() {
        let env = Environment::full_disclosure(0.8).unwrap();
        let a = simulate_trajectory(&env, 50, 99, 3, None).unwrap();
        let b = simulate_trajectory(&env, 50, 99, 3, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fast_path_matches_recorded_path() {
        // the estimator's u ≥ F_θ(c) rule must reproduce the recorded actions
        let env = Environment::full_disclosure(1.3).unwrap();
        let plan = Plan::new(&env, 40).unwrap();
        for r in 0..50u64 {
            let tr = simulate_trajectory(&env, 40, 5, r, None).unwrap();
            let mut sums = Sums::new(40);
            let mut rng = replication_rng(5, r);
            let (theta, llr) = simulate(&plan, &mut rng, None, None, Some(&mut sums)).unwrap();
            assert_eq!(theta, tr.theta);
            assert!((llr - tr.final_llr).abs() < 1e-9);
            for p in &tr.periods {
                let wrong = f64::from(u8::from(p.action != theta));
                assert_eq!(sums.agent[p.t - 1], wrong);
            }
        }
    }

    #[test]
    fn estimate_is_worker_independent() {
        let env = Environment::full_disclosure(1.0).unwrap();
        let a = estimate(&env, 20, 3000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate(&env, 20, 3000, 42).unwrap());
        for (x, y) in a.periods.iter().zip(&b.periods) {
            assert_eq!(x, y);
        }
    }
}
