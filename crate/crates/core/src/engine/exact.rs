//! Exact evolution of the planner's belief law on a uniform LLR grid.
//!
//! The planner's LLR `ℓ_t` lives on the nodes `x_i = (i - B/2)·h`,
//! `h = 2L/B`, `i = 0..=B`. Node `B/2` sits exactly at `ℓ = 0`. Each period,
//! the mass at node `x` under state `θ` moves to `x + U^ℓ` with probability
//! `F_θ(c)` and to `x + U^h` otherwise; a destination between two nodes is
//! split linearly between them, which preserves mass and mean. Because `0`
//! is a node, the split also preserves `E|ℓ|`. Destinations beyond `±L` are
//! absorbed into the edge node and counted as leakage.

use serde::Serialize;

use crate::config::{EngineKind, ExperimentConfig};
use crate::decision::{sigmoid, Belief};
use crate::engine::{lastk, AgentLaw, Environment};
use crate::metrics::{self, PeriodMetrics};
use crate::policy::{Branches, DisclosurePolicy};
use crate::{Error, Result, Side, State};

/// Cumulative leakage past the clamp that aborts an exact run.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrGrid {
    bins: usize,
    clamp: f64,
    step: f64,
}

/// Where a destination LLR lands on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landing {
    pub lo: usize,
    /// Share of the mass sent to `lo + 1`.
    pub frac: f64,
    pub leaked: bool,
}

impl LlrGrid {
    pub fn new(bins: usize, clamp: f64) -> Result<Self> {
        if bins < 2 || bins % 2 != 0 {
            return Err(Error::config("engine.grid_bins", format!("need an even bin count, got {bins}")));
        }
        if !(clamp.is_finite() && clamp > 0.0) {
            return Err(Error::config("engine.llr_clamp", format!("need a positive clamp, got {clamp}")));
        }
        Ok(LlrGrid {
            bins,
            clamp,
            step: 2.0 * clamp / bins as f64,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn clamp(&self) -> f64 {
        self.clamp
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of nodes, `B + 1`.
    pub fn len(&self) -> usize {
        self.bins + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn center(&self) -> usize {
        self.bins / 2
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.step
    }

    pub fn locate(&self, y: f64) -> Landing {
        let z = y / self.step + self.center() as f64;
        if z <= 0.0 {
            Landing {
                lo: 0,
                frac: 0.0,
                leaked: z < 0.0,
            }
        } else if z >= self.bins as f64 {
            Landing {
                lo: self.bins - 1,
                frac: 1.0,
                leaked: z > self.bins as f64,
            }
        } else {
            let lo = z.floor();
            Landing {
                lo: lo as usize,
                frac: z - lo,
                leaked: false,
            }
        }
    }
}

/// Discretized laws of the planner's LLR under each state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalBeliefMeasure {
    grid: LlrGrid,
    mass_high: Vec<f64>,
    mass_low: Vec<f64>,
}

impl ConditionalBeliefMeasure {
    /// All mass at `ℓ = 0` under both states.
    pub fn new(grid: LlrGrid) -> Self {
        let mut mass_high = vec![0.0; grid.len()];
        let mut mass_low = vec![0.0; grid.len()];
        mass_high[grid.center()] = 1.0;
        mass_low[grid.center()] = 1.0;
        ConditionalBeliefMeasure {
            grid,
            mass_high,
            mass_low,
        }
    }

    pub fn from_masses(grid: LlrGrid, mass_high: Vec<f64>, mass_low: Vec<f64>) -> Result<Self> {
        if mass_high.len() != grid.len() || mass_low.len() != grid.len() {
            return Err(Error::EngineContract(format!(
                "measure needs {} nodes per state",
                grid.len()
            )));
        }
        Ok(ConditionalBeliefMeasure {
            grid,
            mass_high,
            mass_low,
        })
    }

    pub fn grid(&self) -> &LlrGrid {
        &self.grid
    }

    pub fn mass(&self, state: State) -> &[f64] {
        match state {
            Side::High => &self.mass_high,
            Side::Low => &self.mass_low,
        }
    }

    pub fn total(&self, state: State) -> f64 {
        self.mass(state).iter().sum()
    }

    /// Nodes carrying mass under either state, with `(x, m_h, m_ℓ)`.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        self.mass_high
            .iter()
            .zip(&self.mass_low)
            .enumerate()
            .filter(|(_, (h, l))| **h != 0.0 || **l != 0.0)
            .map(|(i, (h, l))| (i, self.grid.node(i), *h, *l))
    }

    /// Unconditional `E[π]` under the uniform prior.
    pub fn mean_belief(&self) -> f64 {
        self.occupied()
            .map(|(_, x, h, l)| 0.5 * (h + l) * sigmoid(x))
            .sum()
    }

    /// Unconditional `E|ℓ|`.
    pub fn e_abs_llr(&self) -> f64 {
        self.occupied().map(|(_, x, h, l)| 0.5 * (h + l) * x.abs()).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ExactDiagnostics {
    /// Cumulative mass absorbed at the clamp.
    pub leaked: f64,
    /// `(node, branch, period)` evaluations whose cutoff was floored.
    pub floored: u64,
    /// Largest `|Σ mass - 1|` over states and periods.
    pub max_mass_error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Transition {
    weight: f64,
    law: AgentLaw,
    down: Landing,
    up: Landing,
}

#[derive(Debug, Clone, Copy)]
struct NodeKernel {
    items: [Option<Transition>; 2],
}

/// The social-belief law the exact engine integrates over at a node.
pub(crate) fn node_branches(env: &Environment, pi: Belief, t: usize) -> Result<Branches> {
    if env.dictated.is_some() {
        return Ok(Branches::single(pi));
    }
    env.disclosure.branches(pi, t)
}

/// Stepper for the grid measure.
pub struct ExactEngine<'a> {
    env: &'a Environment,
    measure: ConditionalBeliefMeasure,
    next_high: Vec<f64>,
    next_low: Vec<f64>,
    cache: Option<Vec<Option<NodeKernel>>>,
    t: usize,
    diagnostics: ExactDiagnostics,
}

impl<'a> ExactEngine<'a> {
    pub fn new(env: &'a Environment, grid: LlrGrid) -> Result<Self> {
        if env.dictated.is_none() && matches!(env.disclosure, DisclosurePolicy::LastK { .. }) {
            return Err(Error::EngineContract(
                "last-k disclosure runs through the last-k DP, not the belief grid".into(),
            ));
        }
        let cache = env.is_stationary().then(|| vec![None; grid.len()]);
        Ok(ExactEngine {
            env,
            measure: ConditionalBeliefMeasure::new(grid),
            next_high: vec![0.0; grid.len()],
            next_low: vec![0.0; grid.len()],
            cache,
            t: 1,
            diagnostics: ExactDiagnostics::default(),
        })
    }

    /// The measure at the current period (before agent `t` acts).
    pub fn measure(&self) -> &ConditionalBeliefMeasure {
        &self.measure
    }

    pub fn period(&self) -> usize {
        self.t
    }

    pub fn diagnostics(&self) -> ExactDiagnostics {
        self.diagnostics
    }

    fn kernel(&self, i: usize) -> Result<NodeKernel> {
        let grid = self.measure.grid;
        let x = grid.node(i);
        let branches = node_branches(self.env, Belief::from_llr(x), self.t)?;
        let mut items = [None; 2];
        for (slot, (weight, nu)) in items.iter_mut().zip(branches.iter()) {
            let law = self.env.agent_law(self.t, nu)?;
            *slot = Some(Transition {
                weight,
                law,
                down: grid.locate(x + law.down),
                up: grid.locate(x + law.up),
            });
        }
        Ok(NodeKernel { items })
    }

    /// Advances the measure by one period.
    pub fn step(&mut self) -> Result<()> {
        self.next_high.iter_mut().for_each(|m| *m = 0.0);
        self.next_low.iter_mut().for_each(|m| *m = 0.0);
        let mut leaked = 0.0;
        for i in 0..self.measure.grid.len() {
            let (mh, ml) = (self.measure.mass_high[i], self.measure.mass_low[i]);
            if mh == 0.0 && ml == 0.0 {
                continue;
            }
            let kernel = match self.cache.as_ref().and_then(|c| c[i]) {
                Some(k) => k,
                None => {
                    let k = self.kernel(i)?;
                    if let Some(cache) = self.cache.as_mut() {
                        cache[i] = Some(k);
                    }
                    k
                }
            };
            for tr in kernel.items.iter().flatten() {
                if tr.law.floored {
                    self.diagnostics.floored += 1;
                }
                for (state, m) in [(Side::High, mh), (Side::Low, ml)] {
                    let m = m * tr.weight;
                    if m == 0.0 {
                        continue;
                    }
                    let p_low = tr.law.low_prob(state);
                    let next = match state {
                        Side::High => &mut self.next_high,
                        Side::Low => &mut self.next_low,
                    };
                    leaked += deposit(next, tr.down, m * p_low);
                    leaked += deposit(next, tr.up, m * (1.0 - p_low));
                }
            }
        }
        std::mem::swap(&mut self.measure.mass_high, &mut self.next_high);
        std::mem::swap(&mut self.measure.mass_low, &mut self.next_low);
        self.diagnostics.leaked += leaked;
        for s in [Side::High, Side::Low] {
            let err = (self.measure.total(s) - 1.0).abs();
            self.diagnostics.max_mass_error = self.diagnostics.max_mass_error.max(err);
        }
        if self.diagnostics.leaked > LEAKAGE_LIMIT {
            return Err(Error::Leakage {
                period: self.t,
                leaked: self.diagnostics.leaked,
                limit: LEAKAGE_LIMIT,
                clamp: self.measure.grid.clamp,
                floored: self.diagnostics.floored,
            });
        }
        self.t += 1;
        Ok(())
    }
}

#[inline]
fn deposit(next: &mut [f64], at: Landing, m: f64) -> f64 {
    if at.frac == 0.0 {
        next[at.lo] += m;
    } else if at.frac == 1.0 {
        next[at.lo + 1] += m;
    } else {
        next[at.lo] += m * (1.0 - at.frac);
        next[at.lo + 1] += m * at.frac;
    }
    if at.leaked {
        m
    } else {
        0.0
    }
}

/// Result of an exact run: one metrics row per period plus audit series.
#[derive(Debug, Clone, Serialize)]
pub struct ExactRun {
    pub periods: Vec<PeriodMetrics>,
    /// Unconditional `E[π_t]`, `t = 1..=T`.
    pub mean_belief: Vec<f64>,
    /// `E[Δ(π_t, ν_t)]` computed from the period-`t` measure.
    pub delta: Vec<f64>,
    /// `E|ℓ_{T+1}|`, closing the last increment.
    pub final_e_abs_llr: f64,
    pub diagnostics: ExactDiagnostics,
}

impl ExactRun {
    /// Realized `E|ℓ_{t+1}| - E|ℓ_t|`, `t = 1..=T`.
    pub fn realized_increments(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .periods
            .windows(2)
            .map(|w| w[1].e_abs_llr - w[0].e_abs_llr)
            .collect();
        if let Some(last) = self.periods.last() {
            out.push(self.final_e_abs_llr - last.e_abs_llr);
        }
        out
    }
}

/// Evolves the grid measure for `horizon` periods.
pub fn evolve(env: &Environment, grid: LlrGrid, horizon: usize) -> Result<ExactRun> {
    let mut engine = ExactEngine::new(env, grid)?;
    let mut periods = Vec::with_capacity(horizon);
    let mut mean_belief = Vec::with_capacity(horizon);
    let mut delta = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let m = engine.measure();
        periods.push(metrics::period_metrics_from_measure(m, env, t)?);
        delta.push(metrics::delta_decomposition(m, env, t)?);
        mean_belief.push(m.mean_belief());
        engine.step()?;
    }
    metrics::accumulate(&mut periods);
    Ok(ExactRun {
        periods,
        mean_belief,
        delta,
        final_e_abs_llr: engine.measure().e_abs_llr(),
        diagnostics: engine.diagnostics(),
    })
}

/// Runs the exact engine described by `config`; last-k disclosure is routed
/// through [`lastk::evolve`].
pub fn exact_evolve(config: &ExperimentConfig) -> Result<ExactRun> {
    config.validate()?;
    if config.engine.kind != EngineKind::Exact {
        return Err(Error::config("engine.kind", "exact_evolve needs engine.kind = \"exact\""));
    }
    let env = Environment::from_config(config)?;
    let grid = LlrGrid::new(config.engine.grid_bins, config.engine.llr_clamp)?;
    match (&env.disclosure, &env.dictated) {
        (DisclosurePolicy::LastK { k }, None) => {
            let run = lastk::evolve(&env, *k, config.engine.horizon, Some(grid))?;
            Ok(run.into_exact_run())
        }
        _ => evolve(&env, grid, config.engine.horizon),
    }
}
