//! Forward DP for last-k disclosure.
//!
//! Agent `t` sees only the window of the `min(t-1, k)` most recent actions,
//! so her social belief is `ν_t(w) = P_h[w] / (P_h[w] + P_ℓ[w])` under the
//! uniform prior. Behaviour depends on the window alone, which makes the
//! action process `k`-th order Markov and the DP over windows exact.
//!
//! Windows are bit strings, most recent action in the lowest bit, `1` for the
//! high action.

use serde::Serialize;

use crate::decision::{sigmoid, Belief};
use crate::engine::exact::{ExactDiagnostics, ExactRun, LlrGrid};
use crate::engine::{AgentLaw, Environment};
use crate::metrics::{self, PeriodMetrics};
use crate::{Action, Error, Result, Side, State};

pub const MAX_K: usize = 12;

/// Joint (window × LLR node) evolution is skipped above this many cells;
/// planner-side metrics are then reported as NaN.
pub const JOINT_CELL_LIMIT: usize = 1 << 22;

/// State-conditional probabilities of every window at one period.
#[derive(Debug, Clone, PartialEq)]
pub struct LastKTable {
    k: usize,
    len: usize,
    prob_high: Vec<f64>,
    prob_low: Vec<f64>,
}

/// A table together with the window actually observed.
#[derive(Debug, Clone, Copy)]
pub struct LastKLookup<'a> {
    table: &'a LastKTable,
    window: usize,
}

impl LastKLookup<'_> {
    pub fn social_belief(&self) -> Belief {
        self.table.social_belief(self.window)
    }
}

impl LastKTable {
    /// Period-1 table: the empty window, probability one.
    pub fn initial(k: usize) -> Result<Self> {
        if !(1..=MAX_K).contains(&k) {
            return Err(Error::config("disclosure.k", format!("window length {k} outside 1..={MAX_K}")));
        }
        Ok(LastKTable {
            k,
            len: 0,
            prob_high: vec![1.0],
            prob_low: vec![1.0],
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Length of the windows in this table, `min(t-1, k)`.
    pub fn window_len(&self) -> usize {
        self.len
    }

    pub fn size(&self) -> usize {
        1 << self.len
    }

    pub fn probability(&self, state: State, window: usize) -> f64 {
        match state {
            Side::High => self.prob_high[window],
            Side::Low => self.prob_low[window],
        }
    }

    /// `ν(w)` by Bayes' rule on the window likelihoods. Unreachable windows
    /// get the neutral belief.
    pub fn social_belief(&self, window: usize) -> Belief {
        let (h, l) = (self.prob_high[window], self.prob_low[window]);
        if h == 0.0 && l == 0.0 {
            Belief::NEUTRAL
        } else {
            Belief::from_llr(h.ln() - l.ln())
        }
    }

    /// `ν(w) = P_h(w) / (P_h(w) + P_ℓ(w))` in probability coordinates.
    pub fn social_prob(&self, window: usize) -> f64 {
        let (h, l) = (self.prob_high[window], self.prob_low[window]);
        if h == 0.0 && l == 0.0 {
            0.5
        } else {
            h / (h + l)
        }
    }

    pub fn lookup(&self, window: usize) -> LastKLookup<'_> {
        LastKLookup { table: self, window }
    }

    /// Window after appending `action`.
    pub fn next_window(&self, window: usize, action: Action) -> usize {
        let len = (self.len + 1).min(self.k);
        ((window << 1) | usize::from(action.is_high())) & ((1 << len) - 1)
    }

    /// Agent laws for every window at period `t`.
    pub fn laws(&self, env: &Environment, t: usize) -> Result<Vec<AgentLaw>> {
        (0..self.size())
            .map(|w| env.agent_law(t, self.social_belief(w)))
            .collect()
    }

    /// The period-`t+1` table given the period-`t` laws.
    pub fn advance(&self, laws: &[AgentLaw]) -> LastKTable {
        let len = (self.len + 1).min(self.k);
        let mut prob_high = vec![0.0; 1 << len];
        let mut prob_low = vec![0.0; 1 << len];
        for (w, law) in laws.iter().enumerate() {
            for (state, probs, dest) in [
                (Side::High, &self.prob_high, &mut prob_high),
                (Side::Low, &self.prob_low, &mut prob_low),
            ] {
                let p = probs[w];
                if p == 0.0 {
                    continue;
                }
                let low = law.low_prob(state);
                dest[self.next_window(w, Side::Low)] += p * low;
                dest[self.next_window(w, Side::High)] += p * (1.0 - low);
            }
        }
        LastKTable {
            k: self.k,
            len,
            prob_high,
            prob_low,
        }
    }
}

/// Per-period tables `t = 1..=horizon`, for the Monte Carlo engine.
pub fn tables(env: &Environment, k: usize, horizon: usize) -> Result<Vec<LastKTable>> {
    let mut out = Vec::with_capacity(horizon);
    let mut table = LastKTable::initial(k)?;
    for t in 1..=horizon {
        let next = table.advance(&table.laws(env, t)?);
        out.push(table);
        table = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LastKRun {
    pub periods: Vec<PeriodMetrics>,
    /// `ν` of every window in the period-2 table (agent 2's possible beliefs).
    pub second_period_beliefs: Vec<f64>,
    pub final_e_abs_llr: f64,
    pub diagnostics: ExactDiagnostics,
}

impl LastKRun {
    pub fn into_exact_run(self) -> ExactRun {
        let n = self.periods.len();
        ExactRun {
            periods: self.periods,
            mean_belief: vec![f64::NAN; n],
            delta: vec![f64::NAN; n],
            final_e_abs_llr: self.final_e_abs_llr,
            diagnostics: self.diagnostics,
        }
    }
}

/// Planner's LLR law jointly with the current window.
struct JointMeasure {
    grid: LlrGrid,
    high: Vec<Vec<f64>>,
    low: Vec<Vec<f64>>,
}

impl JointMeasure {
    fn new(grid: LlrGrid) -> Self {
        let mut high = vec![0.0; grid.len()];
        high[grid.center()] = 1.0;
        JointMeasure {
            grid,
            low: vec![high.clone()],
            high: vec![high],
        }
    }

    fn planner_stats(&self) -> (f64, f64) {
        let mut mistake = 0.0;
        let mut abs = 0.0;
        for (rh, rl) in self.high.iter().zip(&self.low) {
            for (i, (h, l)) in rh.iter().zip(rl).enumerate() {
                let m = 0.5 * (h + l);
                if m != 0.0 {
                    let x = self.grid.node(i);
                    mistake += m * sigmoid(-x.abs());
                    abs += m * x.abs();
                }
            }
        }
        (mistake, abs)
    }

    fn advance(&mut self, table: &LastKTable, laws: &[AgentLaw], diag: &mut ExactDiagnostics) {
        let len = (table.len + 1).min(table.k);
        let n = self.grid.len();
        let mut high = vec![vec![0.0; n]; 1 << len];
        let mut low = vec![vec![0.0; n]; 1 << len];
        let step = self.grid.step();
        for (w, law) in laws.iter().enumerate() {
            for (action, inc) in [(Side::Low, law.down), (Side::High, law.up)] {
                let dest = table.next_window(w, action);
                let shift = inc / step;
                let off = shift.floor();
                let frac = shift - off;
                let off = off as isize;
                for (state, src, dst) in [
                    (Side::High, &self.high[w], &mut high[dest]),
                    (Side::Low, &self.low[w], &mut low[dest]),
                ] {
                    let p_low = law.low_prob(state);
                    let p = if action == Side::Low { p_low } else { 1.0 - p_low };
                    for (i, &m) in src.iter().enumerate() {
                        if m == 0.0 {
                            continue;
                        }
                        let m = m * p;
                        let lo = i as isize + off;
                        if lo < 0 {
                            dst[0] += m;
                            diag.leaked += m;
                        } else if lo as usize >= n - 1 {
                            let at_edge = lo as usize == n - 1 && frac == 0.0;
                            dst[n - 1] += m;
                            if !at_edge {
                                diag.leaked += m;
                            }
                        } else {
                            let lo = lo as usize;
                            dst[lo] += m * (1.0 - frac);
                            dst[lo + 1] += m * frac;
                        }
                    }
                }
            }
        }
        self.high = high;
        self.low = low;
    }
}

/// Exact last-k evolution. Agent-side metrics come from the window DP;
/// planner-side metrics (`p_mistake_planner`, `e_abs_llr`) from a joint
/// window × LLR-grid measure when `grid` is given and the joint state fits
/// under [`JOINT_CELL_LIMIT`], else NaN.
pub fn evolve(env: &Environment, k: usize, horizon: usize, grid: Option<LlrGrid>) -> Result<LastKRun> {
    let mut table = LastKTable::initial(k)?;
    let mut joint = grid
        .filter(|g| (1usize << k) * g.len() <= JOINT_CELL_LIMIT)
        .map(JointMeasure::new);
    let mut diagnostics = ExactDiagnostics::default();
    let mut periods = Vec::with_capacity(horizon);
    let mut second = Vec::new();
    for t in 1..=horizon {
        if t == 2 {
            second = (0..table.size()).map(|w| table.social_belief(w).prob()).collect();
        }
        let laws = table.laws(env, t)?;
        let mut row = metrics::period_metrics_from_window_table(&table, &laws, t);
        match &joint {
            Some(j) => {
                let (mistake, abs) = j.planner_stats();
                row.p_mistake_planner = mistake;
                row.e_abs_llr = abs;
            }
            None => {
                row.p_mistake_planner = f64::NAN;
                row.e_abs_llr = f64::NAN;
            }
        }
        periods.push(row);
        diagnostics.floored += laws.iter().filter(|l| l.floored).count() as u64;
        if let Some(j) = joint.as_mut() {
            j.advance(&table, &laws, &mut diagnostics);
            if diagnostics.leaked > super::exact::LEAKAGE_LIMIT {
                return Err(Error::Leakage {
                    period: t,
                    leaked: diagnostics.leaked,
                    limit: super::exact::LEAKAGE_LIMIT,
                    clamp: j.grid.clamp(),
                    floored: diagnostics.floored,
                });
            }
        }
        table = table.advance(&laws);
        for s in [Side::High, Side::Low] {
            let total: f64 = (0..table.size()).map(|w| table.probability(s, w)).sum();
            diagnostics.max_mass_error = diagnostics.max_mass_error.max((total - 1.0).abs());
        }
    }
    metrics::accumulate(&mut periods);
    let final_e_abs_llr = joint.as_ref().map_or(f64::NAN, |j| j.planner_stats().1);
    Ok(LastKRun {
        periods,
        second_period_beliefs: second,
        final_e_abs_llr,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{DisclosurePolicy, TransferScheme};
    use crate::signals::SignalModel;

    fn env(k: usize) -> Environment {
        Environment::new(
            SignalModel::power(1.0).unwrap(),
            DisclosurePolicy::LastK { k },
            TransferScheme::Zero,
            None,
        )
        .unwrap()
    }

    #[test]
    fn second_agent_beliefs() {
        let e = env(1);
        let t1 = LastKTable::initial(1).unwrap();
        let t2 = t1.advance(&t1.laws(&e, 1).unwrap());
        let high = t2.next_window(0, Side::High);
        let low = t2.next_window(0, Side::Low);
        assert!((t2.probability(Side::High, high) - 0.75).abs() < 1e-15);
        assert!((t2.probability(Side::Low, high) - 0.25).abs() < 1e-15);
        assert!((t2.social_belief(high).prob() - 0.75).abs() < 1e-15);
        assert_eq!(t2.social_prob(high), 0.75);
        assert_eq!(t2.social_prob(low), 0.25);
        assert!((t2.social_belief(low).prob() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn window_bits() {
        let mut t = LastKTable::initial(3).unwrap();
        let e = env(3);
        for step in 1..=4 {
            t = t.advance(&t.laws(&e, step).unwrap());
        }
        assert_eq!(t.window_len(), 3);
        assert_eq!(t.next_window(0b101, Side::High), 0b011);
        assert_eq!(t.next_window(0b101, Side::Low), 0b010);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let e = env(4);
        let run = evolve(&e, 4, 50, None).unwrap();
        assert!(run.diagnostics.max_mass_error < 1e-13);
        assert!(run.periods[10].p_mistake_planner.is_nan());
    }

    #[test]
    fn out_of_range_k() {
        assert!(LastKTable::initial(0).is_err());
        assert!(LastKTable::initial(MAX_K + 1).is_err());
    }

    #[test]
    fn first_period_matches_full_disclosure() {
        let e = env(2);
        let grid = LlrGrid::new(1024, 40.0).unwrap();
        let run = evolve(&e, 2, 3, Some(grid)).unwrap();
        assert!((run.periods[0].p_mistake_agent - 0.25).abs() < 1e-15);
        // with k ≥ t-1 the window is the whole history, so agent 2 matches
        // full disclosure exactly
        assert!((run.periods[1].p_mistake_agent - 0.1875).abs() < 1e-15);
        assert!((run.periods[1].e_abs_llr - 3f64.ln()).abs() < 1e-12);
    }
}
