//! Per-period statistics and efficiency diagnostics.
//!
//! All probabilities are unconditional: averages over the uniform prior on
//! the state. The CSV layout is fixed:
//!
//! ```text
//! t,p_mistake_agent,p_mistake_planner,p_mistake_presignal,e_abs_llr,e_abs_transfer,cum_mistakes,cum_transfers
//! ```
//!
//! Discounted welfare is not computed.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::decision::{sigmoid, Belief};
use crate::engine::exact::{node_branches, ConditionalBeliefMeasure};
use crate::engine::lastk::LastKTable;
use crate::engine::{AgentLaw, Environment};
use crate::{Error, Result, Side};

pub const CSV_HEADER: &str = "t,p_mistake_agent,p_mistake_planner,p_mistake_presignal,e_abs_llr,e_abs_transfer,cum_mistakes,cum_transfers";

/// Below this mean per-period increment of cumulative mistakes over the
/// final tenth of the horizon, a run outside the log-growth band counts as
/// plateauing.
pub const PLATEAU_INCREMENT: f64 = 1e-4;
/// Tail slopes in this band count as logarithmic growth of cumulative
/// mistakes (`p ~ 1/t`).
pub const LOG_GROWTH_SLOPE: (f64, f64) = (-1.3, -0.7);
pub const MIN_SERIES_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub t: usize,
    /// `P[a_t ≠ θ]`.
    pub p_mistake_agent: f64,
    /// `E[min{π_t, 1 - π_t}]`.
    pub p_mistake_planner: f64,
    /// `P[b_t ≠ θ]`.
    pub p_mistake_presignal: f64,
    pub e_abs_llr: f64,
    pub e_abs_transfer: f64,
    pub cum_mistakes: f64,
    pub cum_transfers: f64,
}

impl PeriodMetrics {
    fn empty(t: usize) -> Self {
        PeriodMetrics {
            t,
            p_mistake_agent: 0.0,
            p_mistake_planner: 0.0,
            p_mistake_presignal: 0.0,
            e_abs_llr: 0.0,
            e_abs_transfer: 0.0,
            cum_mistakes: 0.0,
            cum_transfers: 0.0,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t,
            fmt17(self.p_mistake_agent),
            fmt17(self.p_mistake_planner),
            fmt17(self.p_mistake_presignal),
            fmt17(self.e_abs_llr),
            fmt17(self.e_abs_transfer),
            fmt17(self.cum_mistakes),
            fmt17(self.cum_transfers),
        )
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Fills the running sums `cum_mistakes` and `cum_transfers`.
pub fn accumulate(series: &mut [PeriodMetrics]) {
    let (mut m, mut tr) = (0.0, 0.0);
    for p in series {
        m += p.p_mistake_agent;
        tr += p.e_abs_transfer;
        p.cum_mistakes = m;
        p.cum_transfers = tr;
    }
}

pub fn write_csv<W: Write>(series: &[PeriodMetrics], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in series {
        writeln!(out, "{}", p.csv_row())?;
    }
    Ok(())
}

/// Period-`t` statistics of a grid measure, node by node. Cumulative fields
/// are left at zero; see [`accumulate`].
pub fn period_metrics_from_measure(
    measure: &ConditionalBeliefMeasure,
    env: &Environment,
    t: usize,
) -> Result<PeriodMetrics> {
    let mut out = PeriodMetrics::empty(t);
    for (_, x, mh, ml) in measure.occupied() {
        let m = 0.5 * (mh + ml);
        out.p_mistake_planner += m * sigmoid(-x.abs());
        out.e_abs_llr += m * x.abs();
        for (w, nu) in node_branches(env, Belief::from_llr(x), t)?.iter() {
            let law = env.agent_law(t, nu)?;
            out.p_mistake_agent += 0.5 * w * (mh * law.low_given_high + ml * (1.0 - law.low_given_low));
            out.p_mistake_presignal += 0.5
                * w
                * match law.presignal {
                    Side::High => ml,
                    Side::Low => mh,
                };
            out.e_abs_transfer += w * m * law.tau.abs();
        }
    }
    Ok(out)
}

/// Agent-side statistics of a last-k window table. Planner-side fields are
/// zero; the caller fills them.
pub fn period_metrics_from_window_table(table: &LastKTable, laws: &[AgentLaw], t: usize) -> PeriodMetrics {
    let mut out = PeriodMetrics::empty(t);
    for (w, law) in laws.iter().enumerate() {
        let ph = table.probability(Side::High, w);
        let pl = table.probability(Side::Low, w);
        out.p_mistake_agent += 0.5 * (ph * law.low_given_high + pl * (1.0 - law.low_given_low));
        out.p_mistake_presignal += 0.5
            * match law.presignal {
                Side::High => pl,
                Side::Low => ph,
            };
        out.e_abs_transfer += 0.5 * (ph + pl) * law.tau.abs();
    }
    out
}

/// `E[Δ(π_t, ν_t)]`, where
/// `Δ = f·(|ℓ+U^ℓ| - |ℓ|) + (1-f)·(|ℓ+U^h| - |ℓ|)` and
/// `f = π F_h(c) + (1-π) F_ℓ(c)` is the probability of the low action.
///
/// `π` at a node is the posterior implied by the measure's own state
/// composition, `m_h / (m_h + m_ℓ)`, so the identity with the realized
/// increment of `E|ℓ|` is exact up to rounding and clamp leakage.
pub fn delta_decomposition(measure: &ConditionalBeliefMeasure, env: &Environment, t: usize) -> Result<f64> {
    let mut total = 0.0;
    for (_, x, mh, ml) in measure.occupied() {
        let m = 0.5 * (mh + ml);
        let pi = mh / (mh + ml);
        for (w, nu) in node_branches(env, Belief::from_llr(x), t)?.iter() {
            let law = env.agent_law(t, nu)?;
            let f = pi * law.low_given_high + (1.0 - pi) * law.low_given_low;
            let delta = f * ((x + law.down).abs() - x.abs()) + (1.0 - f) * ((x + law.up).abs() - x.abs());
            total += m * w * delta;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    /// Mistakes have effectively stopped accruing.
    Plateauing,
    /// `p_t ~ 1/t`: cumulative mistakes grow like `log t`.
    LogGrowth,
    /// Any other decay rate, including none.
    PowerGrowth,
}

impl std::fmt::Display for Convergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Convergence::Plateauing => "plateauing",
            Convergence::LogGrowth => "log-growth",
            Convergence::PowerGrowth => "power-growth",
        })
    }
}

/// Heuristic read of a mistake series. The thresholds are conventions, not
/// theorems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub horizon: usize,
    pub cum_mistakes: f64,
    pub cum_transfers: f64,
    /// Mean per-period increase of `cum_mistakes` over the last tenth.
    pub tail_increment: f64,
    /// OLS slope of `ln p` on `ln t` over `[T/10, T]`. NaN when fewer than
    /// three positive points exist.
    pub slope: f64,
    /// 95% band on the slope (±1.96 standard errors).
    pub slope_band: f64,
    pub window: (usize, usize),
    pub classification: Convergence,
}

/// OLS fit `y = a + b x`; returns `(b, se(b))`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let se = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (b, se)
}

pub fn efficiency_diagnostics(series: &[PeriodMetrics]) -> Result<EfficiencyReport> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::Diagnostic(format!(
            "series has {n} periods; efficiency diagnostics need at least {MIN_SERIES_LEN}"
        )));
    }
    let horizon = series[n - 1].t;
    let start = (horizon / 10).max(series[0].t);
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|p| p.t >= start && p.p_mistake_agent > 0.0)
        .map(|p| ((p.t as f64).ln(), p.p_mistake_agent.ln()))
        .unzip();
    let (slope, se) = if xs.len() >= 3 {
        ols_slope(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN)
    };
    let tail = n.div_ceil(10);
    let before = if tail < n { series[n - 1 - tail].cum_mistakes } else { 0.0 };
    let tail_increment = (series[n - 1].cum_mistakes - before) / tail as f64;
    // The slope band is checked first: a `c/t` tail with small `c` has a tail
    // increment under the plateau threshold but still grows like `c ln T`.
    let classification = if slope >= LOG_GROWTH_SLOPE.0 && slope <= LOG_GROWTH_SLOPE.1 {
        Convergence::LogGrowth
    } else if tail_increment < PLATEAU_INCREMENT {
        Convergence::Plateauing
    } else {
        Convergence::PowerGrowth
    };
    Ok(EfficiencyReport {
        horizon,
        cum_mistakes: series[n - 1].cum_mistakes,
        cum_transfers: series[n - 1].cum_transfers,
        tail_increment,
        slope,
        slope_band: 1.96 * se,
        window: (start, horizon),
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::exact::LlrGrid;
    use crate::policy::{DisclosurePolicy, TransferScheme};
    use crate::signals::SignalModel;

    fn series(f: impl Fn(usize) -> f64, n: usize) -> Vec<PeriodMetrics> {
        let mut s: Vec<_> = (1..=n)
            .map(|t| PeriodMetrics {
                p_mistake_agent: f(t),
                ..PeriodMetrics::empty(t)
            })
            .collect();
        accumulate(&mut s);
        s
    }

    #[test]
    fn constant_series() {
        let r = efficiency_diagnostics(&series(|_| 0.25, 1000)).unwrap();
        assert!(r.slope.abs() < 1e-12);
        assert_eq!(r.classification, Convergence::PowerGrowth);
        assert!((r.tail_increment - 0.25).abs() < 1e-12);
    }

    #[test]
    fn harmonic_series_is_log_growth() {
        let r = efficiency_diagnostics(&series(|t| 0.9 / t as f64, 5000)).unwrap();
        assert!((r.slope + 1.0).abs() < 1e-9);
        assert_eq!(r.window, (500, 5000));
        assert_eq!(r.classification, Convergence::LogGrowth);
    }

    #[test]
    fn small_harmonic_is_still_log_growth() {
        let r = efficiency_diagnostics(&series(|t| 0.05 / t as f64, 5000)).unwrap();
        assert!(r.tail_increment < PLATEAU_INCREMENT);
        assert_eq!(r.classification, Convergence::LogGrowth);
    }

    #[test]
    fn fast_decay_plateaus() {
        let r = efficiency_diagnostics(&series(|t| 1.0 / (t * t) as f64, 2000)).unwrap();
        assert_eq!(r.classification, Convergence::Plateauing);
        assert!((r.slope + 2.0).abs() < 1e-9);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            efficiency_diagnostics(&series(|_| 0.1, 50)),
            Err(Error::Diagnostic(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let s = series(|_| 0.25, 2);
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "1,2.5000000000000000e-1,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,2.5000000000000000e-1,0.0000000000000000e0"
        );
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn single_atom_delta() {
        let env = Environment::full_disclosure(1.0).unwrap();
        let m = ConditionalBeliefMeasure::new(LlrGrid::new(256, 40.0).unwrap());
        let d = delta_decomposition(&m, &env, 1).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-12);
        let p = period_metrics_from_measure(&m, &env, 1).unwrap();
        assert!((p.p_mistake_agent - 0.25).abs() < 1e-15);
        assert_eq!(p.p_mistake_planner, 0.5);
        assert_eq!(p.e_abs_llr, 0.0);
        assert_eq!(p.p_mistake_presignal, 0.5);
    }

    #[test]
    fn same_side_atom_delta_is_nonnegative() {
        // atom at ℓ = 6; without disclosure the steps are ±ln 3, so both
        // destinations stay positive
        let env = Environment::new(
            SignalModel::power(1.0).unwrap(),
            DisclosurePolicy::NoDisclosure,
            TransferScheme::Zero,
            None,
        )
        .unwrap();
        let grid = LlrGrid::new(256, 40.0).unwrap();
        let i = grid.center() + (6.0 / grid.step()).round() as usize;
        let x = grid.node(i);
        let mut mh = vec![0.0; grid.len()];
        let mut ml = vec![0.0; grid.len()];
        let pi = sigmoid(x);
        // Bayes-consistent conditional masses for an atom of unconditional mass 1
        mh[i] = 2.0 * pi;
        ml[i] = 2.0 * (1.0 - pi);
        let m = ConditionalBeliefMeasure::from_masses(grid, mh, ml).unwrap();
        let law = env.agent_law(1, Belief::NEUTRAL).unwrap();
        assert!(x + law.down > 0.0);
        let f = pi * law.low_given_high + (1.0 - pi) * law.low_given_low;
        let expected = f * law.down + (1.0 - f) * law.up;
        let d = delta_decomposition(&m, &env, 1).unwrap();
        assert!((d - expected).abs() < 1e-12);
        // martingale in π makes the LLR drift nonnegative
        assert!(d >= -1e-15);
    }

    #[test]
    fn no_disclosure_agent_mistake_is_quarter() {
        let env = Environment::new(
            SignalModel::power(1.0).unwrap(),
            DisclosurePolicy::NoDisclosure,
            TransferScheme::Zero,
            None,
        )
        .unwrap();
        let m = ConditionalBeliefMeasure::new(LlrGrid::new(256, 40.0).unwrap());
        let p = period_metrics_from_measure(&m, &env, 1).unwrap();
        assert!((p.p_mistake_agent - 0.25).abs() < 1e-15);
        assert_eq!(p.p_mistake_presignal, 0.5);
        assert!(p.p_mistake_agent >= env.model.epsilon_f() * p.p_mistake_presignal);
    }
}
