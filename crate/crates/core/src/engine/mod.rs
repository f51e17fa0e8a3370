//! Execution backends for the sequential process.
//!
//! * [`mc`]: seeded Monte Carlo over sampled trajectories.
//! * [`exact`]: deterministic evolution of the planner's state-conditional
//!   LLR distributions on a uniform grid.
//! * [`lastk`]: forward DP over the last `k` actions, for last-k disclosure.
//!
//! All three share [`Environment::agent_law`], which turns a social belief
//! into the agent's cutoff, action probabilities and the planner's LLR
//! increments.

pub mod exact;
pub mod lastk;
pub mod mc;

use crate::config::ExperimentConfig;
use crate::decision::{cutoff_belief, floor_cutoff, presignal_from_cutoff, Belief};
use crate::policy::{transfer, DictatedCutoffSchedule, DisclosurePolicy, TransferScheme};
use crate::signals::SignalModel;
use crate::{Action, Error, Result, Side, State};

/// The validated, immutable description of one experiment's primitives.
#[derive(Debug, Clone)]
pub struct Environment {
    pub model: SignalModel,
    pub disclosure: DisclosurePolicy,
    pub transfers: TransferScheme,
    pub dictated: Option<DictatedCutoffSchedule>,
}

/// Conditional action law of one agent and what her action teaches the
/// planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentLaw {
    pub tau: f64,
    /// The cutoff actually used (after flooring).
    pub cutoff: Belief,
    pub floored: bool,
    /// `F_h(c)`: probability of the low action when `θ = h`.
    pub low_given_high: f64,
    /// `F_ℓ(c)`: probability of the low action when `θ = ℓ`.
    pub low_given_low: f64,
    /// `U^h > 0`.
    pub up: f64,
    /// `U^ℓ < 0`.
    pub down: f64,
    /// Action on social information alone.
    pub presignal: Action,
}

impl AgentLaw {
    /// `P[a = ℓ | θ]`.
    pub fn low_prob(&self, state: State) -> f64 {
        match state {
            Side::High => self.low_given_high,
            Side::Low => self.low_given_low,
        }
    }

    /// `P[a ≠ θ | θ]`.
    pub fn mistake_prob(&self, state: State) -> f64 {
        match state {
            Side::High => self.low_given_high,
            Side::Low => 1.0 - self.low_given_low,
        }
    }

    pub fn increment(&self, action: Action) -> f64 {
        match action {
            Side::High => self.up,
            Side::Low => self.down,
        }
    }
}

impl Environment {
    pub fn new(
        model: SignalModel,
        disclosure: DisclosurePolicy,
        transfers: TransferScheme,
        dictated: Option<DictatedCutoffSchedule>,
    ) -> Result<Self> {
        disclosure.validate()?;
        transfers.validate()?;
        if let Some(d) = &dictated {
            d.validate()?;
        }
        Ok(Environment {
            model,
            disclosure,
            transfers,
            dictated,
        })
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        Self::new(
            SignalModel::new(config.distribution.family, config.distribution.alpha)?,
            config.disclosure.clone(),
            config.transfers.clone(),
            config.dictated_cutoffs.clone(),
        )
    }

    /// Full disclosure, zero transfers.
    pub fn full_disclosure(alpha: f64) -> Result<Self> {
        Self::new(
            SignalModel::power(alpha)?,
            DisclosurePolicy::Full,
            TransferScheme::Zero,
            None,
        )
    }

    /// Whether [`Environment::agent_law`] and the disclosure law are the same
    /// in every period.
    pub fn is_stationary(&self) -> bool {
        self.disclosure.is_stationary()
            && self.transfers.is_stationary()
            && self.dictated.as_ref().is_none_or(|d| d.is_stationary())
    }

    /// Agent `t`'s law given social belief `nu`. In dictated mode the cutoff
    /// comes from the schedule and no transfer is paid.
    pub fn agent_law(&self, t: usize, nu: Belief) -> Result<AgentLaw> {
        let (tau, raw) = match &self.dictated {
            Some(schedule) => (0.0, Belief::from_prob(schedule.at(t))),
            None => {
                let tau = transfer(&self.transfers, nu, t)?;
                (tau, cutoff_belief(nu, tau))
            }
        };
        let (cutoff, floored) = floor_cutoff(raw);
        let (c, c_comp) = (cutoff.prob(), cutoff.complement());
        let (fh, sfh) = self.model.cdf_and_survival(Side::High, c, c_comp);
        let (fl, sfl) = self.model.cdf_and_survival(Side::Low, c, c_comp);
        let (up, down) = if c <= 0.5 {
            ((-fh).ln_1p() - (-fl).ln_1p(), fh.ln() - fl.ln())
        } else {
            (sfh.ln() - sfl.ln(), (-sfh).ln_1p() - (-sfl).ln_1p())
        };
        Ok(AgentLaw {
            tau,
            cutoff,
            floored,
            low_given_high: fh,
            low_given_low: fl,
            up,
            down,
            presignal: presignal_from_cutoff(cutoff),
        })
    }
}

/// `(U^h, U^ℓ)` at cutoff `c`:
/// `U^h = ln[(1-F_h(c))/(1-F_ℓ(c))]`, `U^ℓ = ln[F_h(c)/F_ℓ(c)]`.
///
/// `c` is floored into `[e^-38, 1-e^-38]` first.
pub fn llr_increments(model: &SignalModel, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain {
            what: "c",
            value: c,
            domain: "(0, 1)",
        });
    }
    let env = Environment {
        model: model.clone(),
        disclosure: DisclosurePolicy::Full,
        transfers: TransferScheme::Zero,
        dictated: None,
    };
    // ν = 1 - c gives cutoff c at zero transfer
    let law = env.agent_law(1, Belief::from_prob(c).flip())?;
    Ok((law.up, law.down))
}

/// Planner's belief after observing `action`: odds times `e^{U^a}`.
pub fn update_planner_belief(pi: f64, action: Action, up: f64, down: f64) -> Result<f64> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::Domain {
            what: "pi",
            value: pi,
            domain: "(0, 1)",
        });
    }
    let step = match action {
        Side::High => up,
        Side::Low => down,
    };
    Ok(Belief::from_llr(Belief::from_prob(pi).llr() + step).prob())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> SignalModel {
        SignalModel::power(1.0).unwrap()
    }

    #[test]
    fn increments_uniform_examples() {
        let (up, down) = llr_increments(&uniform(), 0.2).unwrap();
        assert!((up - (0.96f64 / 0.64).ln()).abs() < 1e-12);
        assert!((up - 0.405_465_108_108_164_4).abs() < 1e-6);
        assert!((down - (0.04f64 / 0.36).ln()).abs() < 1e-12);
        assert!((down + 2.197_224_577_336_219).abs() < 1e-6);
        let (up, down) = llr_increments(&uniform(), 0.5).unwrap();
        assert!((up - 3f64.ln()).abs() < 1e-12);
        assert!((down + 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn increments_have_signs() {
        for a in [0.5, 1.0, 1.5] {
            let m = SignalModel::power(a).unwrap();
            for c in [1e-30, 1e-8, 0.01, 0.3, 0.5, 0.8, 0.999, 1.0 - 1e-12] {
                let (up, down) = llr_increments(&m, c).unwrap();
                assert!(up > 0.0 && down < 0.0, "a={a} c={c}: {up} {down}");
            }
            let (up, down) = llr_increments(&m, 0.5).unwrap();
            assert!((up + down).abs() < 1e-12);
        }
        assert!(llr_increments(&uniform(), 0.0).is_err());
    }

    #[test]
    fn belief_updates() {
        let (up, down) = llr_increments(&uniform(), 0.2).unwrap();
        let p = update_planner_belief(0.5, Side::Low, up, down).unwrap();
        assert!((p - 0.1).abs() < 1e-12);
        let p = update_planner_belief(0.8, Side::High, up, down).unwrap();
        assert!((p - 6.0 / 7.0).abs() < 1e-12);
        let (up, down) = llr_increments(&uniform(), 0.5).unwrap();
        let p = update_planner_belief(0.5, Side::High, up, down).unwrap();
        let p = update_planner_belief(p, Side::Low, up, down).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn agent_law_matches_direct_formulas() {
        let env = Environment::full_disclosure(1.5).unwrap();
        let nu = Belief::from_prob(0.7);
        let law = env.agent_law(3, nu).unwrap();
        let c = 0.3;
        assert!((law.cutoff.prob() - c).abs() < 1e-15);
        let fh = env.model.cdf_conditional(Side::High, c).unwrap();
        let fl = env.model.cdf_conditional(Side::Low, c).unwrap();
        assert!((law.low_given_high - fh).abs() < 1e-15);
        assert!((law.low_given_low - fl).abs() < 1e-15);
        assert!((law.up - ((1.0 - fh) / (1.0 - fl)).ln()).abs() < 1e-13);
        assert!((law.down - (fh / fl).ln()).abs() < 1e-13);
        assert_eq!(law.presignal, Side::High);
    }

    #[test]
    fn extreme_beliefs_floor_cutoff() {
        let env = Environment::full_disclosure(1.0).unwrap();
        let law = env.agent_law(1, Belief::from_llr(39.5)).unwrap();
        assert!(law.floored);
        assert!(law.up > 0.0 && law.down < 0.0 && law.down.is_finite());
        let law = env.agent_law(1, Belief::from_llr(-39.5)).unwrap();
        assert!(law.floored);
        assert!(law.up.is_finite() && law.up > 0.0);
    }

    #[test]
    fn mirrored_beliefs_mirror_the_law() {
        let env = Environment::full_disclosure(0.7).unwrap();
        for x in [0.3, 2.0, 9.0, 25.0] {
            let a = env.agent_law(1, Belief::from_llr(x)).unwrap();
            let b = env.agent_law(1, Belief::from_llr(-x)).unwrap();
            assert!((a.up + b.down).abs() < 1e-12 * a.down.abs().max(1.0));
            assert!((a.down + b.up).abs() < 1e-12 * a.down.abs().max(1.0));
            assert!((a.low_given_high - (1.0 - b.low_given_low)).abs() < 1e-15);
        }
    }
}
