//! The agent's Bayesian layer.
//!
//! An agent with social belief `ν`, transfer `τ` (positive subsidizes the
//! high action) and private belief `q` takes the high action iff
//! `q ≥ c(ν, τ)`, where
//!
//! ```text
//! c(ν, τ) = (1-ν)(1-τ) / [ν(1+τ) + (1-ν)(1-τ)]
//! ```
//!
//! Ties resolve to the high action.

use crate::{Action, Error, Result, Side};

/// Beliefs closer than this to 0 or 1 are floored before CDF evaluation.
pub const CUTOFF_FLOOR: f64 = 3.139_132_792_048_739e-17; // e^-38

/// A probability on the high state, held as its log-likelihood ratio so that
/// both `p` and `1 - p` are available to full relative precision.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Belief {
    llr: f64,
}

impl Belief {
    pub const NEUTRAL: Belief = Belief { llr: 0.0 };

    pub fn from_llr(llr: f64) -> Self {
        Belief { llr }
    }

    pub fn from_prob(p: f64) -> Self {
        if p == 0.5 {
            return Belief::NEUTRAL;
        }
        Belief {
            llr: p.ln() - (-p).ln_1p(),
        }
    }

    pub fn llr(self) -> f64 {
        self.llr
    }

    /// `p = e^ℓ / (1 + e^ℓ)`.
    pub fn prob(self) -> f64 {
        sigmoid(self.llr)
    }

    /// `1 - p`, computed without cancellation.
    pub fn complement(self) -> f64 {
        sigmoid(-self.llr)
    }

    pub fn flip(self) -> Self {
        Belief { llr: -self.llr }
    }
}

/// Logistic function, stable for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

fn check_interior(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            domain: "(0, 1)",
        })
    }
}

fn check_transfer(tau: f64) -> Result<()> {
    if tau.is_finite() && tau.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::config(
            "tau",
            format!("|τ| = {} ≥ 1 would make one action strictly dominant", tau.abs()),
        ))
    }
}

/// What agent `t` sees before acting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentContext {
    pub nu: f64,
    pub tau: f64,
    pub q: f64,
}

impl AgentContext {
    pub fn new(nu: f64, tau: f64, q: f64) -> Result<Self> {
        check_interior("nu", nu)?;
        check_interior("q", q)?;
        check_transfer(tau)?;
        Ok(AgentContext { nu, tau, q })
    }

    pub fn posterior(&self) -> f64 {
        posterior_unchecked(self.q, self.nu)
    }

    pub fn cutoff(&self) -> f64 {
        cutoff_unchecked(self.nu, self.tau)
    }

    pub fn action(&self) -> Action {
        if self.q >= self.cutoff() {
            Side::High
        } else {
            Side::Low
        }
    }

    pub fn presignal_action(&self) -> Action {
        presignal_unchecked(self.nu, self.tau)
    }
}

/// Posterior from private belief `q` and social belief `nu`:
/// `p/(1-p) = q/(1-q) · ν/(1-ν)`.
pub fn posterior(q: f64, nu: f64) -> Result<f64> {
    check_interior("q", q)?;
    check_interior("nu", nu)?;
    Ok(posterior_unchecked(q, nu))
}

fn posterior_unchecked(q: f64, nu: f64) -> f64 {
    let num = q * nu;
    num / (num + (1.0 - q) * (1.0 - nu))
}

/// Private-belief cutoff `c(ν, τ)`, evaluated as written in probability
/// coordinates.
pub fn cutoff(nu: f64, tau: f64) -> Result<f64> {
    check_interior("nu", nu)?;
    check_transfer(tau)?;
    Ok(cutoff_unchecked(nu, tau))
}

fn cutoff_unchecked(nu: f64, tau: f64) -> f64 {
    let low = (1.0 - nu) * (1.0 - tau);
    low / (nu * (1.0 + tau) + low)
}

/// The cutoff as a [`Belief`], computed in LLR coordinates:
/// `logit c = -logit ν + ln((1-τ)/(1+τ))`. Agrees with [`cutoff`] and keeps
/// `1 - c` precise when `ν → 0`.
pub fn cutoff_belief(nu: Belief, tau: f64) -> Belief {
    let shift = if tau == 0.0 {
        0.0
    } else {
        (-tau).ln_1p() - tau.ln_1p()
    };
    Belief::from_llr(-nu.llr() + shift)
}

/// Clamps a cutoff into `[e^-38, 1 - e^-38]`. Returns whether it moved.
pub fn floor_cutoff(c: Belief) -> (Belief, bool) {
    let bound = -logit(CUTOFF_FLOOR);
    if c.llr() < -bound {
        (Belief::from_llr(-bound), true)
    } else if c.llr() > bound {
        (Belief::from_llr(bound), true)
    } else {
        (c, false)
    }
}

/// `h` iff `q ≥ c(ν, τ)`.
pub fn decide(q: f64, nu: f64, tau: f64) -> Result<Action> {
    Ok(AgentContext::new(nu, tau, q)?.action())
}

/// The action on social information alone:
/// `h` iff `ν/(1-ν) ≥ (1-τ)/(1+τ)`.
pub fn presignal_action(nu: f64, tau: f64) -> Result<Action> {
    check_interior("nu", nu)?;
    check_transfer(tau)?;
    Ok(presignal_unchecked(nu, tau))
}

fn presignal_unchecked(nu: f64, tau: f64) -> Action {
    if nu * (1.0 + tau) >= (1.0 - nu) * (1.0 - tau) {
        Side::High
    } else {
        Side::Low
    }
}

/// Pre-signal action from a cutoff: an uninformative private belief `½`
/// clears the bar iff `c ≤ ½`.
pub fn presignal_from_cutoff(c: Belief) -> Action {
    if c.llr() <= 0.0 {
        Side::High
    } else {
        Side::Low
    }
}
