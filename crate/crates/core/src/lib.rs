//! # herdlab
//!
//! A laboratory for sequential Bayesian social learning when a planner
//! intervenes with information disclosure and monetary transfers.
//!
//! Agents arrive one at a time, see a social belief `ν` chosen by the
//! planner's disclosure policy, receive a transfer `τ(ν)` and a private
//! belief `q`, and pick the high action iff `q ≥ c(ν, τ)`. The planner
//! watches every action and tracks its own belief `π` (or its log-likelihood
//! ratio `ℓ`).
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`signals`] | symmetric tail-regular private-belief laws `F`, `F_h`, `F_ℓ` |
//! | [`decision`] | posterior, cutoff, agent and pre-signal actions |
//! | [`policy`] | disclosure policies, transfer schemes, dictated cutoffs |
//! | [`engine`] | Monte Carlo trajectories, exact LLR-grid evolution, last-k DP |
//! | [`metrics`] | per-period mistake/transfer statistics, efficiency diagnostics |
//! | [`lab`] | executable lemma checks with a fixed tolerance table |
//! | [`config`] / [`runner`] | declarative experiments, CSV/JSON outputs, sweeps |
//!
//! ```
//! use herdlab::signals::SignalModel;
//! use herdlab::decision::cutoff;
//!
//! let model = SignalModel::power(1.0).unwrap();
//! assert!((model.epsilon_f() - 0.25).abs() < 1e-15);
//! assert!((cutoff(0.8, 0.0).unwrap() - 0.2).abs() < 1e-15);
//! ```

pub mod config;
pub mod decision;
pub mod engine;
pub mod error;
pub mod lab;
pub mod metrics;
pub mod policy;
pub mod quadrature;
pub mod runner;
pub mod signals;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// One of the two states of the world, or one of the two actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    High,
    Low,
}

pub type State = Side;
pub type Action = Side;

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::High => Side::Low,
            Side::Low => Side::High,
        }
    }

    pub fn is_high(self) -> bool {
        matches!(self, Side::High)
    }
}
