//! Planner instruments: disclosure policies, transfer schemes and the
//! dictated-cutoff benchmark.
//!
//! Every disclosure policy induces a social belief `ν` that is a
//! mean-preserving contraction of the planner's belief `π`. A policy is
//! described by its conditional law of `ν` given `π` (see
//! [`DisclosurePolicy::branches`]); [`disclose`] samples that law with one
//! uniform draw, and the exact engine integrates over it. Arbitrary
//! contractions can be approximated by composing binary splits; only a single
//! split is provided.

use serde::{Deserialize, Serialize};

use crate::decision::Belief;
use crate::engine::lastk::LastKLookup;
use crate::{Error, Result};

/// A value attached to a closed interval `[lo, hi]` of beliefs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalValue {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

fn lookup(entries: &[IntervalValue], x: f64, key: &str) -> Result<f64> {
    entries
        .iter()
        .find(|e| e.lo <= x && x <= e.hi)
        .map(|e| e.value)
        .ok_or_else(|| Error::config(key, format!("no table entry covers {x}")))
}

fn validate_intervals(entries: &[IntervalValue], key: &str, max_abs: f64, open: bool) -> Result<()> {
    if entries.is_empty() {
        return Err(Error::config(key, "table is empty"));
    }
    for (i, e) in entries.iter().enumerate() {
        if !(0.0 <= e.lo && e.lo <= e.hi && e.hi <= 1.0) {
            return Err(Error::config(
                format!("{key}[{i}]"),
                format!("interval [{}, {}] is not inside [0, 1]", e.lo, e.hi),
            ));
        }
        let ok = if open {
            e.value.abs() < max_abs
        } else {
            e.value.abs() <= max_abs
        };
        if !e.value.is_finite() || !ok {
            return Err(Error::config(
                format!("{key}[{i}].value"),
                format!("{} is out of range (limit {max_abs})", e.value),
            ));
        }
    }
    Ok(())
}

/// Reveal probability of the stochastic ("sacrificial lamb") policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonSchedule {
    Constant { value: f64 },
    /// `values[t-1]` for `t ≤ values.len()`, then `tail`.
    PerPeriod { values: Vec<f64>, tail: f64 },
    /// `ε(π)` over intervals of the planner's belief. Must be symmetric,
    /// `ε(π) = ε(1-π)`, so that an unrevealed agent's belief stays `½`.
    ByBelief { entries: Vec<IntervalValue> },
}

impl EpsilonSchedule {
    pub fn at(&self, t: usize, pi: f64) -> Result<f64> {
        match self {
            EpsilonSchedule::Constant { value } => Ok(*value),
            EpsilonSchedule::PerPeriod { values, tail } => {
                Ok(values.get(t.saturating_sub(1)).copied().unwrap_or(*tail))
            }
            EpsilonSchedule::ByBelief { entries } => lookup(entries, pi, "disclosure.epsilon.entries"),
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |v: f64, key: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(key, format!("reveal probability {v} not in [0, 1]")))
            }
        };
        match self {
            EpsilonSchedule::Constant { value } => check(*value, "disclosure.epsilon.value"),
            EpsilonSchedule::PerPeriod { values, tail } => {
                for (i, v) in values.iter().enumerate() {
                    check(*v, &format!("disclosure.epsilon.values[{i}]"))?;
                }
                check(*tail, "disclosure.epsilon.tail")
            }
            EpsilonSchedule::ByBelief { entries } => {
                validate_intervals(entries, "disclosure.epsilon.entries", 1.0, false)?;
                for e in entries {
                    check(e.value, "disclosure.epsilon.entries")?;
                }
                // probe between the usual breakpoints; an endpoint shared by two
                // entries resolves to the first one and cannot mirror exactly
                for i in 0..100 {
                    let p = (i as f64 + 0.5) / 100.0;
                    let a = lookup(entries, p, "disclosure.epsilon.entries")?;
                    let b = lookup(entries, 1.0 - p, "disclosure.epsilon.entries")?;
                    if a != b {
                        return Err(Error::config(
                            "disclosure.epsilon.entries",
                            format!("ε(π) must be symmetric: ε({p}) = {a} but ε({}) = {b}", 1.0 - p),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    fn is_stationary(&self) -> bool {
        !matches!(self, EpsilonSchedule::PerPeriod { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisclosurePolicy {
    /// `ν = π`.
    Full,
    /// `ν = ½`.
    NoDisclosure,
    /// `ν = P[θ = h | last k actions]`.
    LastK { k: usize },
    /// Reveal `π` with probability `ε`, else `ν = ½`.
    Stochastic { epsilon: EpsilonSchedule },
    /// Two-point mean-preserving split of `π ∈ [lo, hi]` onto `{lo, hi}`.
    BinarySplit { lo: f64, hi: f64 },
}

impl DisclosurePolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            DisclosurePolicy::Full | DisclosurePolicy::NoDisclosure => Ok(()),
            DisclosurePolicy::LastK { k } => {
                if (1..=crate::engine::lastk::MAX_K).contains(k) {
                    Ok(())
                } else {
                    Err(Error::config(
                        "disclosure.k",
                        format!("window length {k} outside 1..={}", crate::engine::lastk::MAX_K),
                    ))
                }
            }
            DisclosurePolicy::Stochastic { epsilon } => epsilon.validate(),
            DisclosurePolicy::BinarySplit { lo, hi } => {
                if *lo > 0.0 && lo <= hi && *hi < 1.0 {
                    Ok(())
                } else {
                    Err(Error::config(
                        "disclosure",
                        format!("binary split needs 0 < lo ≤ hi < 1, got lo={lo} hi={hi}"),
                    ))
                }
            }
        }
    }

    /// Whether the law of `ν` given `π` is the same in every period.
    pub fn is_stationary(&self) -> bool {
        match self {
            DisclosurePolicy::Stochastic { epsilon } => epsilon.is_stationary(),
            DisclosurePolicy::LastK { .. } => false,
            _ => true,
        }
    }

    /// The conditional law of `ν` given `π` at period `t`, as at most two
    /// `(probability, ν)` atoms. Not defined for [`DisclosurePolicy::LastK`],
    /// whose `ν` depends on the action window rather than on `π`.
    pub fn branches(&self, pi: Belief, t: usize) -> Result<Branches> {
        let mut out = Branches::new();
        match self {
            DisclosurePolicy::Full => out.push(1.0, pi),
            DisclosurePolicy::NoDisclosure => out.push(1.0, Belief::NEUTRAL),
            DisclosurePolicy::Stochastic { epsilon } => {
                let eps = epsilon.at(t, pi.prob())?;
                if eps > 0.0 {
                    out.push(eps, pi);
                }
                if eps < 1.0 {
                    out.push(1.0 - eps, Belief::NEUTRAL);
                }
            }
            DisclosurePolicy::BinarySplit { lo, hi } => {
                let p = pi.prob();
                if p < *lo || p > *hi || lo == hi {
                    out.push(1.0, pi);
                } else {
                    let w_hi = (p - lo) / (hi - lo);
                    if w_hi > 0.0 {
                        out.push(w_hi, Belief::from_prob(*hi));
                    }
                    if w_hi < 1.0 {
                        out.push(1.0 - w_hi, Belief::from_prob(*lo));
                    }
                }
            }
            DisclosurePolicy::LastK { .. } => {
                return Err(Error::EngineContract(
                    "last-k disclosure has no belief-indexed law; use the last-k table".into(),
                ))
            }
        }
        Ok(out)
    }
}

/// Induced social belief `ν_t` for planner belief `pi`. Deterministic given
/// its arguments; `u` is the period's disclosure uniform, and the branch
/// with cumulative weight first exceeding `u` is selected.
pub fn disclose(
    policy: &DisclosurePolicy,
    pi: Belief,
    t: usize,
    aux: Option<&LastKLookup<'_>>,
    u: f64,
) -> Result<Belief> {
    if let DisclosurePolicy::LastK { .. } = policy {
        let aux = aux.ok_or_else(|| {
            Error::EngineContract("last-k disclosure requires the current last-k table".into())
        })?;
        return Ok(aux.social_belief());
    }
    let branches = policy.branches(pi, t)?;
    let mut acc = 0.0;
    for (w, nu) in branches.iter() {
        acc += w;
        if u < acc {
            return Ok(nu);
        }
    }
    Ok(branches.last())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransferScheme {
    Zero,
    /// Subsidizes the action opposite to the one favoured by `ν` alone:
    /// `-τ` if `ν > ½`, `+τ` if `ν < ½`, `0` at `ν = ½`.
    ConstantContrarian { tau: f64 },
    /// `τ(ν)` from the first interval containing `ν`.
    Table { entries: Vec<IntervalValue> },
    /// One table per period; the last table repeats.
    Schedule { periods: Vec<Vec<IntervalValue>> },
}

impl TransferScheme {
    pub fn validate(&self) -> Result<()> {
        match self {
            TransferScheme::Zero => Ok(()),
            TransferScheme::ConstantContrarian { tau } => {
                if *tau >= 0.0 && *tau < 1.0 {
                    Ok(())
                } else {
                    Err(Error::config(
                        "transfers.tau",
                        format!("contrarian transfer must lie in [0, 1), got {tau}"),
                    ))
                }
            }
            TransferScheme::Table { entries } => validate_intervals(entries, "transfers.entries", 1.0, true),
            TransferScheme::Schedule { periods } => {
                if periods.is_empty() {
                    return Err(Error::config("transfers.periods", "schedule is empty"));
                }
                for (i, p) in periods.iter().enumerate() {
                    validate_intervals(p, &format!("transfers.periods[{i}]"), 1.0, true)?;
                }
                Ok(())
            }
        }
    }

    pub fn is_stationary(&self) -> bool {
        !matches!(self, TransferScheme::Schedule { .. })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TransferScheme::Zero => true,
            TransferScheme::ConstantContrarian { tau } => *tau == 0.0,
            _ => false,
        }
    }
}

/// `τ_t(ν)`.
pub fn transfer(scheme: &TransferScheme, nu: Belief, t: usize) -> Result<f64> {
    match scheme {
        TransferScheme::Zero => Ok(0.0),
        TransferScheme::ConstantContrarian { tau } => Ok(if nu.llr() > 0.0 {
            -tau
        } else if nu.llr() < 0.0 {
            *tau
        } else {
            0.0
        }),
        TransferScheme::Table { entries } => lookup(entries, nu.prob(), "transfers.entries"),
        TransferScheme::Schedule { periods } => {
            let table = &periods[(t.max(1) - 1).min(periods.len() - 1)];
            lookup(table, nu.prob(), "transfers.periods")
        }
    }
}

/// Tail rule of a dictated cutoff schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffTail {
    Constant { value: f64 },
    /// `c_t = scale · t^(-exponent)`.
    Power { scale: f64, exponent: f64 },
}

/// Benchmark mode in which the planner dictates each agent's cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictatedCutoffSchedule {
    #[serde(default)]
    pub prefix: Vec<f64>,
    pub tail: CutoffTail,
}

impl DictatedCutoffSchedule {
    pub fn at(&self, t: usize) -> f64 {
        if let Some(c) = self.prefix.get(t.saturating_sub(1)) {
            return *c;
        }
        match self.tail {
            CutoffTail::Constant { value } => value,
            CutoffTail::Power { scale, exponent } => scale * (t.max(1) as f64).powf(-exponent),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.prefix.iter().enumerate() {
            if !(*c > 0.0 && *c < 1.0) {
                return Err(Error::config(
                    format!("dictated_cutoffs.prefix[{i}]"),
                    format!("cutoff {c} is not interior"),
                ));
            }
        }
        match self.tail {
            CutoffTail::Constant { value } if !(value > 0.0 && value < 1.0) => Err(Error::config(
                "dictated_cutoffs.tail.value",
                format!("cutoff {value} is not interior"),
            )),
            CutoffTail::Power { scale, exponent }
                if !(scale > 0.0 && scale < 1.0 && exponent >= 0.0 && exponent.is_finite()) =>
            {
                Err(Error::config(
                    "dictated_cutoffs.tail",
                    "power tail needs 0 < scale < 1 and a finite exponent ≥ 0",
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.prefix.is_empty() && matches!(self.tail, CutoffTail::Constant { .. })
    }
}

/// Fixed-capacity list of `(weight, ν)` atoms.
#[derive(Debug, Clone, Copy)]
pub struct Branches {
    items: [(f64, Belief); 2],
    len: usize,
}

impl Default for Branches {
    fn default() -> Self {
        Self::new()
    }
}

impl Branches {
    pub fn new() -> Self {
        Branches {
            items: [(0.0, Belief::NEUTRAL); 2],
            len: 0,
        }
    }

    pub fn single(nu: Belief) -> Self {
        let mut b = Self::new();
        b.push(1.0, nu);
        b
    }

    pub fn push(&mut self, weight: f64, nu: Belief) {
        self.items[self.len] = (weight, nu);
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn last(&self) -> Belief {
        self.items[self.len - 1].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Belief)> + '_ {
        self.items[..self.len].iter().copied()
    }
}
