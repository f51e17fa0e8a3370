//! Symmetric tail-regular private-belief distributions.
//!
//! A private belief `q` is the posterior on the high state given the agent's
//! own signal. Its unconditional CDF `F` is symmetric (`F(q) + F(1-q) = 1`)
//! and tail-regular with exponent `α`: `F(q) = Θ(q^α)` as `q → 0`. The
//! state-conditional laws follow from `F` alone:
//!
//! ```text
//! F_h(q) = 2 (q F(q) - ∫₀^q F)
//! F_ℓ(q) = 2 ((1-q) F(q) + ∫₀^q F)
//! ```
//!
//! The built-in family is the mirrored power law
//! `F(q) = ½ (2q)^α` on `[0, ½]`, reflected about `½`. With `α = 1` it is the
//! uniform law. All of `∫₀^q F`, `F_h`, `F_ℓ` have closed forms for it; the
//! generic quadrature route in [`conditional_cdf_numeric`] is kept as an
//! independent cross-check.

use serde::{Deserialize, Serialize};

use crate::quadrature::{adaptive_simpson, adaptive_simpson_log};
use crate::{Error, Result, Side, State};

/// Absolute tolerance of the generic conditional-CDF quadrature.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Power,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Power => f.write_str("power"),
        }
    }
}

/// Outcome of the `∫₀¹ 1/F` test that separates efficient from inefficient
/// learning under full disclosure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EfficiencyIntegral {
    Finite { value: f64 },
    Divergent,
}

impl EfficiencyIntegral {
    pub fn is_finite(&self) -> bool {
        matches!(self, EfficiencyIntegral::Finite { .. })
    }
}

/// The signal triple `(F, F_h, F_ℓ)`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModel {
    alpha: f64,
    family: Family,
    epsilon_f: f64,
}

impl SignalModel {
    pub fn new(family: Family, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::config(
                "distribution.alpha",
                format!("tail exponent must be finite and positive, got {alpha}"),
            ));
        }
        let mut model = SignalModel {
            alpha,
            family,
            epsilon_f: 0.0,
        };
        let lo = 1.0 - model.cdf_conditional_unchecked(Side::Low, 0.5);
        let hi = model.cdf_conditional_unchecked(Side::High, 0.5);
        model.epsilon_f = lo.min(hi);
        Ok(model)
    }

    /// The mirrored power family with tail exponent `alpha`.
    pub fn power(alpha: f64) -> Result<Self> {
        Self::new(Family::Power, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Unconditional CDF `F(q)`. Arguments outside `[0, 1]` are clamped.
    pub fn cdf(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self.family {
            Family::Power => {
                if q <= 0.5 {
                    0.5 * (2.0 * q).powf(self.alpha)
                } else {
                    1.0 - 0.5 * (2.0 * (1.0 - q)).powf(self.alpha)
                }
            }
        }
    }

    /// Unconditional density `F'(q)`.
    pub fn density(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self.family {
            Family::Power => {
                let x = if q <= 0.5 { 2.0 * q } else { 2.0 * (1.0 - q) };
                self.alpha * x.powf(self.alpha - 1.0)
            }
        }
    }

    /// State-conditional density: `2q F'(q)` under `h`, `2(1-q) F'(q)` under `ℓ`.
    pub fn density_conditional(&self, state: State, q: f64) -> f64 {
        let w = match state {
            Side::High => 2.0 * q,
            Side::Low => 2.0 * (1.0 - q),
        };
        w * self.density(q)
    }

    /// `∫₀^q F(x) dx`.
    pub fn cdf_integral(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self.family {
            Family::Power => {
                let a1 = self.alpha + 1.0;
                if q <= 0.5 {
                    (2.0 * q).powf(a1) / (4.0 * a1)
                } else {
                    (q - 0.5) + (2.0 * (1.0 - q)).powf(a1) / (4.0 * a1)
                }
            }
        }
    }

    /// `F_h(q)` or `F_ℓ(q)`; `q` must lie in `[0, 1]`.
    pub fn cdf_conditional(&self, state: State, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain {
                what: "q",
                value: q,
                domain: "[0, 1]",
            });
        }
        Ok(self.cdf_conditional_unchecked(state, q))
    }

    pub(crate) fn cdf_conditional_unchecked(&self, state: State, q: f64) -> f64 {
        if q <= 0.5 {
            self.lower_tail(state, q)
        } else {
            1.0 - self.lower_tail(state.opposite(), 1.0 - q)
        }
    }

    /// Conditional CDF on `[0, ½]` in closed form. For the power family,
    /// with `x = 2q`:
    /// `F_h = α x^{α+1} / (2(α+1))`, `F_ℓ = x^α (1 - αq/(α+1))`.
    fn lower_tail(&self, state: State, q: f64) -> f64 {
        match self.family {
            Family::Power => {
                let a = self.alpha;
                let x = 2.0 * q;
                match state {
                    Side::High => a * x.powf(a + 1.0) / (2.0 * (a + 1.0)),
                    Side::Low => x.powf(a) * (1.0 - a * q / (a + 1.0)),
                }
            }
        }
    }

    /// Returns `(F_θ(c), 1 - F_θ(c))` given both `c` and `1 - c`, each
    /// evaluated on whichever side keeps full relative precision. Callers
    /// that hold a cutoff in LLR form pass an accurate complement.
    pub fn cdf_and_survival(&self, state: State, c: f64, c_comp: f64) -> (f64, f64) {
        if c <= 0.5 {
            let lo = self.lower_tail(state, c);
            (lo, 1.0 - lo)
        } else {
            let sf = self.lower_tail(state.opposite(), c_comp);
            (1.0 - sf, sf)
        }
    }

    /// Inverse-CDF sample of the private belief under `state`.
    ///
    /// Bisection on `F_state` until the bracket collapses to adjacent floats,
    /// which also gives `|F_state(q) - u| ≤ 1e-12`.
    pub fn sample_private_belief(&self, state: State, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain {
                what: "u",
                value: u,
                domain: "(0, 1)",
            });
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f = self.cdf_conditional_unchecked(state, mid);
            if f < u {
                lo = mid;
            } else if f > u {
                hi = mid;
            } else {
                return Ok(mid);
            }
        }
        let flo = self.cdf_conditional_unchecked(state, lo);
        let fhi = self.cdf_conditional_unchecked(state, hi);
        let q = if (u - flo).abs() <= (fhi - u).abs() { lo } else { hi };
        Ok(q.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }

    /// `ε_F = min{P_ℓ[q ≥ ½], P_h[q < ½]}`, the probability of a moderate
    /// signal that contradicts the state.
    pub fn epsilon_f(&self) -> f64 {
        self.epsilon_f
    }

    /// Classifies `∫₀¹ 1/F` as finite or divergent.
    ///
    /// Integrates on `[δ, 1]` for `δ = 1e-2, 1e-4, …, 1e-12`. The integral is
    /// finite when the relative change at the finest `δ` is at most `1e-3`, or
    /// when successive increments contract geometrically (ratio ≤ 0.9); the
    /// reported value adds the geometric tail estimate.
    pub fn efficiency_integral(&self) -> EfficiencyIntegral {
        let partials = self.efficiency_partials();
        classify_refinements(&partials)
    }

    /// `∫_δ^1 1/F` for the refinement ladder `δ = 1e-2 … 1e-12`.
    pub fn efficiency_partials(&self) -> Vec<f64> {
        let upper = adaptive_simpson(|x| 1.0 / self.cdf(x), 0.5, 1.0, 1e-12, 40);
        let mut acc = upper;
        let mut prev = 0.5;
        let mut out = Vec::with_capacity(6);
        for k in 1..=6 {
            let delta = 10f64.powi(-2 * k);
            let piece = adaptive_simpson_log(|x| 1.0 / self.cdf(x), delta, prev, 1e-10 * acc, 50);
            acc += piece;
            out.push(acc);
            prev = delta;
        }
        out
    }
}

fn classify_refinements(partials: &[f64]) -> EfficiencyIntegral {
    let n = partials.len();
    let last = partials[n - 1];
    let d_last = last - partials[n - 2];
    let d_prev = partials[n - 2] - partials[n - 3];
    let rel_change = d_last / last.abs();
    let ratio = if d_prev > 0.0 { d_last / d_prev } else { 0.0 };
    if rel_change <= 1e-3 || ratio <= 0.9 {
        let tail = if ratio < 1.0 {
            d_last * ratio / (1.0 - ratio)
        } else {
            0.0
        };
        EfficiencyIntegral::Finite { value: last + tail }
    } else {
        EfficiencyIntegral::Divergent
    }
}

/// `F_θ(q)` from the integral identities with `∫₀^q F` computed by adaptive
/// Simpson on `model.cdf`. Independent of the closed forms.
pub fn conditional_cdf_numeric(model: &SignalModel, state: State, q: f64) -> f64 {
    let q = q.clamp(0.0, 1.0);
    let integral = adaptive_simpson(|x| model.cdf(x), 0.0, q.min(0.5), QUADRATURE_TOL, 50)
        + if q > 0.5 {
            adaptive_simpson(|x| model.cdf(x), 0.5, q, QUADRATURE_TOL, 50)
        } else {
            0.0
        };
    let f = model.cdf(q);
    match state {
        Side::High => 2.0 * (q * f - integral),
        Side::Low => 2.0 * ((1.0 - q) * f + integral),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(a: f64) -> SignalModel {
        SignalModel::power(a).unwrap()
    }

    #[test]
    fn rejects_bad_alpha() {
        for a in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(SignalModel::power(a), Err(Error::Config { .. })));
        }
    }

    #[test]
    fn uniform_case_is_identity() {
        let m = power(1.0);
        for q in [0.0, 0.1, 0.3, 0.5, 0.7, 1.0] {
            assert!((m.cdf(q) - q).abs() < 1e-15);
        }
        assert!((m.cdf(0.3) - 0.3).abs() < 1e-15);
        assert!((m.cdf(0.7) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn half_power_at_one_eighth() {
        let m = power(0.5);
        assert!((m.cdf(0.125) - 0.25).abs() < 1e-15);
        // independent route: integrate the density
        let numeric = adaptive_simpson_log(|x| m.density(x), 1e-14, 0.125, 1e-13, 60);
        assert!((numeric - 0.25).abs() < 1e-6);
    }

    #[test]
    fn tail_constant_exists() {
        // F(q)/q^α → 2^{α-1}
        for a in [0.5, 1.0, 1.5] {
            let m = power(a);
            let r = m.cdf(1e-9) / 1e-9f64.powf(a);
            assert!((r - 2f64.powf(a - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_conditional_cdfs() {
        let m = power(1.0);
        assert!((m.cdf_conditional(Side::High, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((m.cdf_conditional(Side::Low, 0.5).unwrap() - 0.75).abs() < 1e-15);
        // quadrature oracle
        assert!((conditional_cdf_numeric(&m, Side::High, 0.5) - 0.25).abs() < 2e-10);
        assert!((conditional_cdf_numeric(&m, Side::Low, 0.5) - 0.75).abs() < 2e-10);
        for a in [0.3, 1.0, 2.5] {
            let m = power(a);
            assert_eq!(m.cdf_conditional(Side::High, 1.0).unwrap(), 1.0);
            assert_eq!(m.cdf_conditional(Side::Low, 1.0).unwrap(), 1.0);
            assert_eq!(m.cdf_conditional(Side::Low, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for a in [0.25, 0.5, 1.0, 1.5, 3.0] {
            let m = power(a);
            for i in 1..40 {
                let q = i as f64 / 40.0;
                for s in [Side::High, Side::Low] {
                    let closed = m.cdf_conditional(s, q).unwrap();
                    let numeric = conditional_cdf_numeric(&m, s, q);
                    assert!((closed - numeric).abs() < 1e-9, "a={a} q={q} {s:?}");
                }
            }
        }
    }

    #[test]
    fn conditional_domain_errors() {
        let m = power(1.0);
        assert!(m.cdf_conditional(Side::High, -0.1).is_err());
        assert!(m.cdf_conditional(Side::Low, 1.1).is_err());
        assert!(m.sample_private_belief(Side::High, 0.0).is_err());
        assert!(m.sample_private_belief(Side::High, 1.0).is_err());
    }

    #[test]
    fn bisection_matches_analytic_inverse() {
        let m = power(1.0);
        let q = m.sample_private_belief(Side::High, 0.25).unwrap();
        assert!((q - 0.5).abs() < 1e-9);
        let q = m.sample_private_belief(Side::Low, 0.75).unwrap();
        assert!((q - 0.5).abs() < 1e-9);
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let qh = m.sample_private_belief(Side::High, u).unwrap();
            let ql = m.sample_private_belief(Side::Low, u).unwrap();
            assert!((qh - u.sqrt()).abs() < 1e-9);
            assert!((ql - (1.0 - (1.0 - u).sqrt())).abs() < 1e-9);
            assert!((m.cdf_conditional(Side::High, qh).unwrap() - u).abs() <= 1e-12);
        }
    }

    #[test]
    fn epsilon_values() {
        assert!((power(1.0).epsilon_f() - 0.25).abs() < 1e-15);
        // quadrature oracle: F_h(½) = 2(½F(½) - ∫₀^½ F)
        let m = power(0.5);
        let oracle = conditional_cdf_numeric(&m, Side::High, 0.5);
        assert!((oracle - 1.0 / 6.0).abs() < 1e-9);
        assert!((m.epsilon_f() - oracle).abs() < 1e-9);
        assert!(m.epsilon_f() > 0.0 && m.epsilon_f() < 0.5);
        for a in [0.2, 0.7, 1.3, 4.0] {
            let m = power(a);
            let l = 1.0 - m.cdf_conditional(Side::Low, 0.5).unwrap();
            let h = m.cdf_conditional(Side::High, 0.5).unwrap();
            assert!((l - h).abs() < 1e-15);
        }
    }

    #[test]
    fn efficiency_integral_values() {
        match power(0.5).efficiency_integral() {
            EfficiencyIntegral::Finite { value } => {
                let closed = 2.0 + 2.0 * (-1.0 + 2.0 * std::f64::consts::LN_2);
                assert!((value - closed).abs() < 1e-2, "{value}");
                assert!((value - closed).abs() < 1e-5, "{value}");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(power(1.0).efficiency_integral(), EfficiencyIntegral::Divergent);
        assert_eq!(power(1.5).efficiency_integral(), EfficiencyIntegral::Divergent);
    }

    #[test]
    fn efficiency_classification_matches_threshold() {
        for a in [0.1, 0.25, 0.5, 0.7, 0.8, 0.9, 0.95, 1.0, 1.05, 1.25, 1.5, 2.0, 3.0] {
            let finite = power(a).efficiency_integral().is_finite();
            assert_eq!(finite, a < 1.0, "alpha={a}");
        }
    }

    #[test]
    fn survival_pair_is_precise_near_one() {
        let m = power(1.0);
        let c_comp = 1e-20;
        let (f, sf) = m.cdf_and_survival(Side::High, 1.0 - c_comp, c_comp);
        // 1 - F_h(1 - x) = F_ℓ(x) = 2x - x²
        assert!((sf - 2e-20).abs() < 1e-32);
        assert_eq!(f, 1.0);
    }
}
