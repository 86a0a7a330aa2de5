//! Gevrey norms `‖e^{σ|ξ|}⟨ξ⟩^s f̂‖`, the weighted charges built from them,
//! analytic test profiles and a decay-rate estimator for the strip of
//! analyticity.
//!
//! Two normalisations are exposed. [`gevrey_norm`] is the literal frequency-side
//! `L²_ξ` norm, a Riemann sum with weight `π/L`. Everything used in the
//! evolution bookkeeping ([`charge`], [`m_sigma`], [`n_sigma`], ...) uses the
//! physical-space normalisation [`gevrey_norm_x`], which is smaller by
//! `√(2π)` and coincides with `‖f‖_{L²_x}` at `σ = s = 0`.

mod generators;
mod ledger;
mod radius;

pub use generators::{gaussian, poisson_kernel, sech_profile, Profile, BOUNDARY_TOL};
pub use ledger::{LedgerRow, NormLedger, WaveNorms, LEDGER_SCHEMA_VERSION};
pub use radius::{
    estimate_radius, estimate_radius_default, estimate_radius_envelope, max_resolvable_radius,
    FitWindow, RadiusFit, DEFAULT_FLOOR_REL, MIN_FIT_MODES,
};

use std::f64::consts::PI;

use crate::dkg::{recombine, DkgState, SpinorPair, WavePair};
use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Sign};

/// Coefficients below this fraction of the largest one are treated as noise
/// and dropped before exponential weighting.
pub const NOISE_FLOOR_REL: f64 = 1e-13;

/// A norm at `σ` within this relative distance of the fitted decay rate is
/// reported as divergent.
pub const STRIP_MARGIN: f64 = 0.02;

/// Largest rms log-residual for which a fitted decay rate is trusted as a
/// genuine exponential tail when deciding divergence.
pub const STRIP_FIT_RESIDUAL: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GevreyParams {
    pub sigma: f64,
    pub s: f64,
}

impl GevreyParams {
    pub fn new(sigma: f64, s: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("Sobolev index must be finite, got {s}")));
        }
        Ok(Self { sigma, s })
    }

    /// Squared weight `e^{2σ|ξ|}⟨ξ⟩^{2s}`.
    fn weight_sq(&self, xi: f64) -> f64 {
        let w = (2.0 * self.sigma * xi.abs()).exp();
        if self.s == 0.0 {
            w
        } else {
            w * (1.0 + xi * xi).powf(self.s)
        }
    }
}

/// Result of a norm evaluation that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormValue {
    Finite(f64),
    /// The weighted spectrum does not decay: either the weight overflows or
    /// `σ` reaches the fitted decay rate of the coefficients.
    Divergent { mode: i64, xi: f64 },
}

impl NormValue {
    /// Numeric value, `+∞` when divergent.
    pub fn value(&self) -> f64 {
        match *self {
            NormValue::Finite(v) => v,
            NormValue::Divergent { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, NormValue::Finite(_))
    }

    fn map(self, f: impl FnOnce(f64) -> f64) -> NormValue {
        match self {
            NormValue::Finite(v) => NormValue::Finite(f(v)),
            d => d,
        }
    }
}

/// `Σ_k w(ξ_k) |ĉ_k|²` over coefficients above the noise floor, or the first
/// mode where the weighted term overflows.
fn weighted_sum_raw(f: &ComplexField, weight_sq: impl Fn(f64) -> f64) -> NormValue {
    weighted_sum_floor(f, NOISE_FLOOR_REL * f.max_abs_coeff(), weight_sq)
}

fn weighted_sum_floor(f: &ComplexField, floor: f64, weight_sq: impl Fn(f64) -> f64) -> NormValue {
    let grid = f.grid();
    let mut sum = 0.0;
    for (j, (c, &xi)) in f.coeffs().iter().zip(grid.frequencies()).enumerate() {
        let a = c.norm();
        if a <= floor {
            continue;
        }
        let term = weight_sq(xi) * a * a;
        if !term.is_finite() {
            return NormValue::Divergent { mode: grid.mode_of_index(j), xi };
        }
        sum += term;
    }
    if sum.is_finite() {
        NormValue::Finite(sum)
    } else {
        NormValue::Divergent { mode: grid.mode_of_index(grid.num_modes() - 1), xi: grid.xi_max() }
    }
}

/// Checks whether `σ` lies at or beyond the decay rate of a clean
/// exponential tail in `f`, returning the highest retained mode of the fit
/// window if so.
fn strip_divergence(f: &ComplexField, sigma: f64) -> Option<NormValue> {
    if sigma <= 0.0 {
        return None;
    }
    let fit = estimate_radius_default(f).ok()?;
    if !fit.lower_bound && fit.sigma > 0.0 && fit.residual <= STRIP_FIT_RESIDUAL && sigma >= (1.0 - STRIP_MARGIN) * fit.sigma {
        let grid = f.grid();
        Some(NormValue::Divergent { mode: grid.mode_of_index(fit.last_index), xi: grid.frequencies()[fit.last_index].abs() })
    } else {
        None
    }
}

/// Squared Gevrey sum `Σ e^{2σ|ξ|}⟨ξ⟩^{2s}|ĉ|²` without normalisation, with
/// the strip check applied.
fn gevrey_sum(f: &ComplexField, p: GevreyParams) -> NormValue {
    if let Some(d) = strip_divergence(f, p.sigma) {
        return d;
    }
    weighted_sum_raw(f, |xi| p.weight_sq(xi))
}

/// Frequency-side norm `‖e^{σ|ξ|}⟨ξ⟩^s ĉ‖_{L²_ξ}` with Riemann weight `π/L`.
pub fn gevrey_norm(f: &ComplexField, p: GevreyParams) -> NormValue {
    let w = PI / f.grid().half_length();
    gevrey_sum(f, p).map(|s| (s * w).sqrt())
}

/// Physical-space normalised norm, `gevrey_norm / √(2π)`.
pub fn gevrey_norm_x(f: &ComplexField, p: GevreyParams) -> NormValue {
    let w = 1.0 / (2.0 * f.grid().half_length());
    gevrey_sum(f, p).map(|s| (s * w).sqrt())
}

/// [`gevrey_norm_x`] without the strip check, for fields already known to be
/// admissible (iterates, differences, forcing terms). Divergence only on
/// overflow.
pub(crate) fn norm_x_fast(f: &ComplexField, sigma: f64, s: f64) -> f64 {
    let p = GevreyParams { sigma, s };
    let w = 1.0 / (2.0 * f.grid().half_length());
    (weighted_sum_raw(f, |xi| p.weight_sq(xi)).value() * w).sqrt()
}

/// [`norm_x_fast`] with an absolute noise floor, for differences of fields
/// whose round-off level is set by the fields themselves.
pub(crate) fn norm_x_floor(f: &ComplexField, sigma: f64, s: f64, floor: f64) -> f64 {
    let p = GevreyParams { sigma, s };
    let w = 1.0 / (2.0 * f.grid().half_length());
    (weighted_sum_floor(f, floor, |xi| p.weight_sq(xi)).value() * w).sqrt()
}

/// `‖ψ₊‖² + ‖ψ₋‖²` in `L²_x`.
pub fn charge(sp: &SpinorPair) -> f64 {
    sp.plus.l2_norm_sq() + sp.minus.l2_norm_sq()
}

/// Weighted charges at radius `σ`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MSigma {
    /// `𝔐_σ = 𝔐_{σ,-1} + 𝔐_{σ,+1}`
    pub total: f64,
    /// `‖e^{-σD}ψ₊‖² + ‖e^{-σD}ψ₋‖²`
    pub minus: f64,
    /// `‖e^{σD}ψ₊‖² + ‖e^{σD}ψ₋‖²`
    pub plus: f64,
}

fn signed_sq(f: &ComplexField, eps: Sign, sigma: f64) -> f64 {
    if let Some(NormValue::Divergent { .. }) = strip_divergence(f, sigma) {
        return f64::INFINITY;
    }
    let e = eps.value();
    let w = 1.0 / (2.0 * f.grid().half_length());
    weighted_sum_raw(f, |xi| (2.0 * e * sigma * xi).exp()).value() * w
}

/// `𝔐_{σ,ε}` for a single sign.
pub fn m_sigma_eps(sp: &SpinorPair, sigma: f64, eps: Sign) -> f64 {
    signed_sq(&sp.plus, eps, sigma) + signed_sq(&sp.minus, eps, sigma)
}

pub fn m_sigma(sp: &SpinorPair, sigma: f64) -> MSigma {
    let minus = m_sigma_eps(sp, sigma, Sign::Minus);
    let plus = m_sigma_eps(sp, sigma, Sign::Plus);
    MSigma { total: minus + plus, minus, plus }
}

/// `𝔐'_σ = ‖ψ₊‖²_{G^{σ,0}} + ‖ψ₋‖²_{G^{σ,0}}`.
pub fn m_prime(sp: &SpinorPair, sigma: f64) -> f64 {
    let p = GevreyParams { sigma, s: 0.0 };
    gevrey_norm_x(&sp.plus, p).value().powi(2) + gevrey_norm_x(&sp.minus, p).value().powi(2)
}

/// `𝔑_σ = ‖φ₊‖_{G^{σ,1}} + ‖φ₋‖_{G^{σ,1}}`.
pub fn n_sigma(wp: &WavePair, sigma: f64) -> f64 {
    let p = GevreyParams { sigma, s: 1.0 };
    gevrey_norm_x(&wp.plus, p).value() + gevrey_norm_x(&wp.minus, p).value()
}

/// `(‖φ‖_{L²}, 𝔑'_σ)` with `𝔑'_σ = Σ_± ‖|D|Φ_±‖_{G^{σ,0}}`.
///
/// Uses `|D|Φ_± = ½(|D|φ ± i∂_tφ)` on the mean-zero part, so it applies to
/// either mass case.
pub fn n_prime(state: &DkgState, sigma: f64) -> (f64, f64) {
    let r = recombine(state);
    let abs_phi = crate::spectral::apply_multiplier(&r.phi, crate::spectral::Multiplier::Abs)
        .expect("|D| is always admissible");
    let dphi0 = r.dphi.clone().without_mean();
    let i = crate::Complex64::new(0.0, 1.0);
    let p = GevreyParams { sigma, s: 0.0 };
    let mut total = 0.0;
    for s in [1.0, -1.0] {
        let big = abs_phi.zip_with(&dphi0, |a, b| 0.5 * (a + i * s * b));
        total += gevrey_norm_x(&big, p).value();
    }
    (r.phi.l2_norm(), total)
}
