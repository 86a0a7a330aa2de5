//! Lower bounds `σ_cert(T) = min(σ₀, c/T⁴)` for the radius of analyticity on
//! `[0, T]`, obtained by iterating the local theory over `n` windows of
//! length `δ = T/n`, and their checking along simulated trajectories.
//!
//! With `δ ≤ c₀/(AT²)` the two conditions that let the induction reach `T` are
//!
//! ```text
//! n C σ δ^{1/2} (2𝔐)(4AT²) ≤ 𝔐        (σ small enough)
//! n C δ^{1/2} 2𝔐 ≤ AT²                (A large enough)
//! ```
//!
//! and `nδ^{1/2} = √(nT)`.

use rayon::prelude::*;

use crate::dkg::{evolve_with, recombine, split_data, CauchyData, DkgState, KgMass, Masses};
use crate::error::{Error, Result};
use crate::estimates::{loglog_slope, wave_quantity};
use crate::gevrey::{estimate_radius_envelope, m_sigma, n_prime};
use crate::picard::CalibratedConstants;

/// Least-squares envelope `‖φ(t)‖_{L²} ≤ α + βt²`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GrowthEnvelope {
    pub alpha: f64,
    pub beta: f64,
}

impl GrowthEnvelope {
    /// Fits `α + βt²` by least squares (with `β ≥ 0`), then raises `α` by the
    /// largest excess so that every sample lies on or below the envelope.
    pub fn fit(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch { expected: times.len(), got: values.len() });
        }
        if times.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if times.iter().chain(values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { mode: 0 });
        }
        let n = times.len() as f64;
        let xs: Vec<f64> = times.iter().map(|t| t * t).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = values.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
        let beta = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
        let alpha = xs.iter().zip(values).map(|(x, y)| y - beta * x).fold(f64::NEG_INFINITY, f64::max);
        let mut env = Self { alpha, beta };
        // `α + βt²` can round below the sample it was raised to.
        while env.margin(times, values) < 0.0 {
            env.alpha = env.alpha.next_up();
        }
        Ok(env)
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.alpha + self.beta * t * t
    }

    /// Smallest `bound(t) - value` over the samples.
    pub fn margin(&self, times: &[f64], values: &[f64]) -> f64 {
        times.iter().zip(values).map(|(&t, &v)| self.bound(t) - v).fold(f64::INFINITY, f64::min)
    }
}

/// Records `‖φ(t)‖_{L²}` at `samples` uniform times on `[0, t_end]` and fits
/// a [`GrowthEnvelope`]. Returns the envelope with the recorded series.
pub fn measure_growth(state: &DkgState, t_end: f64, dt: f64, samples: usize) -> Result<(GrowthEnvelope, Vec<f64>, Vec<f64>)> {
    let times: Vec<f64> = (0..=samples).map(|k| t_end * k as f64 / samples as f64).collect();
    let mut values = Vec::with_capacity(times.len());
    evolve_with(state, t_end, dt, &times, |s| {
        values.push(recombine(s).phi.l2_norm());
        Ok(())
    })?;
    let env = GrowthEnvelope::fit(&times, &values)?;
    Ok((env, times, values))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CertificateInputs {
    pub sigma0: f64,
    /// `𝔐_{σ₀}(0)`
    pub m0: f64,
    /// `𝔑_{σ₀}(0)`, or `‖φ(0)‖_{L²} + 𝔑'_{σ₀}(0)` when `m = 0`.
    pub n0: f64,
    pub masses: Masses,
    pub consts: CalibratedConstants,
    pub t_end: f64,
    /// Required for `m = 0`.
    pub growth: Option<GrowthEnvelope>,
}

impl CertificateInputs {
    pub fn from_state(state: &DkgState, sigma0: f64, consts: CalibratedConstants, t_end: f64) -> Self {
        Self {
            sigma0,
            m0: m_sigma(&state.spinors, sigma0).total,
            n0: wave_quantity(state, sigma0),
            masses: state.masses,
            consts,
            t_end,
            growth: None,
        }
    }

    pub fn with_growth(mut self, growth: GrowthEnvelope) -> Self {
        self.growth = Some(growth);
        self
    }

    fn validate(&self) -> Result<()> {
        self.consts.validate()?;
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma0 must be > 0, got {}", self.sigma0)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be > 0, got {}", self.t_end)));
        }
        for (name, v) in [("M_sigma0(0)", self.m0), ("N_sigma0(0)", self.n0)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct CertificateFlags {
    /// `𝔐 + 𝔑 ≤ T²`
    pub tlarge_ok: bool,
    /// `A ≥ 1` and `(2Cc₂𝔐)² ≤ A` (and `α + β ≤ A` for `m = 0`)
    pub a_condition_ok: bool,
    pub final1_ok: bool,
    pub final2_ok: bool,
    pub clamped_to_sigma0: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Certificate {
    pub inputs: CertificateInputs,
    pub a: f64,
    pub delta: f64,
    pub n: u64,
    pub sigma_cert: f64,
    /// `σ_cert·T⁴` of the unclamped value.
    pub c: f64,
    pub flags: CertificateFlags,
    pub valid: bool,
}

impl Certificate {
    /// `nδ^{1/2}`, evaluated as `√(nT)`.
    pub fn n_sqrt_delta(&self) -> f64 {
        (self.n as f64 * self.inputs.t_end).sqrt()
    }
}

/// `n = T/δ` for `δ = c₀/(AT²)`: rounded when within `1e-9` relative of an
/// integer (so exact cases are not pushed up by rounding), else rounded up,
/// which shrinks `δ`.
fn step_count(a: f64, t: f64, c0: f64) -> u64 {
    let q = a * t * t * t / c0;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * q {
        r.max(1.0) as u64
    } else {
        q.ceil().max(1.0) as u64
    }
}

fn sigma_formula(big_c: f64, nt_sqrt: f64, a: f64, t: f64) -> f64 {
    1.0 / (8.0 * big_c * nt_sqrt * a * (t * t))
}

/// Certificate for the `m = 1` bookkeeping (also used for `m = 0` through
/// [`m0_certified_radius`]).
pub fn certified_radius(inputs: &CertificateInputs) -> Result<Certificate> {
    inputs.validate()?;
    certify_with_floor(inputs, 1.0)
}

fn certify_with_floor(inputs: &CertificateInputs, a_floor: f64) -> Result<Certificate> {
    let CalibratedConstants { c0, big_c, c2 } = inputs.consts;
    let t = inputs.t_end;
    let m = inputs.m0;
    let tlarge_ok = m + inputs.n0 <= t * t;
    let a_min = (2.0 * big_c * c2 * m).powi(2).max(a_floor).max(1.0);
    let mut a = a_min;
    let mut n = step_count(a, t, c0);
    // Rounding n up raises nδ^{1/2} above c₂A^{1/2}T²; raise A until the
    // second condition holds exactly on the computed numbers.
    for _ in 0..200 {
        let lhs = 2.0 * big_c * (n as f64 * t).sqrt() * m;
        if lhs <= a * (t * t) {
            break;
        }
        a *= (lhs / (a * t * t)).powi(2).max(1.0 + 1e-12);
        n = step_count(a, t, c0);
    }
    let nt_sqrt = (n as f64 * t).sqrt();
    let formula = sigma_formula(big_c, nt_sqrt, a, t);
    let clamped = formula > inputs.sigma0;
    let sigma_cert = formula.min(inputs.sigma0);
    let flags = CertificateFlags {
        tlarge_ok,
        a_condition_ok: a >= a_min,
        final1_ok: sigma_cert <= sigma_formula(big_c, nt_sqrt, a, t),
        final2_ok: 2.0 * big_c * nt_sqrt * m <= a * (t * t),
        clamped_to_sigma0: clamped,
    };
    let valid = flags.tlarge_ok && flags.a_condition_ok && flags.final1_ok && flags.final2_ok;
    Ok(Certificate {
        inputs: *inputs,
        a,
        delta: t / n as f64,
        n,
        sigma_cert,
        c: formula * (t * t * t * t),
        flags,
        valid,
    })
}

/// Certificate for `m = 0`: `𝔑` is replaced by `‖φ(0)‖ + 𝔑'(0)` (already in
/// `inputs.n0`) and the cap `A` also covers the envelope, `α + β ≤ A`, so that
/// `‖φ(t)‖ ≤ AT²` on `[0, T]` for `T ≥ 1`.
pub fn m0_certified_radius(inputs: &CertificateInputs) -> Result<Certificate> {
    inputs.validate()?;
    if inputs.masses.kg != KgMass::Zero {
        return Err(Error::InvalidParameter("m0 certificate needs the massless Klein-Gordon field".into()));
    }
    let growth = inputs
        .growth
        .ok_or_else(|| Error::InvalidParameter("m0 certificate needs a growth envelope".into()))?;
    if !(growth.alpha.is_finite() && growth.beta.is_finite() && growth.beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("invalid growth envelope {growth:?}")));
    }
    certify_with_floor(inputs, growth.alpha.max(0.0) + growth.beta)
}

/// Certificate for either mass case.
pub fn certify(inputs: &CertificateInputs) -> Result<Certificate> {
    match inputs.masses.kg {
        KgMass::One => certified_radius(inputs),
        KgMass::Zero => m0_certified_radius(inputs),
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    /// Smallest `(bound - value)/bound` over the checkpoints.
    pub min_margin: f64,
    pub worst_t: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Verification {
    pub sigma: f64,
    pub t_end: f64,
    pub reached_t: f64,
    pub checkpoints: usize,
    pub hypotheses: Vec<HypothesisCheck>,
    pub sigma_hat_final: f64,
    pub radius_ok: bool,
    /// Set when the evolution stopped early.
    pub aborted: Option<String>,
    pub pass: bool,
}

struct Tracker {
    name: &'static str,
    min_margin: f64,
    worst_t: f64,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Self { name, min_margin: f64::INFINITY, worst_t: 0.0 }
    }

    fn observe(&mut self, t: f64, value: f64, bound: f64) {
        let margin = if bound > 0.0 {
            (bound - value) / bound
        } else if value <= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        if margin < self.min_margin {
            self.min_margin = margin;
            self.worst_t = t;
        }
    }

    fn finish(self) -> HypothesisCheck {
        HypothesisCheck { name: self.name.into(), min_margin: self.min_margin, worst_t: self.worst_t, holds: self.min_margin >= 0.0 }
    }
}

/// Evolves the data to `T` and checks, at `checkpoints` uniform times, the
/// hypotheses the induction relies on at `σ = σ_cert`:
///
/// * `𝔐_σ(t) ≤ 2𝔐_σ(0)` and `𝔑_σ(t) ≤ 2AT²`;
/// * `𝔐_σ(t) ≤ 𝔐_σ(0) + n_t Cσδ^{1/2}(2𝔐_σ(0))(4AT²)` and
///   `𝔑_σ(t) ≤ 𝔑_σ(0) + n_t Cδ^{1/2}2𝔐_σ(0)` with `n_t = ⌈t/δ⌉`;
/// * for `m = 0`, `‖φ(t)‖ ≤ α + βt²` (the wave bound then uses `𝔑'_σ` only).
///
/// Finally `σ̂(T) ≥ σ_cert`. An evolution failure yields a partial report.
pub fn verify_certificate(data: &CauchyData, cert: &Certificate, dt: f64, checkpoints: usize) -> Result<Verification> {
    let state = split_data(data, cert.inputs.masses)?;
    verify_state(&state, cert, dt, checkpoints)
}

pub fn verify_state(state: &DkgState, cert: &Certificate, dt: f64, checkpoints: usize) -> Result<Verification> {
    if !cert.valid {
        return Err(Error::InvalidParameter("cannot verify an invalid certificate".into()));
    }
    let checkpoints = checkpoints.max(1);
    let sigma = cert.sigma_cert;
    let t_end = cert.inputs.t_end;
    let CalibratedConstants { big_c, .. } = cert.inputs.consts;
    let massless = state.masses.kg == KgMass::Zero;
    let m0 = m_sigma(&state.spinors, sigma).total;
    let waves = |s: &DkgState| -> (f64, f64) {
        if massless {
            n_prime(s, sigma)
        } else {
            (0.0, wave_quantity(s, sigma))
        }
    };
    let (_, w0) = waves(state);
    let sd = cert.delta.sqrt();
    let cap = 2.0 * cert.a * t_end * t_end;
    let mut trackers = [
        Tracker::new("m_sigma_doubling"),
        Tracker::new("n_sigma_cap"),
        Tracker::new("m_sigma_induction"),
        Tracker::new("n_sigma_induction"),
        Tracker::new("phi_growth_envelope"),
    ];
    let times: Vec<f64> = (1..=checkpoints).map(|k| t_end * k as f64 / checkpoints as f64).collect();
    let mut reached = 0.0;
    let mut seen = 0usize;
    let mut last_state = state.clone();
    let t0 = state.t;
    let outcome = evolve_with(state, t_end, dt, &times, |s| {
        let t = s.t - t0;
        let m = m_sigma(&s.spinors, sigma).total;
        let (phi, w) = waves(s);
        let total_w = wave_quantity(s, sigma);
        let n_t = (t / cert.delta - 1e-9).ceil().max(0.0);
        trackers[0].observe(t, m, 2.0 * m0);
        trackers[1].observe(t, total_w, cap);
        trackers[2].observe(t, m, m0 + n_t * big_c * sigma * sd * 2.0 * m0 * (4.0 * cert.a * t_end * t_end));
        trackers[3].observe(t, w, w0 + n_t * big_c * sd * 2.0 * m0);
        if let (true, Some(g)) = (massless, cert.inputs.growth) {
            trackers[4].observe(t, phi, g.bound(t));
        }
        reached = t;
        seen += 1;
        last_state = s.clone();
        Ok(())
    });
    let aborted = outcome.err().map(|e| e.to_string());
    let hypotheses: Vec<HypothesisCheck> = trackers
        .into_iter()
        .filter(|tr| massless || tr.name != "phi_growth_envelope")
        .map(Tracker::finish)
        .collect();
    let fields = [&last_state.spinors.plus, &last_state.spinors.minus, &last_state.waves.plus, &last_state.waves.minus];
    let sigma_hat_final = estimate_radius_envelope(&fields).map(|f| f.sigma).unwrap_or(f64::NAN);
    let complete = aborted.is_none() && seen == checkpoints;
    let radius_ok = complete && sigma_hat_final >= sigma;
    let pass = complete && radius_ok && hypotheses.iter().all(|h| h.holds);
    Ok(Verification { sigma, t_end, reached_t: reached, checkpoints: seen, hypotheses, sigma_hat_final, radius_ok, aborted, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RadiusPoint {
    pub t: f64,
    pub sigma_cert: f64,
    pub sigma_measured: f64,
    pub valid: bool,
    /// `valid && σ̂(T) ≥ σ_cert(T)`
    pub pass: bool,
}

/// Certificate radius and measured decay rate at each `T` of `t_list`, from a
/// single evolution of `state`. `inputs` supplies everything but `T`.
pub fn radius_curve(state: &DkgState, inputs: &CertificateInputs, t_list: &[f64], dt: f64) -> Result<Vec<RadiusPoint>> {
    let mut sorted = t_list.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let t_max = sorted.last().copied().unwrap_or(0.0);
    let mut measured = Vec::with_capacity(sorted.len());
    evolve_with(state, t_max, dt, &sorted, |s| {
        let fields = [&s.spinors.plus, &s.spinors.minus, &s.waves.plus, &s.waves.minus];
        measured.push(estimate_radius_envelope(&fields).map(|f| f.sigma).unwrap_or(f64::NAN));
        Ok(())
    })?;
    sorted
        .par_iter()
        .zip(measured.par_iter())
        .map(|(&t, &sigma_measured)| {
            let cert = certify(&CertificateInputs { t_end: t, ..*inputs })?;
            Ok(RadiusPoint {
                t,
                sigma_cert: cert.sigma_cert,
                sigma_measured,
                valid: cert.valid,
                pass: cert.valid && sigma_measured >= cert.sigma_cert,
            })
        })
        .collect()
}

/// Log-log slopes `(σ_cert, σ̂)` against `T` over a radius curve.
pub fn radius_curve_slopes(points: &[RadiusPoint]) -> (Option<f64>, Option<f64>) {
    let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
    let cert: Vec<f64> = points.iter().map(|p| p.sigma_cert).collect();
    let meas: Vec<f64> = points.iter().map(|p| p.sigma_measured).collect();
    (loglog_slope(&ts, &cert), loglog_slope(&ts, &meas))
}

#[cfg(test)]
mod tests;
