//! Decay-rate fit of Fourier coefficients. A function analytic in the strip
//! `|Im z| < σ` has coefficients decaying like `e^{-σ|ξ|}`, so the negative
//! slope of `log|ĉ|` against `|ξ|` estimates the strip half-width.

use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid};

/// Default floor, relative to the largest coefficient.
pub const DEFAULT_FLOOR_REL: f64 = 1e-13;

pub const MIN_FIT_MODES: usize = 8;

/// Band `xi_lo ≤ |ξ| ≤ xi_hi` used by the fit.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitWindow {
    pub xi_lo: f64,
    pub xi_hi: f64,
}

impl FitWindow {
    /// `[ξ_max/8, ξ_max/2]`.
    pub fn default_for(grid: &Grid) -> Self {
        Self { xi_lo: grid.xi_max() / 8.0, xi_hi: grid.xi_max() / 2.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RadiusFit {
    /// Negative slope of the fitted line.
    pub sigma: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log|ĉ|` about the line.
    pub residual: f64,
    pub modes_used: usize,
    /// Storage index of the highest-`|ξ|` coefficient that entered the fit.
    pub last_index: usize,
    /// Set when the spectrum fell below the floor before the window filled:
    /// `sigma` is then [`max_resolvable_radius`], a lower bound only.
    pub lower_bound: bool,
}

/// Fits `log m_k ≈ b - σ|ξ_k|` over the window, where `m_k` are magnitudes on
/// `grid`; entries not above `floor` are skipped.
fn fit_magnitudes(grid: &Grid, mags: &[f64], floor: f64, window: FitWindow) -> Result<RadiusFit> {
    if !(window.xi_lo >= 0.0 && window.xi_hi > window.xi_lo) {
        return Err(Error::InvalidParameter(format!(
            "fit window [{}, {}] is empty",
            window.xi_lo, window.xi_hi
        )));
    }
    let mut pts = Vec::new();
    let mut last = (0.0, 0usize);
    for (j, (&m, &xi)) in mags.iter().zip(grid.frequencies()).enumerate() {
        let a = xi.abs();
        if a < window.xi_lo || a > window.xi_hi || !(m > floor) || m == 0.0 {
            continue;
        }
        pts.push((a, m.ln()));
        if a >= last.0 {
            last = (a, j);
        }
    }
    if pts.len() < MIN_FIT_MODES {
        let below = mags
            .iter()
            .zip(grid.frequencies())
            .any(|(&m, &xi)| xi.abs() < window.xi_lo && m > floor && floor > 0.0);
        let max = mags.iter().cloned().fold(0.0, f64::max);
        if below {
            return Ok(RadiusFit {
                sigma: max_resolvable_radius(floor / max, window),
                intercept: max.ln(),
                residual: 0.0,
                modes_used: pts.len(),
                last_index: last.1,
                lower_bound: true,
            });
        }
        return Err(Error::InsufficientModes { found: pts.len(), required: MIN_FIT_MODES });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientModes { found: 1, required: MIN_FIT_MODES });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(RadiusFit {
        sigma: -slope,
        intercept,
        residual: (ss / n).sqrt(),
        modes_used: pts.len(),
        last_index: last.1,
        lower_bound: false,
    })
}

/// Least-squares decay rate of `|ĉ_k|` over `window`, ignoring coefficients
/// at or below the absolute `floor`.
pub fn estimate_radius(f: &ComplexField, floor: f64, window: FitWindow) -> Result<RadiusFit> {
    let mags: Vec<f64> = f.coeffs().iter().map(|c| c.norm()).collect();
    fit_magnitudes(f.grid(), &mags, floor, window)
}

/// Default window and floor `1e-13·max|ĉ|`.
pub fn estimate_radius_default(f: &ComplexField) -> Result<RadiusFit> {
    estimate_radius(f, DEFAULT_FLOOR_REL * f.max_abs_coeff(), FitWindow::default_for(f.grid()))
}

/// Fit of the combined envelope `(Σ_i |ĉ_{i,k}|²)^{1/2}` of several fields on
/// one grid, with the default window and relative floor.
pub fn estimate_radius_envelope(fields: &[&ComplexField]) -> Result<RadiusFit> {
    let first = fields.first().ok_or(Error::EmptySampleSet)?;
    let grid = first.grid();
    let mut mags = vec![0.0; grid.num_modes()];
    for f in fields {
        first.check_grid(f)?;
        for (m, c) in mags.iter_mut().zip(f.coeffs()) {
            *m += c.norm_sqr();
        }
    }
    mags.iter_mut().for_each(|m| *m = m.sqrt());
    let max = mags.iter().cloned().fold(0.0, f64::max);
    fit_magnitudes(grid, &mags, DEFAULT_FLOOR_REL * max, FitWindow::default_for(grid))
}

/// Largest decay rate distinguishable from an entire function: a spectrum
/// that falls from the peak to the relative floor before `window.xi_lo`
/// leaves no modes to fit, which happens for every `σ` above this value.
pub fn max_resolvable_radius(floor_rel: f64, window: FitWindow) -> f64 {
    (1.0 / floor_rel).ln() / window.xi_lo
}
