//! Analytic profiles with known transforms.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid};

/// Largest admissible value at the box edge (and spectral tail at `ξ_max`),
/// relative to the peak.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// `a / (π(x² + a²))`, periodised over the box. Transform `e^{-a|ξ|}`,
    /// strip half-width `a`.
    Poisson { a: f64 },
    /// `exp(-x²/(2w²))`. Transform `√(2π) w e^{-w²ξ²/2}`; entire.
    Gaussian { width: f64 },
    /// `sech(x/s)`. Transform `πs·sech(πsξ/2)`, strip half-width `πs/2`.
    Sech { scale: f64 },
}

fn wrap(x: f64, center: f64, l: f64) -> f64 {
    (x - center + l).rem_euclid(2.0 * l) - l
}

impl Profile {
    fn param(&self) -> f64 {
        match *self {
            Profile::Poisson { a } => a,
            Profile::Gaussian { width } => width,
            Profile::Sech { scale } => scale,
        }
    }

    /// Half-width of the strip of analyticity, `None` for entire profiles.
    pub fn strip_radius(&self) -> Option<f64> {
        match *self {
            Profile::Poisson { a } => Some(a),
            Profile::Gaussian { .. } => None,
            Profile::Sech { scale } => Some(PI * scale / 2.0),
        }
    }

    /// Continuum transform at `ξ` of the unit-amplitude profile centred at 0.
    pub fn transform_at(&self, xi: f64) -> f64 {
        match *self {
            Profile::Poisson { a } => (-a * xi.abs()).exp(),
            Profile::Gaussian { width } => (2.0 * PI).sqrt() * width * (-0.5 * (width * xi).powi(2)).exp(),
            Profile::Sech { scale } => PI * scale / (0.5 * PI * scale * xi).cosh(),
        }
    }

    fn peak(&self) -> f64 {
        match *self {
            Profile::Poisson { a } => 1.0 / (PI * a),
            _ => 1.0,
        }
    }

    /// Unit-amplitude value at offset `d` from the centre on a box of
    /// half-length `l`.
    fn value(&self, d: f64, l: f64) -> f64 {
        match *self {
            Profile::Poisson { a } => {
                let beta = a * PI / l;
                let theta = PI * d / l;
                let denom = 2.0 * (0.5 * beta).sinh().powi(2) + 2.0 * (0.5 * theta).sin().powi(2);
                beta.sinh() / denom / (2.0 * l)
            }
            Profile::Gaussian { width } => (-0.5 * (d / width).powi(2)).exp(),
            Profile::Sech { scale } => 1.0 / (d / scale).cosh(),
        }
    }

    /// Ratio of the edge value and of the spectral tail at `ξ_max` to the peak.
    fn resolution_defect(&self, grid: &Grid) -> f64 {
        let l = grid.half_length();
        let spectral = self.transform_at(grid.xi_max()) / self.transform_at(0.0);
        match self {
            // The periodised kernel has no edge truncation.
            Profile::Poisson { .. } => spectral,
            _ => spectral.max(self.value(l, l) / self.peak()),
        }
    }

    /// `amplitude · profile(x - center)` sampled on `grid`, with the unmatched
    /// `-N/2` coefficient removed.
    pub fn sample(&self, grid: &Grid, amplitude: f64, center: f64) -> Result<ComplexField> {
        let p = self.param();
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter(format!("profile parameter must be positive, got {p}")));
        }
        if !amplitude.is_finite() || !center.is_finite() {
            return Err(Error::InvalidParameter("amplitude and center must be finite".into()));
        }
        let ratio = self.resolution_defect(grid);
        if ratio > BOUNDARY_TOL {
            return Err(Error::ScaleTooSmall { ratio });
        }
        let l = grid.half_length();
        Ok(grid.sample_real(|x| amplitude * self.value(wrap(x, center, l), l)).without_nyquist())
    }
}

/// Periodised Poisson kernel `amplitude · P_a` with coefficients
/// `amplitude · e^{-a|ξ_k|}`.
pub fn poisson_kernel(grid: &Grid, a: f64, amplitude: f64) -> Result<ComplexField> {
    Profile::Poisson { a }.sample(grid, amplitude, 0.0)
}

pub fn gaussian(grid: &Grid, width: f64) -> Result<ComplexField> {
    Profile::Gaussian { width }.sample(grid, 1.0, 0.0)
}

pub fn sech_profile(grid: &Grid, scale: f64) -> Result<ComplexField> {
    Profile::Sech { scale }.sample(grid, 1.0, 0.0)
}
