//! The Dirac–Klein–Gordon system in characteristic variables.
//!
//! With `ψ = (ψ₊, ψ₋)` and the half-wave splitting `φ = φ₊ + φ₋`,
//!
//! ```text
//! ∂_t ψ± = ∓∂_x ψ± + i(φ - M) ψ∓
//! ∂_t φ± = ∓i⟨D⟩φ± ∓ i⟨D⟩⁻¹ Re(conj(ψ₊) ψ₋)          (m = 1)
//! ```
//!
//! For `m = 0` the wave components are `Φ± = ½(φ ± i|D|⁻¹∂_tφ)` on the
//! mean-zero part, with `|D|` in place of `⟨D⟩`; the mean of `φ` obeys
//! `d²/dt² φ̂(0) = -2 R̂(0)` and is carried separately.

mod integrator;

pub(crate) use integrator::coupling_products;
pub use integrator::{auto_dt, evolve, evolve_with, rhs, step, Derivative, Integrator, Probes, Trajectory};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{apply_multiplier, ComplexField, Grid, Multiplier, ZERO_MEAN_TOL};

/// Tolerance for the real-symmetry checks on wave data.
pub const REALITY_TOL: f64 = 1e-10;

/// Klein–Gordon mass, normalised to one of the two cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KgMass {
    One,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Masses {
    /// Dirac mass `M ≥ 0`.
    pub dirac: f64,
    pub kg: KgMass,
}

impl Masses {
    pub fn new(dirac: f64, kg: KgMass) -> Result<Self> {
        if !(dirac.is_finite() && dirac >= 0.0) {
            return Err(Error::InvalidParameter(format!("Dirac mass must be >= 0, got {dirac}")));
        }
        Ok(Self { dirac, kg })
    }
}

#[derive(Clone, Debug)]
pub struct SpinorPair {
    pub plus: ComplexField,
    pub minus: ComplexField,
}

impl SpinorPair {
    pub fn new(plus: ComplexField, minus: ComplexField) -> Result<Self> {
        plus.check_grid(&minus)?;
        Ok(Self { plus, minus })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { plus: ComplexField::zeros(grid), minus: ComplexField::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid {
        self.plus.grid()
    }
}

/// Half-wave components; `φ₋ = conj(φ₊)` pointwise because `φ` is real.
#[derive(Clone, Debug)]
pub struct WavePair {
    pub plus: ComplexField,
    pub minus: ComplexField,
}

impl WavePair {
    pub fn new(plus: ComplexField, minus: ComplexField) -> Result<Self> {
        plus.check_grid(&minus)?;
        let wp = Self { plus, minus };
        let defect = wp.reality_defect();
        if defect > REALITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "wave pair violates conj(φ₊) = φ₋ (relative defect {defect:e})"
            )));
        }
        Ok(wp)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { plus: ComplexField::zeros(grid), minus: ComplexField::zeros(grid) }
    }

    /// `max|φ̂₋ - (conj φ₊)^|` relative to the larger component.
    pub fn reality_defect(&self) -> f64 {
        self.minus.max_rel_diff(&self.plus.conj())
    }
}

/// Carried zero-mode coefficients `(φ̂(0), ∂_tφ̂(0))` for `m = 0`.
pub type ZeroMode = [Complex64; 2];

#[derive(Clone, Debug)]
pub struct DkgState {
    pub t: f64,
    pub spinors: SpinorPair,
    pub waves: WavePair,
    pub masses: Masses,
    /// Used only when `masses.kg` is [`KgMass::Zero`]; zero otherwise.
    pub zero_mode: ZeroMode,
}

impl DkgState {
    pub fn grid(&self) -> &Grid {
        self.spinors.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.spinors.plus.is_finite()
            && self.spinors.minus.is_finite()
            && self.waves.plus.is_finite()
            && self.waves.minus.is_finite()
            && self.zero_mode.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Initial data `(ψ₀, φ₀, φ₁)` with `φ₀, φ₁` real.
#[derive(Clone, Debug)]
pub struct CauchyData {
    pub psi_plus: ComplexField,
    pub psi_minus: ComplexField,
    pub phi0: ComplexField,
    pub phi1: ComplexField,
}

impl CauchyData {
    pub fn new(
        psi_plus: ComplexField,
        psi_minus: ComplexField,
        phi0: ComplexField,
        phi1: ComplexField,
    ) -> Result<Self> {
        psi_plus.check_grid(&psi_minus)?;
        psi_plus.check_grid(&phi0)?;
        psi_plus.check_grid(&phi1)?;
        for (name, f) in [("phi0", &phi0), ("phi1", &phi1)] {
            let d = f.real_symmetry_defect();
            if d > REALITY_TOL {
                return Err(Error::InvalidParameter(format!("{name} is not real (defect {d:e})")));
            }
        }
        Ok(Self { psi_plus, psi_minus, phi0, phi1 })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let z = ComplexField::zeros(grid);
        Self { psi_plus: z.clone(), psi_minus: z.clone(), phi0: z.clone(), phi1: z }
    }

    pub fn grid(&self) -> &Grid {
        self.psi_plus.grid()
    }

    /// Data of the time-reversed solution `ψ̃±(t) = conj ψ∓(-t)`, `φ̃(t) = φ(-t)`.
    pub fn time_reversed(&self) -> Self {
        Self {
            psi_plus: self.psi_minus.conj(),
            psi_minus: self.psi_plus.conj(),
            phi0: self.phi0.clone(),
            phi1: -&self.phi1,
        }
    }

    /// Rescales data for Klein–Gordon mass `m > 0` to the `m = 1` problem.
    ///
    /// With `x' = mx`, `t' = mt`: `ψ' = m^{-3/2}ψ`, `φ₀' = φ₀/m`, `φ₁' = φ₁/m²`,
    /// Dirac mass `M/m`, on a box of half-length `mL` holding the same
    /// samples. Returns the new data, masses and the time factor `m`.
    pub fn rescale_kg_mass(&self, dirac: f64, m: f64) -> Result<(Self, Masses, f64)> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParameter(format!("Klein-Gordon mass must be > 0, got {m}")));
        }
        let old = self.grid();
        let grid = Grid::new(old.half_length() * m, old.num_modes())?;
        let move_field = |f: &ComplexField, factor: f64| -> Result<ComplexField> {
            let samples: Vec<Complex64> = f.to_samples().iter().map(|v| v * factor).collect();
            Ok(grid.transform(&samples)?.without_nyquist())
        };
        let data = Self {
            psi_plus: move_field(&self.psi_plus, m.powf(-1.5))?,
            psi_minus: move_field(&self.psi_minus, m.powf(-1.5))?,
            phi0: move_field(&self.phi0, 1.0 / m)?,
            phi1: move_field(&self.phi1, 1.0 / (m * m))?,
        };
        Ok((data, Masses::new(dirac / m, KgMass::One)?, m))
    }
}

/// How `split_data` treats the mean of `φ₁` when `m = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroModePolicy {
    /// Store the means of `φ₀, φ₁` and evolve them by their own ODE.
    Carry,
    /// Refuse data whose `φ₁` has a nonzero mean.
    Reject,
}

pub fn split_data(data: &CauchyData, masses: Masses) -> Result<DkgState> {
    split_data_with(data, masses, ZeroModePolicy::Carry)
}

pub fn split_data_with(data: &CauchyData, masses: Masses, policy: ZeroModePolicy) -> Result<DkgState> {
    let spinors = SpinorPair::new(data.psi_plus.clone(), data.psi_minus.clone())?;
    data.psi_plus.check_grid(&data.phi0)?;
    data.psi_plus.check_grid(&data.phi1)?;
    let i = Complex64::new(0.0, 1.0);
    let (phi0, phi1, inv, zero_mode) = match masses.kg {
        KgMass::One => (
            data.phi0.clone(),
            data.phi1.clone(),
            Multiplier::Bracket(-1.0),
            [Complex64::new(0.0, 0.0); 2],
        ),
        KgMass::Zero => {
            let z1 = data.phi1.zero_mode();
            let scale = data.phi1.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if policy == ZeroModePolicy::Reject && z1.norm() > ZERO_MEAN_TOL * scale {
                return Err(Error::ZeroModeNotCarried(z1.norm()));
            }
            (
                data.phi0.clone().without_mean(),
                data.phi1.clone().without_mean(),
                Multiplier::AbsInv,
                [data.phi0.zero_mode(), z1],
            )
        }
    };
    let w = apply_multiplier(&phi1, inv)?;
    let plus = phi0.zip_with(&w, |a, b| 0.5 * (a + i * b));
    let minus = phi0.zip_with(&w, |a, b| 0.5 * (a - i * b));
    Ok(DkgState { t: 0.0, spinors, waves: WavePair { plus, minus }, masses, zero_mode })
}

/// Physical fields `(ψ₊, ψ₋, φ, ∂_tφ)`.
#[derive(Clone, Debug)]
pub struct Recombined {
    pub psi_plus: ComplexField,
    pub psi_minus: ComplexField,
    pub phi: ComplexField,
    pub dphi: ComplexField,
}

impl Recombined {
    pub fn into_data(self) -> CauchyData {
        CauchyData { psi_plus: self.psi_plus, psi_minus: self.psi_minus, phi0: self.phi, phi1: self.dphi }
    }
}

/// `φ = φ₊ + φ₋` and `∂_tφ = -i⟨D⟩(φ₊ - φ₋)` (`|D|` plus carried mean for `m = 0`).
pub fn recombine(state: &DkgState) -> Recombined {
    let wp = &state.waves;
    let mi = Complex64::new(0.0, -1.0);
    let mut phi = &wp.plus + &wp.minus;
    let diff = &wp.plus - &wp.minus;
    let op = match state.masses.kg {
        KgMass::One => Multiplier::Bracket(1.0),
        KgMass::Zero => Multiplier::Abs,
    };
    let mut dphi = apply_multiplier(&diff, op).expect("polynomial symbols never fail").scale(mi);
    if state.masses.kg == KgMass::Zero {
        let z = state.grid().zero_index();
        phi.coeffs_mut()[z] += state.zero_mode[0];
        dphi.coeffs_mut()[z] += state.zero_mode[1];
    }
    Recombined {
        psi_plus: state.spinors.plus.clone(),
        psi_minus: state.spinors.minus.clone(),
        phi,
        dphi,
    }
}
