//! Reference resolution, reference data and the fixed sample library used for
//! calibration and checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dkg::{CauchyData, KgMass, Masses};
use crate::error::Result;
use crate::gevrey::Profile;
use crate::spectral::{ComplexField, Grid};

pub const REFERENCE_HALF_LENGTH: f64 = 64.0 * PI;
pub const REFERENCE_MODES: usize = 8192;
pub const REFERENCE_SIGMA0: f64 = 0.5;
pub const REFERENCE_DIRAC_MASS: f64 = 1.0;

/// Amplitudes of the calibration samples.
pub const LIBRARY_AMPLITUDES: [f64; 3] = [0.1, 1.0, 10.0];

/// Seeds of the random band-limited fields used by the product checks.
pub const LIBRARY_SEEDS: [u64; 4] = [11, 23, 37, 41];

pub fn reference_grid() -> Grid {
    Grid::new(REFERENCE_HALF_LENGTH, REFERENCE_MODES).expect("reference grid is valid")
}

pub fn reference_masses() -> Masses {
    Masses { dirac: REFERENCE_DIRAC_MASS, kg: KgMass::One }
}

/// One component of a data set: `amplitude · e^{i·phase} · profile(x - center)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComponentSpec {
    #[serde(flatten)]
    pub profile: Profile,
    pub amplitude: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub phase: f64,
}

impl ComponentSpec {
    pub fn new(profile: Profile, amplitude: f64) -> Self {
        Self { profile, amplitude, center: 0.0, phase: 0.0 }
    }

    pub fn centered_at(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn build(&self, grid: &Grid) -> Result<ComplexField> {
        let f = self.profile.sample(grid, self.amplitude, self.center)?;
        Ok(if self.phase == 0.0 { f } else { f.scale(Complex64::from_polar(1.0, self.phase)) })
    }
}

/// Cauchy data described component-wise; absent components are zero. Wave
/// components must have zero phase (they are real).
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DataSpec {
    pub psi_plus: Option<ComponentSpec>,
    pub psi_minus: Option<ComponentSpec>,
    pub phi0: Option<ComponentSpec>,
    pub phi1: Option<ComponentSpec>,
}

impl DataSpec {
    pub fn build(&self, grid: &Grid) -> Result<CauchyData> {
        let get = |c: &Option<ComponentSpec>| -> Result<ComplexField> {
            c.map_or_else(|| Ok(ComplexField::zeros(grid)), |c| c.build(grid))
        };
        CauchyData::new(get(&self.psi_plus)?, get(&self.psi_minus)?, get(&self.phi0)?, get(&self.phi1)?)
    }

    /// Smallest strip half-width among the components, `None` if all are entire.
    pub fn strip_radius(&self) -> Option<f64> {
        [self.psi_plus, self.psi_minus, self.phi0, self.phi1]
            .iter()
            .flatten()
            .filter_map(|c| c.profile.strip_radius())
            .reduce(f64::min)
    }

    /// The layout shared by the sample library: spinor and wave components of
    /// one profile, offset and phased so that every coupling term is active.
    pub fn standard(profile: Profile, amplitude: f64) -> Self {
        Self {
            psi_plus: Some(ComponentSpec::new(profile, amplitude)),
            psi_minus: Some(ComponentSpec::new(profile, amplitude).centered_at(1.0).with_phase(0.5)),
            phi0: Some(ComponentSpec::new(profile, amplitude).centered_at(-0.5)),
            phi1: Some(ComponentSpec::new(profile, 0.5 * amplitude)),
        }
    }

    /// Decoupled case: only `ψ₊` nonzero.
    pub fn decoupled(profile: Profile, amplitude: f64) -> Self {
        Self { psi_plus: Some(ComponentSpec::new(profile, amplitude)), ..Self::default() }
    }
}

/// Unit-amplitude Poisson (`a = 1`) data in the standard layout.
pub fn reference_spec() -> DataSpec {
    DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0)
}

pub fn reference_data(grid: &Grid) -> Result<CauchyData> {
    reference_spec().build(grid)
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub id: String,
    pub spec: DataSpec,
    pub data: CauchyData,
}

/// Poisson (`a = 1`) and Gaussian (width 1) data at every library amplitude.
pub fn sample_library(grid: &Grid) -> Result<Vec<Sample>> {
    sample_library_with(grid, &LIBRARY_AMPLITUDES)
}

pub fn sample_library_with(grid: &Grid, amplitudes: &[f64]) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (name, profile) in [("poisson", Profile::Poisson { a: 1.0 }), ("gaussian", Profile::Gaussian { width: 1.0 })] {
        for &amp in amplitudes {
            let spec = DataSpec::standard(profile, amp);
            out.push(Sample { id: format!("{name}-amp{amp}"), data: spec.build(grid)?, spec });
        }
    }
    Ok(out)
}

/// Field with independent uniform coefficients on `|k| ≤ max_mode`.
pub fn random_band_limited(grid: &Grid, max_mode: i64, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = ComplexField::zeros(grid);
    let top = max_mode.min(grid.num_modes() as i64 / 2 - 1);
    for k in -top..=top {
        let idx = grid.index_of_mode(k).expect("inside band");
        f.coeffs_mut()[idx] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f
}

/// Real-valued variant of [`random_band_limited`].
pub fn random_real_band_limited(grid: &Grid, max_mode: i64, seed: u64) -> ComplexField {
    random_band_limited(grid, max_mode, seed).real_part()
}
