//! Scenario files (TOML) and their validation.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use dkg_gevrey::dkg::{auto_dt, split_data, DkgState, KgMass, Masses};
use dkg_gevrey::gevrey::Profile;
use dkg_gevrey::library::{DataSpec, LIBRARY_AMPLITUDES};
use dkg_gevrey::picard::CalibratedConstants;
use dkg_gevrey::spectral::Grid;
use serde::Deserialize;

/// A scenario problem tied to a field path, reported with exit status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ValidationError {}

type Valid<T> = Result<T, ValidationError>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_length: Option<f64>,
    /// Half-length in units of `π`.
    pub half_length_pi: Option<f64>,
    pub modes: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassSection {
    #[serde(default = "one")]
    pub dirac: f64,
    #[serde(default = "kg_one")]
    pub kg: KgMass,
}

impl Default for MassSection {
    fn default() -> Self {
        Self { dirac: 1.0, kg: KgMass::One }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    Standard,
    Decoupled,
    Custom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default)]
    pub layout: Layout,
    pub shape: Option<Profile>,
    #[serde(default = "one")]
    pub amplitude: f64,
    pub custom: Option<DataSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub c0: f64,
    pub big_c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    /// Times for the radius curve; default `T/8, T/4, T/2, T`.
    pub radius_times: Option<Vec<f64>>,
    /// Override `𝔐_{σ₀}(0)`; verification is skipped when set.
    pub m0: Option<f64>,
    /// Override `𝔑_{σ₀}(0)`.
    pub n0: Option<f64>,
    /// Growth envelope for `m = 0`; measured over `[0, T]` when absent.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    #[serde(default = "yes")]
    pub verify: bool,
}

impl Default for CertifySection {
    fn default() -> Self {
        Self { checkpoints: default_checkpoints(), radius_times: None, m0: None, n0: None, alpha: None, beta: None, verify: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    /// Radius for the library checks; defaults to `sigma0`.
    pub sigma: Option<f64>,
    #[serde(default = "default_null_t")]
    pub null_form_t: f64,
    #[serde(default = "default_scan")]
    pub scan_sigmas: Vec<f64>,
    #[serde(default = "default_draws")]
    pub symbol_draws: usize,
    #[serde(default = "one")]
    pub symbol_sigma_max: f64,
    #[serde(default = "default_identity_sigma")]
    pub identity_sigma: f64,
    #[serde(default = "default_identity_dt")]
    pub identity_dt: f64,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            sigma: None,
            null_form_t: default_null_t(),
            scan_sigmas: default_scan(),
            symbol_draws: default_draws(),
            symbol_sigma_max: 1.0,
            identity_sigma: default_identity_sigma(),
            identity_dt: default_identity_dt(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibrarySection {
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
}

impl Default for LibrarySection {
    fn default() -> Self {
        Self { amplitudes: default_amplitudes() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub grid: GridSection,
    #[serde(default)]
    pub masses: MassSection,
    pub data: Option<DataSection>,
    pub sigma0: f64,
    pub t_end: f64,
    /// Integrator step; half a grid spacing when absent.
    pub dt: Option<f64>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub constants: Option<ConstantsSection>,
    #[serde(default)]
    pub certify: CertifySection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub library: LibrarySection,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn kg_one() -> KgMass {
    KgMass::One
}
fn default_name() -> String {
    "scenario".into()
}
fn default_checkpoints() -> usize {
    200
}
fn default_probes() -> usize {
    41
}
fn default_null_t() -> f64 {
    10.0
}
fn default_scan() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.4]
}
fn default_draws() -> usize {
    100
}
fn default_identity_sigma() -> f64 {
    0.2
}
fn default_identity_dt() -> f64 {
    1e-3
}
fn default_amplitudes() -> Vec<f64> {
    LIBRARY_AMPLITUDES.to_vec()
}

fn positive(field: &str, v: f64) -> Valid<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ValidationError::new(field, format!("must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Valid<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValidationError::new("scenario", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Valid<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| ValidationError::new("scenario", e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Valid<()> {
        let g = &self.grid;
        match (g.half_length, g.half_length_pi) {
            (Some(l), None) => positive("grid.half_length", l)?,
            (None, Some(l)) => positive("grid.half_length_pi", l)?,
            _ => return Err(ValidationError::new("grid", "give exactly one of half_length, half_length_pi")),
        }
        if g.modes < 8 || !g.modes.is_multiple_of(2) {
            return Err(ValidationError::new("grid.modes", format!("must be even and at least 8, got {}", g.modes)));
        }
        if !(self.masses.dirac.is_finite() && self.masses.dirac >= 0.0) {
            return Err(ValidationError::new("masses.dirac", format!("must be >= 0, got {}", self.masses.dirac)));
        }
        positive("sigma0", self.sigma0)?;
        positive("t_end", self.t_end)?;
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if self.probes < 2 {
            return Err(ValidationError::new("probes", "need at least 2 probe times"));
        }
        if let Some(c) = self.constants {
            CalibratedConstants::new(c.c0, c.big_c).map_err(|e| ValidationError::new("constants", e.to_string()))?;
        }
        if self.certify.checkpoints == 0 {
            return Err(ValidationError::new("certify.checkpoints", "must be at least 1"));
        }
        if let Some(ts) = &self.certify.radius_times {
            if ts.is_empty() {
                return Err(ValidationError::new("certify.radius_times", "must not be empty"));
            }
            for &t in ts {
                positive("certify.radius_times", t)?;
            }
        }
        for (field, v) in [("certify.m0", self.certify.m0), ("certify.n0", self.certify.n0), ("certify.alpha", self.certify.alpha), ("certify.beta", self.certify.beta)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ValidationError::new(field, format!("must be finite and >= 0, got {v}")));
                }
            }
        }
        if self.certify.alpha.is_some() != self.certify.beta.is_some() {
            return Err(ValidationError::new("certify", "give both alpha and beta or neither"));
        }
        if self.certify.m0.is_some() != self.certify.n0.is_some() {
            return Err(ValidationError::new("certify", "give both m0 and n0 or neither"));
        }
        let c = &self.checks;
        if let Some(s) = c.sigma {
            positive("checks.sigma", s)?;
        }
        positive("checks.null_form_t", c.null_form_t)?;
        positive("checks.symbol_sigma_max", c.symbol_sigma_max)?;
        positive("checks.identity_sigma", c.identity_sigma)?;
        positive("checks.identity_dt", c.identity_dt)?;
        for &s in &c.scan_sigmas {
            positive("checks.scan_sigmas", s)?;
        }
        if self.library.amplitudes.is_empty() {
            return Err(ValidationError::new("library.amplitudes", "must not be empty"));
        }
        for &a in &self.library.amplitudes {
            positive("library.amplitudes", a)?;
        }
        if self.data.is_some() {
            let spec = self.data_spec()?;
            if let Some(r) = spec.strip_radius() {
                if self.sigma0 >= r {
                    return Err(ValidationError::new(
                        "sigma0",
                        format!("must lie below the strip half-width {r} of the data"),
                    ));
                }
            }
            spec.build(&self.build_grid()?).map_err(|e| ValidationError::new("data", e.to_string()))?;
        }
        Ok(())
    }

    pub fn half_length(&self) -> f64 {
        self.grid.half_length.unwrap_or_else(|| PI * self.grid.half_length_pi.unwrap_or(1.0))
    }

    pub fn build_grid(&self) -> Valid<Grid> {
        Grid::new(self.half_length(), self.grid.modes).map_err(|e| ValidationError::new("grid", e.to_string()))
    }

    pub fn masses(&self) -> Masses {
        Masses { dirac: self.masses.dirac, kg: self.masses.kg }
    }

    pub fn data_spec(&self) -> Valid<DataSpec> {
        let d = self.data.as_ref().ok_or_else(|| ValidationError::new("data", "this command needs a [data] section"))?;
        let shape = || d.shape.ok_or_else(|| ValidationError::new("data.shape", "required for this layout"));
        positive("data.amplitude", d.amplitude)?;
        match d.layout {
            Layout::Standard => Ok(DataSpec::standard(shape()?, d.amplitude)),
            Layout::Decoupled => Ok(DataSpec::decoupled(shape()?, d.amplitude)),
            Layout::Custom => {
                let spec = d.custom.clone().ok_or_else(|| ValidationError::new("data.custom", "required for the custom layout"))?;
                for (name, c) in [("phi0", spec.phi0), ("phi1", spec.phi1)] {
                    if c.is_some_and(|c| c.phase != 0.0) {
                        return Err(ValidationError::new(&format!("data.custom.{name}"), "wave data must be real (phase 0)"));
                    }
                }
                Ok(spec)
            }
        }
    }

    pub fn state(&self, grid: &Grid) -> Valid<DkgState> {
        let data = self.data_spec()?.build(grid).map_err(|e| ValidationError::new("data", e.to_string()))?;
        split_data(&data, self.masses()).map_err(|e| ValidationError::new("data", e.to_string()))
    }

    pub fn dt(&self, grid: &Grid) -> f64 {
        self.dt.unwrap_or_else(|| auto_dt(grid, None))
    }

    pub fn radius_times(&self) -> Vec<f64> {
        self.certify.radius_times.clone().unwrap_or_else(|| [8.0, 4.0, 2.0, 1.0].iter().map(|d| self.t_end / d).collect())
    }

    pub fn checks_sigma(&self) -> f64 {
        self.checks.sigma.unwrap_or(self.sigma0)
    }
}

/// Constants from a JSON file (as written by `calibrate`), else from the
/// scenario.
pub fn resolve_constants(scenario: &Scenario, file: Option<&Path>) -> Valid<Option<CalibratedConstants>> {
    #[derive(Deserialize)]
    struct Raw {
        c0: f64,
        big_c: f64,
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValidationError::new("constants", format!("cannot read {}: {e}", path.display())))?;
        let raw: Raw = serde_json::from_str(&text).map_err(|e| ValidationError::new("constants", e.to_string()))?;
        return CalibratedConstants::new(raw.c0, raw.big_c)
            .map(Some)
            .map_err(|e| ValidationError::new("constants", e.to_string()));
    }
    Ok(scenario.constants.map(|c| CalibratedConstants::new(c.c0, c.big_c).expect("validated")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        sigma0 = 0.5
        t_end = 2.0
        [grid]
        half_length_pi = 8
        modes = 512
        [data]
        shape = { profile = "poisson", a = 1.0 }
    "#;

    #[test]
    fn minimal_scenario_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.masses(), Masses { dirac: 1.0, kg: KgMass::One });
        assert_eq!(s.probes, 41);
        assert_eq!(s.radius_times(), vec![0.25, 0.5, 1.0, 2.0]);
        assert_eq!(s.checks_sigma(), 0.5);
        assert!((s.half_length() - 8.0 * PI).abs() < 1e-12);
        assert!(resolve_constants(&s, None).unwrap().is_none());
    }

    #[test]
    fn odd_modes_name_the_field() {
        let e = Scenario::parse(&MINIMAL.replace("512", "511")).unwrap_err();
        assert_eq!(e.field, "grid.modes");
    }

    #[test]
    fn sigma0_must_be_inside_the_strip() {
        let e = Scenario::parse(&MINIMAL.replace("sigma0 = 0.5", "sigma0 = 1.0")).unwrap_err();
        assert_eq!(e.field, "sigma0");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = Scenario::parse(&format!("bogus = 1\n{MINIMAL}")).unwrap_err();
        assert_eq!(e.field, "scenario");
    }

    #[test]
    fn layouts() {
        let s = Scenario::parse(&MINIMAL.replace("[data]", "[data]\nlayout = \"decoupled\"")).unwrap();
        let spec = s.data_spec().unwrap();
        assert!(spec.psi_minus.is_none() && spec.phi0.is_none());
        let custom = MINIMAL.replace(
            "shape = { profile = \"poisson\", a = 1.0 }",
            "layout = \"custom\"\n[data.custom.phi0]\nprofile = \"gaussian\"\nwidth = 1.0\namplitude = 1.0\nphase = 0.3",
        );
        assert_eq!(Scenario::parse(&custom).unwrap_err().field, "data.custom.phi0");
    }
}
