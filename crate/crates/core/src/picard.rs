//! Picard iteration for the split system on a short window `[0, δ]`.
//!
//! Iterates live on a fixed mesh of [`MESH_INTERVALS`] + 1 nodes. Each
//! iterate is the Duhamel solution driven by the forcing of the previous one,
//! `ψ(t) = W(t)[f + i∫₀ᵗ W(-s)F(s) ds]`, with the integrand interpolated by
//! cubics (fourth-order cumulative rule) and the groups `W` applied exactly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dkg::{coupling_products, DkgState, KgMass, Masses, SpinorPair, WavePair};
use crate::error::{Error, Result};
use crate::gevrey::{gevrey_norm_x, norm_x_fast, norm_x_floor, GevreyParams, NOISE_FLOOR_REL};
use crate::spectral::{ComplexField, Dispersion, Grid};

pub const MESH_INTERVALS: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 60;

/// Absolute constants of the local theory.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibratedConstants {
    /// Local-step constant in `δ = c₀/(1 + a₀² + b₀)`.
    pub c0: f64,
    /// Bilinear-estimate constant `C > 1`.
    pub big_c: f64,
    /// `c₂ = c₀^{-1/2}`.
    pub c2: f64,
}

impl CalibratedConstants {
    pub fn new(c0: f64, big_c: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("c0 must be > 0, got {c0}")));
        }
        if !(big_c.is_finite() && big_c > 1.0) {
            return Err(Error::InvalidParameter(format!("C must be > 1, got {big_c}")));
        }
        Ok(Self { c0, big_c, c2: 1.0 / c0.sqrt() })
    }

    /// Checks `c₂ = c₀^{-1/2}` for values read back from storage.
    pub fn validate(&self) -> Result<()> {
        let fresh = Self::new(self.c0, self.big_c)?;
        if (fresh.c2 - self.c2).abs() > 1e-12 * fresh.c2 {
            return Err(Error::InvalidParameter(format!("c2 = {} is not c0^(-1/2) = {}", self.c2, fresh.c2)));
        }
        Ok(())
    }
}

/// `δ = c₀ / (1 + a₀² + b₀)`.
pub fn local_timestep(a0: f64, b0: f64, consts: &CalibratedConstants) -> f64 {
    consts.c0 / (1.0 + a0 * a0 + b0)
}

/// `a₀ = Σ‖f±‖_{G^{σ,0}}`, `b₀ = Σ‖g±‖_{G^{σ,1}}` of a split state.
pub fn data_norms(state: &DkgState, sigma: f64) -> Result<(f64, f64)> {
    let p0 = GevreyParams::new(sigma, 0.0)?;
    let p1 = GevreyParams::new(sigma, 1.0)?;
    let mut a0 = 0.0;
    let mut b0 = 0.0;
    for (f, g) in [(&state.spinors.plus, &state.waves.plus), (&state.spinors.minus, &state.waves.minus)] {
        let (nf, ng) = (gevrey_norm_x(f, p0), gevrey_norm_x(g, p1));
        if !nf.is_finite() || !ng.is_finite() {
            return Err(Error::InvalidParameter(format!("data norms diverge at sigma = {sigma}")));
        }
        a0 += nf.value();
        b0 += ng.value();
    }
    Ok((a0, b0))
}

/// Largest `δ` meeting the smallness conditions of the contraction argument
/// at norms `(a₀, b₀)`:
///
/// * `Cδ·2a₀(M + 2a₀ + 2b₀) ≤ a₀` and `Cδ^{1/2}·2a₀·2(a₀+b₀) ≤ a₀ + b₀`
///   (the iterates stay in the ball `A_n ≤ 2a₀`, `B_n ≤ 2(a₀+b₀)`);
/// * `Cδ(M + 2(a₀+b₀)) ≤ ¼`, `Cδ·2a₀ ≤ ¼` and `2Cδ^{1/2}·2a₀ ≤ ¼`
///   (differences contract by at least one half).
pub fn admissible_delta(big_c: f64, dirac: f64, a0: f64, b0: f64) -> f64 {
    let mut d = f64::INFINITY;
    let c = big_c;
    if a0 > 0.0 {
        d = d.min(1.0 / (2.0 * c * (dirac + 2.0 * a0 + 2.0 * b0)));
        d = d.min((1.0 / (4.0 * c * a0)).powi(2));
        d = d.min(1.0 / (8.0 * c * a0));
        d = d.min((1.0 / (16.0 * c * a0)).powi(2));
    }
    let lin = dirac + 2.0 * (a0 + b0);
    if lin > 0.0 {
        d = d.min(1.0 / (4.0 * c * lin));
    }
    d
}

/// `c₀` for which the local step of data `(a₀, b₀)` equals [`admissible_delta`].
pub fn admissible_c0(big_c: f64, dirac: f64, a0: f64, b0: f64) -> f64 {
    (1.0 + a0 * a0 + b0) * admissible_delta(big_c, dirac, a0, b0)
}

/// Split fields at the mesh nodes of `[0, δ]`.
#[derive(Clone, Debug)]
pub struct Iterate {
    pub times: Vec<f64>,
    pub psi_plus: Vec<ComplexField>,
    pub psi_minus: Vec<ComplexField>,
    pub phi_plus: Vec<ComplexField>,
    pub phi_minus: Vec<ComplexField>,
}

impl Iterate {
    /// Free evolution of the data, the zeroth iterate.
    pub fn free(data: &DkgState, times: &[f64]) -> Self {
        let node = |f: &ComplexField, h: Dispersion| -> Vec<ComplexField> {
            times.iter().map(|&t| crate::spectral::propagate(f, h, t)).collect()
        };
        Self {
            times: times.to_vec(),
            psi_plus: node(&data.spinors.plus, Dispersion::PlusXi),
            psi_minus: node(&data.spinors.minus, Dispersion::MinusXi),
            phi_plus: node(&data.waves.plus, Dispersion::PlusBracket),
            phi_minus: node(&data.waves.minus, Dispersion::MinusBracket),
        }
    }

    /// State at node `j`.
    pub fn state_at(&self, j: usize, masses: Masses) -> DkgState {
        DkgState {
            t: self.times[j],
            spinors: SpinorPair { plus: self.psi_plus[j].clone(), minus: self.psi_minus[j].clone() },
            waves: WavePair { plus: self.phi_plus[j].clone(), minus: self.phi_minus[j].clone() },
            masses,
            zero_mode: [Complex64::new(0.0, 0.0); 2],
        }
    }
}

/// Forcing terms at one node.
struct NodeForcing {
    /// `(φ - M)ψ₋`, `(φ - M)ψ₊`
    f_plus: ComplexField,
    f_minus: ComplexField,
    /// `∓⟨D⟩⁻¹ Re(conj ψ₊ ψ₋)` for `φ±`
    g_plus: ComplexField,
    g_minus: ComplexField,
    /// Norms entering the calibration ratios.
    mass_term: f64,
    product_term: f64,
    null_term: f64,
}

fn node_forcing(grid: &Grid, dirac: f64, sigma: f64, it: &Iterate, j: usize) -> Result<NodeForcing> {
    let phi: Vec<Complex64> =
        it.phi_plus[j].coeffs().iter().zip(it.phi_minus[j].coeffs()).map(|(a, b)| a + b).collect();
    let (pp, pm) = (&it.psi_plus[j], &it.psi_minus[j]);
    let [a, b, r] = coupling_products(grid, 0.0, &phi, pp.coeffs(), pm.coeffs());
    let prod_plus = ComplexField::from_coeffs_unchecked(grid.clone(), a);
    let prod_minus = ComplexField::from_coeffs_unchecked(grid.clone(), b);
    let mut f_plus = prod_plus.clone();
    f_plus.axpy(Complex64::new(-dirac, 0.0), pm);
    let mut f_minus = prod_minus.clone();
    f_minus.axpy(Complex64::new(-dirac, 0.0), pp);
    let g: Vec<Complex64> =
        r.iter().zip(grid.frequencies()).map(|(c, &xi)| c / (1.0 + xi * xi).sqrt()).collect();
    let g_plus = ComplexField::from_coeffs_unchecked(grid.clone(), g.iter().map(|c| -c).collect());
    let g_minus = ComplexField::from_coeffs_unchecked(grid.clone(), g);
    // The null-form estimate is stated for conj(ψ₊)ψ₋ itself; its real part is
    // what drives the waves.
    let null = grid
        .product_full(&pp.conj(), pm)
        .map_err(|_| Error::BlowUp { t: it.times[j], reason: "non-finite Picard forcing".into() })?;
    Ok(NodeForcing {
        mass_term: dirac * (norm_x_fast(pm, sigma, 0.0) + norm_x_fast(pp, sigma, 0.0)),
        product_term: norm_x_fast(&prod_plus, sigma, 0.0) + norm_x_fast(&prod_minus, sigma, 0.0),
        null_term: norm_x_fast(&null, sigma, 0.0),
        f_plus,
        f_minus,
        g_plus,
        g_minus,
    })
}

/// Weights of the fourth-order rule for `∫_{t_j}^{t_{j+1}}` on a uniform mesh
/// with `n` intervals, as `(first node, weights / 24)`.
fn interval_weights(j: usize, n: usize) -> (usize, [f64; 4]) {
    if j == 0 {
        (0, [9.0, 19.0, -5.0, 1.0])
    } else if j == n - 1 {
        (n - 3, [1.0, -5.0, 19.0, 9.0])
    } else {
        (j - 1, [-1.0, 13.0, 13.0, -1.0])
    }
}

/// Cumulative integrals `∫₀^{t_j} g` of node values on a uniform mesh.
pub fn cumulative_integral(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let mut out = vec![0.0; n + 1];
    for j in 0..n {
        let (s, w) = interval_weights(j, n);
        let inc: f64 = (0..4).map(|k| w[k] * values[s + k]).sum::<f64>() * h / 24.0;
        out[j + 1] = out[j] + inc;
    }
    out
}

/// Duhamel solutions `W(t_j)[u₀ + i∫₀^{t_j} W(-s)F(s) ds]` at all nodes.
fn duhamel(u0: &ComplexField, forcing: &[&ComplexField], h_disp: Dispersion, times: &[f64]) -> Vec<ComplexField> {
    let n = times.len() - 1;
    let h = times[1] - times[0];
    let pulled: Vec<ComplexField> = forcing
        .par_iter()
        .zip(times.par_iter())
        .map(|(f, &t)| crate::spectral::propagate(f, h_disp, -t))
        .collect();
    let i = Complex64::new(0.0, 1.0);
    let mut acc = u0.clone();
    let mut pre = Vec::with_capacity(n + 1);
    pre.push(acc.clone());
    for j in 0..n {
        let (s, w) = interval_weights(j, n);
        for k in 0..4 {
            acc.axpy(i * (w[k] * h / 24.0), &pulled[s + k]);
        }
        pre.push(acc.clone());
    }
    pre.into_par_iter().zip(times.par_iter()).map(|(u, &t)| crate::spectral::propagate(&u, h_disp, t)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL }
    }
}

/// Ratios of measured bilinear terms to the shapes in the local estimates,
/// for the iterate used as input.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct EstimateRatios {
    /// `Σ∫‖Mψ∓‖ / (δ M A_n)`
    pub mass: f64,
    /// `Σ∫‖φψ∓‖ / (δ A_n B_n)`
    pub product: f64,
    /// `2∫‖conj(ψ₊)ψ₋‖ / (δ^{1/2} A_n²)`
    pub null: f64,
}

impl EstimateRatios {
    pub fn max(&self) -> f64 {
        self.mass.max(self.product).max(self.null)
    }
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct PicardDiagnostics {
    pub sigma: f64,
    pub delta: f64,
    pub a0: f64,
    pub b0: f64,
    /// `A_n`, `B_n` for `n = 0, 1, …`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `𝔄_n`, `𝔅_n` for `n = 1, 2, …` (entry `k` holds `n = k + 1`).
    pub diff_a: Vec<f64>,
    pub diff_b: Vec<f64>,
    /// `(𝔄_{n+1}+𝔅_{n+1})/(𝔄_n+𝔅_n)` for `n = 1, 2, …`.
    pub ratios: Vec<f64>,
    /// Estimate ratios with iterate `n` as input, `n = 0, 1, …`.
    pub estimates: Vec<EstimateRatios>,
    pub converged: bool,
    pub iterations: usize,
    /// `𝔄 + 𝔅` of one further iteration after convergence.
    pub residual: f64,
}

impl PicardDiagnostics {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest `(A_{n+1} - a₀)/(δA_n(M + B_n))` over the run.
    pub fn recurrence_a_constant(&self, dirac: f64) -> f64 {
        (0..self.a.len().saturating_sub(1))
            .map(|n| {
                let den = self.delta * self.a[n] * (dirac + self.b[n]);
                if den > 0.0 {
                    (self.a[n + 1] - self.a0) / den
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest `(B_{n+1} - a₀ - b₀)/(δ^{1/2}A_n²)` over the run.
    pub fn recurrence_b_constant(&self) -> f64 {
        (0..self.b.len().saturating_sub(1))
            .map(|n| {
                let den = self.delta.sqrt() * self.a[n] * self.a[n];
                if den > 0.0 {
                    (self.b[n + 1] - self.a0 - self.b0) / den
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// One iteration: the Duhamel solution driven by the forcing of `prev`.
/// Returns the new iterate and the per-node forcing of `prev`.
fn advance(data: &DkgState, prev: &Iterate, sigma: f64) -> Result<(Iterate, Vec<NodeForcing>)> {
    let grid = data.grid();
    let forcing: Vec<NodeForcing> = (0..prev.times.len())
        .into_par_iter()
        .map(|j| node_forcing(grid, data.masses.dirac, sigma, prev, j))
        .collect::<Result<_>>()?;
    let pick = |sel: fn(&NodeForcing) -> &ComplexField| -> Vec<&ComplexField> { forcing.iter().map(sel).collect() };
    let times = &prev.times;
    let next = Iterate {
        times: times.clone(),
        psi_plus: duhamel(&data.spinors.plus, &pick(|f| &f.f_plus), Dispersion::PlusXi, times),
        psi_minus: duhamel(&data.spinors.minus, &pick(|f| &f.f_minus), Dispersion::MinusXi, times),
        phi_plus: duhamel(&data.waves.plus, &pick(|f| &f.g_plus), Dispersion::PlusBracket, times),
        phi_minus: duhamel(&data.waves.minus, &pick(|f| &f.g_minus), Dispersion::MinusBracket, times),
    };
    Ok((next, forcing))
}

/// `Σ_± ∫‖F±‖_{G^{σ,0}}` of node forcing, or of a difference of two.
fn forcing_l1(cur: &[NodeForcing], prev: Option<&[NodeForcing]>, sigma: f64, h: f64) -> f64 {
    let vals: Vec<f64> = (0..cur.len())
        .into_par_iter()
        .map(|j| match prev {
            None => norm_x_fast(&cur[j].f_plus, sigma, 0.0) + norm_x_fast(&cur[j].f_minus, sigma, 0.0),
            Some(p) => {
                let diff = |a: &ComplexField, b: &ComplexField| {
                    let floor = NOISE_FLOOR_REL * a.max_abs_coeff().max(b.max_abs_coeff());
                    norm_x_floor(&(a - b), sigma, 0.0, floor)
                };
                diff(&cur[j].f_plus, &p[j].f_plus) + diff(&cur[j].f_minus, &p[j].f_minus)
            }
        })
        .collect();
    *cumulative_integral(&vals, h).last().unwrap()
}

fn scalar_l1(vals: &[f64], h: f64) -> f64 {
    *cumulative_integral(vals, h).last().unwrap()
}

/// `Σ_± max_j ‖φ±(t_j)‖_{G^{σ,1}}`, or of the difference of two iterates.
fn wave_sup(cur: &Iterate, prev: Option<&Iterate>, sigma: f64) -> f64 {
    let one = |fs: &[ComplexField], ps: Option<&[ComplexField]>| -> f64 {
        (0..fs.len())
            .into_par_iter()
            .map(|j| match ps {
                None => norm_x_fast(&fs[j], sigma, 1.0),
                Some(p) => {
                    let floor = NOISE_FLOOR_REL * fs[j].max_abs_coeff().max(p[j].max_abs_coeff());
                    norm_x_floor(&(&fs[j] - &p[j]), sigma, 1.0, floor)
                }
            })
            .reduce(|| 0.0, f64::max)
    };
    one(&cur.phi_plus, prev.map(|p| p.phi_plus.as_slice())) + one(&cur.phi_minus, prev.map(|p| p.phi_minus.as_slice()))
}

fn check_finite(it: &Iterate) -> Result<()> {
    let all = it.psi_plus.iter().chain(&it.psi_minus).chain(&it.phi_plus).chain(&it.phi_minus);
    for (k, f) in all.enumerate() {
        if !f.is_finite() {
            let j = k % it.times.len();
            return Err(Error::BlowUp { t: it.times[j], reason: "non-finite Picard iterate".into() });
        }
    }
    Ok(())
}

/// Picard iteration on `[0, δ]` with `δ` from [`local_timestep`] at the data
/// norms for radius `sigma`.
pub fn run_contraction(
    data: &DkgState,
    sigma: f64,
    consts: &CalibratedConstants,
    opts: PicardOptions,
) -> Result<(Iterate, PicardDiagnostics)> {
    let (a0, b0) = data_norms(data, sigma)?;
    run_contraction_with_delta(data, sigma, local_timestep(a0, b0, consts), opts)
}

/// Picard iteration on `[0, delta]` for an explicitly chosen window.
///
/// Stops when `𝔄_n + 𝔅_n < tol`, then performs one more iteration whose
/// difference is reported as the residual. Non-convergence within
/// `max_iter` is an error carrying the observed ratio sequence.
pub fn run_contraction_with_delta(
    data: &DkgState,
    sigma: f64,
    delta: f64,
    opts: PicardOptions,
) -> Result<(Iterate, PicardDiagnostics)> {
    let (it, diag) = iterate_to_convergence(data, sigma, delta, opts)?;
    if !diag.converged {
        return Err(Error::NoConvergence { iterations: diag.iterations, ratios: diag.ratios });
    }
    Ok((it, diag))
}

/// As [`run_contraction_with_delta`] but returns the diagnostics of a
/// non-converged run instead of an error.
pub fn iterate_to_convergence(
    data: &DkgState,
    sigma: f64,
    delta: f64,
    opts: PicardOptions,
) -> Result<(Iterate, PicardDiagnostics)> {
    if data.masses.kg != KgMass::One {
        return Err(Error::InvalidParameter("the Picard solver covers the m = 1 system".into()));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("window length must be > 0, got {delta}")));
    }
    let (a0, b0) = data_norms(data, sigma)?;
    let h = delta / MESH_INTERVALS as f64;
    let times: Vec<f64> = (0..=MESH_INTERVALS).map(|j| j as f64 * h).collect();
    let mut diag = PicardDiagnostics { sigma, delta, a0, b0, ..Default::default() };
    let mut cur = Iterate::free(data, &times);
    diag.a.push(a0);
    diag.b.push(wave_sup(&cur, None, sigma));
    let mut prev_forcing: Option<Vec<NodeForcing>> = None;
    let mut extra_done = false;
    for n in 0..opts.max_iter + 1 {
        let (next, forcing) = advance(data, &cur, sigma)?;
        check_finite(&next)?;
        let an = diag.a[n];
        let bn = diag.b[n];
        let mass: Vec<f64> = forcing.iter().map(|f| f.mass_term).collect();
        let prod: Vec<f64> = forcing.iter().map(|f| f.product_term).collect();
        let null: Vec<f64> = forcing.iter().map(|f| f.null_term).collect();
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        diag.estimates.push(EstimateRatios {
            mass: ratio(scalar_l1(&mass, h), delta * data.masses.dirac * an),
            product: ratio(scalar_l1(&prod, h), delta * an * bn),
            null: ratio(2.0 * scalar_l1(&null, h), delta.sqrt() * an * an),
        });
        let da = forcing_l1(&forcing, prev_forcing.as_deref(), sigma, h);
        let db = wave_sup(&next, Some(&cur), sigma);
        if extra_done || diag.converged {
            diag.residual = da + db;
            break;
        }
        diag.a.push(a0 + forcing_l1(&forcing, None, sigma, h));
        diag.b.push(wave_sup(&next, None, sigma));
        if let (Some(&pa), Some(&pb)) = (diag.diff_a.last(), diag.diff_b.last()) {
            if pa + pb > 0.0 {
                diag.ratios.push((da + db) / (pa + pb));
            }
        }
        diag.diff_a.push(da);
        diag.diff_b.push(db);
        diag.iterations = n + 1;
        cur = next;
        prev_forcing = Some(forcing);
        if da + db < opts.tol {
            diag.converged = true;
        }
        extra_done = n + 1 >= opts.max_iter;
    }
    if !diag.converged {
        diag.residual = f64::NAN;
    }
    Ok((cur, diag))
}

/// Calibration result with the per-sample evidence.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Calibration {
    pub consts: CalibratedConstants,
    pub dirac: f64,
    pub sigma: f64,
    pub samples: Vec<SampleCalibration>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SampleCalibration {
    pub id: String,
    pub a0: f64,
    pub b0: f64,
    pub delta: f64,
    pub max_estimate_ratio: f64,
    pub max_contraction_ratio: f64,
    pub iterations: usize,
}

/// Largest power of two not exceeding `x`.
fn dyadic_floor(x: f64) -> f64 {
    2f64.powi(x.log2().floor() as i32)
}

/// Calibrates `(C, c₀)` on a sample set at radius `sigma`.
///
/// `C` is twice the largest measured estimate ratio (and at least twice
/// `extra_ratio`, e.g. a product-estimate constant measured elsewhere).
/// `c₀` is the largest dyadic value for which every sample satisfies the
/// smallness conditions of [`admissible_delta`] and contracts by one half.
/// The two are iterated until `C` is stable to 0.1%, starting from
/// `guess.big_c`.
pub fn calibrate(
    guess: &CalibratedConstants,
    masses: Masses,
    samples: &[(String, DkgState)],
    sigma: f64,
    extra_ratio: f64,
) -> Result<Calibration> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let opts = PicardOptions::default();
    let states: Vec<DkgState> = samples
        .iter()
        .map(|(_, s)| DkgState { masses, ..s.clone() })
        .collect();
    let norms: Vec<(f64, f64)> = states.iter().map(|s| data_norms(s, sigma)).collect::<Result<_>>()?;
    // A failed run (blow-up) counts as no contraction.
    let measure = |consts: &CalibratedConstants| -> Vec<Option<PicardDiagnostics>> {
        states
            .par_iter()
            .zip(norms.par_iter())
            .map(|(s, &(a0, b0))| {
                let delta = local_timestep(a0, b0, consts);
                iterate_to_convergence(s, sigma, delta, opts).ok().map(|r| r.1)
            })
            .collect()
    };
    let contracts = |runs: &[Option<PicardDiagnostics>]| {
        runs.iter().all(|r| matches!(r, Some(d) if d.converged && d.max_ratio() <= 0.5))
    };
    let mut big_c = guess.big_c.max(1.0 + 1e-9);
    let mut result = None;
    for _ in 0..8 {
        let c0_max = norms.iter().map(|&(a0, b0)| admissible_c0(big_c, masses.dirac, a0, b0)).fold(1.0, f64::min);
        let mut c0 = dyadic_floor(c0_max);
        let runs = loop {
            let runs = measure(&CalibratedConstants::new(c0, big_c)?);
            if contracts(&runs) {
                break runs;
            }
            c0 *= 0.5;
            if c0 < 1e-12 {
                let ratios = runs.iter().flatten().flat_map(|d| d.ratios.clone()).collect();
                return Err(Error::NoConvergence { iterations: opts.max_iter, ratios });
            }
        };
        let ratio = runs
            .iter()
            .flatten()
            .flat_map(|d| d.estimates.iter().map(|e| e.max()))
            .fold(extra_ratio, f64::max);
        let new_c = (2.0 * ratio).max(1.0 + 1e-9);
        let stable = (new_c - big_c).abs() <= 1e-3 * big_c;
        result = Some((CalibratedConstants::new(c0, big_c)?, runs));
        if stable {
            break;
        }
        big_c = new_c;
    }
    let (consts, runs) = result.expect("at least one round");
    let samples_out = samples
        .iter()
        .zip(&norms)
        .zip(runs)
        .map(|(((id, _), &(a0, b0)), d)| {
            let d = d.expect("contracting runs succeed");
            SampleCalibration {
                id: id.clone(),
                a0,
                b0,
                delta: d.delta,
                max_estimate_ratio: d.estimates.iter().map(|e| e.max()).fold(0.0, f64::max),
                max_contraction_ratio: d.max_ratio(),
                iterations: d.iterations,
            }
        })
        .collect();
    Ok(Calibration { consts, dirac: masses.dirac, sigma, samples: samples_out })
}

#[cfg(test)]
mod tests;
