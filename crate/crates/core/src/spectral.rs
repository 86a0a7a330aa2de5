//! Periodic grid on `[-L, L)`, forward/inverse transforms and exact Fourier
//! multipliers.
//!
//! Coefficients follow the continuum convention `f̂(ξ) = ∫ e^{-ixξ} f(x) dx`,
//! discretised with the trapezoid rule, so `ĉ_k ≈ f̂(ξ_k)` with `ξ_k = πk/L`
//! and `f(x) = (2L)^{-1} Σ_k ĉ_k e^{ixξ_k}`. Coefficients are stored in
//! ascending frequency order, index `j = k + N/2` for `k ∈ [-N/2, N/2)`.
//!
//! Quadratic products are evaluated on a zero-padded grid of `2N` points,
//! which holds the full product spectrum without aliasing.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance for the zero-mode test in front of `|D_x|^{-1}`.
pub const ZERO_MEAN_TOL: f64 = 1e-12;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

struct GridInner {
    half_length: f64,
    num_modes: usize,
    xi: Vec<f64>,
    plans: Plans,
    padded_plans: Plans,
    padded: OnceLock<Grid>,
}

/// Uniform periodic grid with `N` modes on `[-L, L)`.
///
/// Cheap to clone; transform plans are shared and safe for concurrent use.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.inner.half_length)
            .field("num_modes", &self.inner.num_modes)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.num_modes == other.inner.num_modes
                && self.inner.half_length == other.inner.half_length)
    }
}

impl Grid {
    pub fn new(half_length: f64, num_modes: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        if num_modes < 8 || !num_modes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "num_modes must be even and at least 8, got {num_modes}"
            )));
        }
        let half = (num_modes / 2) as i64;
        let xi = (-half..half)
            .map(|k| std::f64::consts::PI * k as f64 / half_length)
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                half_length,
                num_modes,
                xi,
                plans: Plans::new(num_modes),
                padded_plans: Plans::new(2 * num_modes),
                padded: OnceLock::new(),
            }),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.inner.half_length
    }

    pub fn num_modes(&self) -> usize {
        self.inner.num_modes
    }

    /// Grid frequencies `ξ_k = πk/L`, ascending.
    pub fn frequencies(&self) -> &[f64] {
        &self.inner.xi
    }

    /// Frequency spacing `π/L`.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.inner.half_length
    }

    /// Largest resolved `|ξ|`, attained by the unmatched `-N/2` mode.
    pub fn xi_max(&self) -> f64 {
        -self.inner.xi[0]
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.inner.half_length / self.inner.num_modes as f64
    }

    /// Sample positions `x_j = -L + jΔx`.
    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.inner.num_modes)
            .map(|j| -self.inner.half_length + j as f64 * dx)
            .collect()
    }

    /// Storage index of integer mode `k`, if resolved.
    pub fn index_of_mode(&self, k: i64) -> Option<usize> {
        let half = (self.inner.num_modes / 2) as i64;
        (-half..half).contains(&k).then(|| (k + half) as usize)
    }

    pub fn mode_of_index(&self, index: usize) -> i64 {
        index as i64 - (self.inner.num_modes / 2) as i64
    }

    pub fn zero_index(&self) -> usize {
        self.inner.num_modes / 2
    }

    /// The grid with the same `L` and `2N` modes on which products are formed.
    pub fn padded(&self) -> Grid {
        self.inner
            .padded
            .get_or_init(|| Grid::new(self.inner.half_length, 2 * self.inner.num_modes).unwrap())
            .clone()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }

    /// Samples `f(x_j)` of a closure.
    pub fn sample<F: Fn(f64) -> Complex64>(&self, f: F) -> ComplexField {
        let samples: Vec<Complex64> = self.positions().into_iter().map(f).collect();
        self.transform(&samples).expect("length matches by construction")
    }

    pub fn sample_real<F: Fn(f64) -> f64>(&self, f: F) -> ComplexField {
        self.sample(|x| Complex64::new(f(x), 0.0))
    }

    /// Trapezoid-rule transform of `N` real-space samples.
    pub fn transform(&self, samples: &[Complex64]) -> Result<ComplexField> {
        let n = self.num_modes();
        if samples.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: samples.len() });
        }
        let mut buf = samples.to_vec();
        self.inner.plans.forward.process(&mut buf);
        let coeffs = fft_order_to_coeffs(&buf, n, self.dx());
        ComplexField::from_coeffs(self.clone(), coeffs)
    }

    pub fn transform_real(&self, samples: &[f64]) -> Result<ComplexField> {
        let c: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&c)
    }

    /// Real-space samples of `field` on the `2N`-point padded grid.
    pub fn to_padded_samples(&self, field: &ComplexField) -> Vec<Complex64> {
        debug_assert!(field.grid == *self);
        self.padded_samples_of(&field.coeffs)
    }

    pub(crate) fn padded_samples_of(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.num_modes();
        let mut buf = coeffs_to_fft_order(coeffs, 2 * n, 1.0 / (2.0 * self.half_length()));
        self.inner.padded_plans.inverse.process(&mut buf);
        buf
    }

    /// Coefficients of padded-grid samples, truncated to `|k| < N/2`.
    ///
    /// The `-N/2` mode is discarded as well so the result stays inside the
    /// symmetric band `|k| ≤ N/2 - 1`.
    pub fn from_padded_samples(&self, samples: Vec<Complex64>) -> ComplexField {
        ComplexField { grid: self.clone(), coeffs: self.coeffs_from_padded(samples) }
    }

    pub(crate) fn coeffs_from_padded(&self, mut samples: Vec<Complex64>) -> Vec<Complex64> {
        let n = self.num_modes();
        assert_eq!(samples.len(), 2 * n, "padded sample count");
        self.inner.padded_plans.forward.process(&mut samples);
        let dx_pad = self.half_length() / n as f64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        let half = n / 2;
        for (j, c) in coeffs.iter_mut().enumerate().skip(1) {
            let k = j as i64 - half as i64;
            let src = k.rem_euclid(2 * n as i64) as usize;
            *c = samples[src] * sign(k) * dx_pad;
        }
        coeffs
    }

    /// Full (untruncated) product `f·g` as a field on the padded grid.
    pub fn product_full(&self, f: &ComplexField, g: &ComplexField) -> Result<ComplexField> {
        f.check_grid(g)?;
        let pf = self.to_padded_samples(f);
        let pg = self.to_padded_samples(g);
        let prod: Vec<Complex64> = pf.iter().zip(&pg).map(|(a, b)| a * b).collect();
        self.padded().transform(&prod)
    }
}

#[inline]
fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Ascending coefficients → FFT-ordered buffer of length `len ≥ N`, applying
/// the `(-1)^k` shift for the `-L` origin and an overall scale.
fn coeffs_to_fft_order(coeffs: &[Complex64], len: usize, scale: f64) -> Vec<Complex64> {
    let n = coeffs.len();
    let half = (n / 2) as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (j, c) in coeffs.iter().enumerate() {
        let k = j as i64 - half;
        buf[k.rem_euclid(len as i64) as usize] = c * (sign(k) * scale);
    }
    buf
}

fn fft_order_to_coeffs(buf: &[Complex64], n: usize, scale: f64) -> Vec<Complex64> {
    let half = (n / 2) as i64;
    (0..n)
        .map(|j| {
            let k = j as i64 - half;
            buf[k.rem_euclid(n as i64) as usize] * (sign(k) * scale)
        })
        .collect()
}

/// Fourier coefficients of a function on a [`Grid`].
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl ComplexField {
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.num_modes() {
            return Err(Error::LengthMismatch { expected: grid.num_modes(), got: coeffs.len() });
        }
        if let Some(mode) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { mode });
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_coeffs_unchecked(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.num_modes());
        Self { grid, coeffs }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex64::new(0.0, 0.0); grid.num_modes()] }
    }

    /// Field with a single nonzero coefficient at integer mode `k`.
    pub fn single_mode(grid: &Grid, k: i64, value: Complex64) -> Result<Self> {
        let idx = grid
            .index_of_mode(k)
            .ok_or_else(|| Error::InvalidParameter(format!("mode {k} outside the grid band")))?;
        let mut f = Self::zeros(grid);
        f.coeffs[idx] = value;
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn mode(&self, k: i64) -> Complex64 {
        self.grid.index_of_mode(k).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[self.grid.zero_index()]
    }

    pub fn check_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn to_samples(&self) -> Vec<Complex64> {
        let n = self.grid.num_modes();
        let mut buf = coeffs_to_fft_order(&self.coeffs, n, 1.0 / (2.0 * self.grid.half_length()));
        self.grid.inner.plans.inverse.process(&mut buf);
        buf
    }

    /// `‖f‖_{L²_x}` via Plancherel: `(2L)^{-1} Σ |ĉ_k|²`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / (2.0 * self.grid.half_length())
    }

    /// `‖f‖_{L²_x}` from real-space samples (trapezoid rule).
    pub fn l2_norm_physical(&self) -> f64 {
        let dx = self.grid.dx();
        (self.to_samples().iter().map(|c| c.norm_sqr()).sum::<f64>() * dx).sqrt()
    }

    /// Largest `|f(x_j)|` over the grid.
    pub fn sup_norm(&self) -> f64 {
        self.to_samples().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Inner product `∫ f · conj(g) dx`.
    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum::<Complex64>()
            / (2.0 * self.grid.half_length())
    }

    /// Coefficients of `conj(f)` (pointwise conjugate in x): `ĉ'_k = conj(ĉ_{-k})`,
    /// with the `-N/2` mode paired with itself.
    pub fn conj(&self) -> ComplexField {
        let n = self.grid.num_modes();
        let coeffs = (0..n)
            .map(|j| {
                let mirror = if j == 0 { 0 } else { n - j };
                self.coeffs[mirror].conj()
            })
            .collect();
        Self { grid: self.grid.clone(), coeffs }
    }

    /// Real part `(f + conj f)/2` in x.
    pub fn real_part(&self) -> ComplexField {
        let c = self.conj();
        self.zip_with(&c, |a, b| (a + b) * 0.5)
    }

    /// Copy with the unmatched `-N/2` coefficient set to zero.
    pub fn without_nyquist(mut self) -> Self {
        self.coeffs[0] = Complex64::new(0.0, 0.0);
        self
    }

    /// Copy with the zero mode removed.
    pub fn without_mean(mut self) -> Self {
        let z = self.grid.zero_index();
        self.coeffs[z] = Complex64::new(0.0, 0.0);
        self
    }

    /// `max_k |ĉ_{-k} - conj(ĉ_k)|` over the symmetric band, relative to the
    /// largest coefficient. Zero for fields of real-valued functions.
    pub fn real_symmetry_defect(&self) -> f64 {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.grid.num_modes();
        let mut worst: f64 = self.coeffs[0].im.abs();
        for j in 1..n {
            worst = worst.max((self.coeffs[n - j] - self.coeffs[j].conj()).norm());
        }
        worst / scale
    }

    pub fn scale(&self, factor: Complex64) -> ComplexField {
        self.map(|c| c * factor)
    }

    pub fn scale_real(&self, factor: f64) -> ComplexField {
        self.map(|c| c * factor)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> ComplexField {
        Self { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|&c| f(c)).collect() }
    }

    /// Pointwise combination of coefficients; panics on grid mismatch.
    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(
        &self,
        other: &ComplexField,
        f: F,
    ) -> ComplexField {
        assert!(self.grid == other.grid, "grid mismatch");
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Multiplies coefficient `j` by `factors[j]`.
    pub fn mul_pointwise(&self, factors: &[Complex64]) -> ComplexField {
        debug_assert_eq!(factors.len(), self.coeffs.len());
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(factors).map(|(a, b)| a * b).collect(),
        }
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: Complex64, other: &ComplexField) {
        debug_assert!(self.grid == other.grid);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coefficient difference relative to the larger operand.
    pub fn max_rel_diff(&self, other: &ComplexField) -> f64 {
        let scale = self.max_abs_coeff().max(other.max_abs_coeff());
        let diff =
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

impl Add for &ComplexField {
    type Output = ComplexField;
    fn add(self, rhs: &ComplexField) -> ComplexField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ComplexField {
    type Output = ComplexField;
    fn sub(self, rhs: &ComplexField) -> ComplexField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &ComplexField {
    type Output = ComplexField;
    fn neg(self) -> ComplexField {
        self.map(|c| -c)
    }
}

impl Mul<f64> for &ComplexField {
    type Output = ComplexField;
    fn mul(self, rhs: f64) -> ComplexField {
        self.scale_real(rhs)
    }
}

impl Mul<Complex64> for &ComplexField {
    type Output = ComplexField;
    fn mul(self, rhs: Complex64) -> ComplexField {
        self.scale(rhs)
    }
}

/// Sign `ε ∈ {-1, +1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Minus, Sign::Plus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

/// Real Fourier symbols used by the equations and the norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multiplier {
    /// `⟨ξ⟩^a = (1 + ξ²)^{a/2}`
    Bracket(f64),
    /// `|ξ|`
    Abs,
    /// `|ξ|^{-1}` on mean-zero fields
    AbsInv,
    /// `e^{σ|ξ|}`
    ExpAbs(f64),
    /// `e^{εσξ}`
    ExpSigned { eps: Sign, sigma: f64 },
    /// `e^{εσξ} - 1`
    SymbolDiff { eps: Sign, sigma: f64 },
}

impl Multiplier {
    pub fn symbol(&self, xi: f64) -> f64 {
        match *self {
            Multiplier::Bracket(a) => (1.0 + xi * xi).powf(0.5 * a),
            Multiplier::Abs => xi.abs(),
            Multiplier::AbsInv => {
                if xi == 0.0 {
                    0.0
                } else {
                    1.0 / xi.abs()
                }
            }
            Multiplier::ExpAbs(sigma) => (sigma * xi.abs()).exp(),
            Multiplier::ExpSigned { eps, sigma } => (eps.value() * sigma * xi).exp(),
            Multiplier::SymbolDiff { eps, sigma } => (eps.value() * sigma * xi).exp_m1(),
        }
    }

    fn sigma(&self) -> Option<f64> {
        match *self {
            Multiplier::ExpAbs(s) => Some(s),
            Multiplier::ExpSigned { sigma, .. } | Multiplier::SymbolDiff { sigma, .. } => {
                Some(sigma)
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(s) = self.sigma() {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {s}")));
            }
        }
        if let Multiplier::Bracket(a) = self {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("bracket exponent {a}")));
            }
        }
        Ok(())
    }
}

/// Multiplies each coefficient by the symbol at its frequency.
///
/// Exponential symbols flush coefficients below `1e-300 / e^{σ ξ_max}` to zero
/// before weighting so that underflow-level noise cannot produce infinities.
pub fn apply_multiplier(field: &ComplexField, id: Multiplier) -> Result<ComplexField> {
    id.validate()?;
    let grid = field.grid();
    if id == Multiplier::AbsInv {
        let z = field.zero_mode().norm();
        let scale = field.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if z > ZERO_MEAN_TOL * scale {
            return Err(Error::NonzeroMean(z));
        }
    }
    let flush = id.sigma().map(|s| 1e-300 / (s * grid.xi_max()).exp());
    let mut coeffs = Vec::with_capacity(field.coeffs.len());
    for (j, (&c, &xi)) in field.coeffs.iter().zip(grid.frequencies()).enumerate() {
        let out = match flush {
            Some(floor) if c.norm() < floor => Complex64::new(0.0, 0.0),
            _ => c * id.symbol(xi),
        };
        if !(out.re.is_finite() && out.im.is_finite()) {
            return Err(Error::NonFinite { mode: j });
        }
        coeffs.push(out);
    }
    Ok(ComplexField { grid: grid.clone(), coeffs })
}

/// Dispersion relations `h(ξ)` of the solution groups `W_h(t) = e^{-ith(D_x)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dispersion {
    PlusXi,
    MinusXi,
    PlusBracket,
    MinusBracket,
    PlusAbs,
    MinusAbs,
}

impl Dispersion {
    pub fn h(self, xi: f64) -> f64 {
        match self {
            Dispersion::PlusXi => xi,
            Dispersion::MinusXi => -xi,
            Dispersion::PlusBracket => (1.0 + xi * xi).sqrt(),
            Dispersion::MinusBracket => -(1.0 + xi * xi).sqrt(),
            Dispersion::PlusAbs => xi.abs(),
            Dispersion::MinusAbs => -xi.abs(),
        }
    }

    /// Symbol `e^{-ith(ξ_k)}` on every grid frequency.
    pub fn phases(self, grid: &Grid, t: f64) -> Vec<Complex64> {
        grid.frequencies().iter().map(|&xi| Complex64::from_polar(1.0, -t * self.h(xi))).collect()
    }
}

/// `W_h(t) f`.
pub fn propagate(field: &ComplexField, h: Dispersion, t: f64) -> ComplexField {
    field.mul_pointwise(&h.phases(field.grid(), t))
}

/// Truncated product `P_N(f g)`: the exact convolution of the coefficient
/// sequences restricted to `|k| < N/2`.
pub fn dealias_product(f: &ComplexField, g: &ComplexField) -> Result<ComplexField> {
    f.check_grid(g)?;
    let grid = f.grid();
    let pf = grid.to_padded_samples(f);
    let pg = grid.to_padded_samples(g);
    let prod: Vec<Complex64> = pf.iter().zip(&pg).map(|(a, b)| a * b).collect();
    Ok(grid.from_padded_samples(prod))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_band_limited(grid: &Grid, max_mode: i64, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = ComplexField::zeros(grid);
        for k in -max_mode..=max_mode {
            let idx = grid.index_of_mode(k).unwrap();
            f.coeffs_mut()[idx] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f
    }

    /// Direct O(N²) truncated convolution, normalised like the transform:
    /// `(fg)^_k = (2L)^{-1} Σ_{a+b=k} f̂_a ĝ_b`.
    fn brute_convolution(f: &ComplexField, g: &ComplexField) -> Vec<Complex64> {
        let grid = f.grid();
        let n = grid.num_modes() as i64;
        let mut out = vec![c(0.0, 0.0); n as usize];
        for a in -n / 2..n / 2 {
            for b in -n / 2..n / 2 {
                let k = a + b;
                if k > -n / 2 && k < n / 2 {
                    let idx = grid.index_of_mode(k).unwrap();
                    out[idx] += f.mode(a) * g.mode(b);
                }
            }
        }
        let norm = 1.0 / (2.0 * grid.half_length());
        out.iter().map(|v| v * norm).collect()
    }

    #[test]
    fn grid_frequencies() {
        let g = Grid::new(PI, 8).unwrap();
        let want = [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        for (a, b) in g.frequencies().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let g = Grid::new(32.0 * PI, 1024).unwrap();
        assert!((g.dxi() - 1.0 / 32.0).abs() < 1e-15);
        assert!(g.frequencies().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(Grid::new(1.0, 7), Err(Error::InvalidGrid(_))));
        assert!(Grid::new(1.0, 6).is_err());
        assert!(Grid::new(0.0, 16).is_err());
        assert!(Grid::new(-1.0, 16).is_err());
    }

    #[test]
    fn transform_constant_and_cosine() {
        let g = Grid::new(3.0, 32).unwrap();
        let one = g.sample_real(|_| 1.0);
        for (j, v) in one.coeffs().iter().enumerate() {
            let want = if j == g.zero_index() { 6.0 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-13, "mode {j}: {v}");
        }
        let xi1 = PI / 3.0;
        let cosine = g.sample_real(|x| (xi1 * x).cos());
        assert!((cosine.mode(1) - c(3.0, 0.0)).norm() < 1e-13);
        assert!((cosine.mode(-1) - c(3.0, 0.0)).norm() < 1e-13);
        assert!(cosine.mode(2).norm() < 1e-13);
    }

    #[test]
    fn transform_length_mismatch() {
        let g = Grid::new(1.0, 16).unwrap();
        assert!(matches!(g.transform(&[c(0.0, 0.0); 15]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn inverse_after_forward_is_identity() {
        let g = Grid::new(5.0, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<Complex64> =
            (0..64).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let back = g.transform(&samples).unwrap().to_samples();
        let scale = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn periodised_poisson_kernel_has_exponential_coefficients() {
        // Periodisation of a/(π(x²+a²)) over period 2L; its Fourier series is
        // exactly Σ e^{-a|ξ_k|} e^{ixξ_k} / 2L (Poisson summation).
        let l = 64.0 * PI;
        let g = Grid::new(l, 8192).unwrap();
        let a = 1.0;
        let beta = a * PI / l;
        let f = g.sample_real(|x| beta.sinh() / (beta.cosh() - (PI * x / l).cos()) / (2.0 * l));
        for (&xi, v) in g.frequencies().iter().zip(f.coeffs()) {
            if xi.abs() <= 10.0 {
                assert!((v - c((-a * xi.abs()).exp(), 0.0)).norm() < 1e-6, "xi = {xi}");
            }
        }
    }

    #[test]
    fn truncated_poisson_kernel_error_is_the_tail_mass() {
        // The unperiodised kernel misses the mass outside [-L, L), which is
        // 1 - (2/π) atan(L) ≤ 2/(πL); coefficients deviate by at most that.
        let l = 64.0 * PI;
        let g = Grid::new(l, 8192).unwrap();
        let f = g.sample_real(|x| 1.0 / (PI * (x * x + 1.0)));
        let tail = 1.0 - 2.0 / PI * l.atan();
        for (&xi, v) in g.frequencies().iter().zip(f.coeffs()) {
            if xi.abs() <= 10.0 {
                let err = (v - c((-xi.abs()).exp(), 0.0)).norm();
                assert!(err <= 1.05 * tail + 1e-9, "xi = {xi}: {err} vs tail {tail}");
            }
        }
    }

    #[test]
    fn multiplier_examples() {
        let g = Grid::new(PI, 16).unwrap();
        let f = random_band_limited(&g, 7, 1);
        let same = apply_multiplier(&f, Multiplier::ExpAbs(0.0)).unwrap();
        assert_eq!(same.coeffs(), f.coeffs());
        let same = apply_multiplier(&f, Multiplier::ExpSigned { eps: Sign::Minus, sigma: 0.0 }).unwrap();
        assert_eq!(same.coeffs(), f.coeffs());

        let single = ComplexField::single_mode(&g, 3, c(2.0, -1.0)).unwrap();
        let out = apply_multiplier(&single, Multiplier::Bracket(1.0)).unwrap();
        assert!((out.mode(3) - c(2.0, -1.0) * 10f64.sqrt()).norm() < 1e-14);

        let diff = apply_multiplier(&single, Multiplier::SymbolDiff { eps: Sign::Plus, sigma: 0.1 }).unwrap();
        assert!((diff.mode(3) - c(2.0, -1.0) * (0.3f64.exp() - 1.0)).norm() < 1e-14);
    }

    #[test]
    fn abs_inverse_requires_zero_mean() {
        let g = Grid::new(PI, 16).unwrap();
        let f = random_band_limited(&g, 5, 2);
        assert!(matches!(apply_multiplier(&f, Multiplier::AbsInv), Err(Error::NonzeroMean(_))));
        let f0 = f.without_mean();
        let inv = apply_multiplier(&f0, Multiplier::AbsInv).unwrap();
        let back = apply_multiplier(&inv, Multiplier::Abs).unwrap();
        assert!(back.max_rel_diff(&f0) < 1e-14);
    }

    #[test]
    fn exponential_multipliers_compose() {
        let g = Grid::new(10.0, 128).unwrap();
        let f = random_band_limited(&g, 40, 3);
        let a = apply_multiplier(&apply_multiplier(&f, Multiplier::ExpAbs(0.3)).unwrap(), Multiplier::ExpAbs(0.2))
            .unwrap();
        let b = apply_multiplier(&f, Multiplier::ExpAbs(0.5)).unwrap();
        assert!(a.max_rel_diff(&b) < 1e-14);
    }

    #[test]
    fn exp_multiplier_overflow_is_reported() {
        let g = Grid::new(1.0, 64).unwrap();
        let f = ComplexField::single_mode(&g, 31, c(1.0, 0.0)).unwrap();
        // σ ξ_max ≈ 10 · 100 overflows e^{σξ}.
        assert!(matches!(apply_multiplier(&f, Multiplier::ExpAbs(10.0)), Err(Error::NonFinite { .. })));
        assert!(apply_multiplier(&f, Multiplier::ExpAbs(-1.0)).is_err());
    }

    #[test]
    fn propagate_examples() {
        let l = 20.0;
        let g = Grid::new(l, 256).unwrap();
        let gauss = |x: f64| (-(x * x)).exp();
        let f = g.sample_real(gauss);
        let t = 1.7;
        let moved = propagate(&f, Dispersion::PlusXi, t).to_samples();
        for (x, v) in g.positions().iter().zip(&moved) {
            assert!((v - c(gauss(x - t), 0.0)).norm() < 1e-12);
        }
        let id = propagate(&f, Dispersion::MinusBracket, 0.0);
        assert_eq!(id.coeffs(), f.coeffs());
        let zero = ComplexField::single_mode(&g, 0, c(1.0, 0.0)).unwrap();
        let p = propagate(&zero, Dispersion::PlusBracket, 0.4);
        assert!((p.zero_mode() - Complex64::from_polar(1.0, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn dealias_examples() {
        let g = Grid::new(4.0, 32).unwrap();
        let f = random_band_limited(&g, 15, 4);
        let one = g.sample_real(|_| 1.0);
        let p = dealias_product(&f, &one).unwrap();
        // f without its -N/2 mode (which random_band_limited leaves at zero).
        assert!(p.max_rel_diff(&f) < 1e-13);

        let a = ComplexField::single_mode(&g, 3, c(1.0, 0.0)).unwrap();
        let b = ComplexField::single_mode(&g, 5, c(0.0, 2.0)).unwrap();
        let p = dealias_product(&a, &b).unwrap();
        let want = c(0.0, 2.0) / (2.0 * g.half_length());
        assert!((p.mode(8) - want).norm() < 1e-15);
        assert!(p.coeffs().iter().enumerate().all(|(j, v)| j == g.index_of_mode(8).unwrap() || v.norm() < 1e-15));

        let other = Grid::new(5.0, 32).unwrap();
        assert!(matches!(dealias_product(&f, &ComplexField::zeros(&other)), Err(Error::GridMismatch)));
    }

    #[test]
    fn dealias_matches_brute_force_convolution() {
        let g = Grid::new(7.0, 64).unwrap();
        for seed in 0..4 {
            let f = random_band_limited(&g, 16, 10 + seed);
            let h = random_band_limited(&g, 16, 20 + seed);
            let fast = dealias_product(&f, &h).unwrap();
            let slow = brute_convolution(&f, &h);
            let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in fast.coeffs().iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-12 * scale);
            }
        }
        // Full-band inputs exercise the truncation, including the -N/2 mode.
        let mut f = random_band_limited(&g, 31, 5);
        f.coeffs_mut()[0] = c(0.3, -0.2);
        let h = random_band_limited(&g, 31, 6);
        let fast = dealias_product(&f, &h).unwrap();
        let slow = brute_convolution(&f, &h);
        let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in fast.coeffs().iter().zip(&slow) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn product_exponential_identity() {
        let g = Grid::new(6.0, 128).unwrap();
        let f = random_band_limited(&g, 30, 8);
        let h = random_band_limited(&g, 30, 9);
        for eps in Sign::BOTH {
            let m = Multiplier::ExpSigned { eps, sigma: 0.5 };
            let lhs = apply_multiplier(&dealias_product(&f, &h).unwrap(), m).unwrap();
            let rhs = dealias_product(&apply_multiplier(&f, m).unwrap(), &apply_multiplier(&h, m).unwrap())
                .unwrap();
            assert!(lhs.max_rel_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn conjugation_commutes_with_transport() {
        let g = Grid::new(6.0, 64).unwrap();
        let f = random_band_limited(&g, 31, 11);
        let lhs = propagate(&f, Dispersion::PlusXi, 0.9).conj();
        let rhs = propagate(&f.conj(), Dispersion::PlusXi, 0.9);
        assert!(lhs.max_rel_diff(&rhs) < 1e-14);
        // conj in coefficient space agrees with pointwise conjugation of samples.
        let via_samples: Vec<Complex64> = f.to_samples().iter().map(|v| v.conj()).collect();
        assert!(g.transform(&via_samples).unwrap().max_rel_diff(&f.conj()) < 1e-12);
    }

    #[test]
    fn product_full_holds_the_whole_spectrum() {
        let g = Grid::new(3.0, 16).unwrap();
        let a = ComplexField::single_mode(&g, 7, c(1.0, 0.0)).unwrap();
        let b = ComplexField::single_mode(&g, 6, c(1.0, 0.0)).unwrap();
        let full = g.product_full(&a, &b).unwrap();
        assert!((full.mode(13) - c(1.0 / 6.0, 0.0)).norm() < 1e-14);
        assert!((full.l2_norm() - a.l2_norm() * b.sup_norm()).abs() < 1e-12);
    }

    #[test]
    fn plancherel() {
        let g = Grid::new(5.0, 128).unwrap();
        let f = random_band_limited(&g, 50, 12);
        assert!((f.l2_norm() - f.l2_norm_physical()).abs() <= 1e-10 * f.l2_norm());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn propagation_is_unitary(seed in 0u64..1000, t in -50.0f64..50.0, which in 0usize..6) {
                let h = [Dispersion::PlusXi, Dispersion::MinusXi, Dispersion::PlusBracket,
                         Dispersion::MinusBracket, Dispersion::PlusAbs, Dispersion::MinusAbs][which];
                let g = Grid::new(4.0, 32).unwrap();
                let f = random_band_limited(&g, 15, seed);
                let p = propagate(&f, h, t);
                prop_assert!((p.l2_norm() - f.l2_norm()).abs() <= 1e-13 * f.l2_norm());
            }

            #[test]
            fn exp_abs_semigroup(seed in 0u64..1000, s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
                let g = Grid::new(4.0, 32).unwrap();
                let f = random_band_limited(&g, 15, seed);
                let a = apply_multiplier(&apply_multiplier(&f, Multiplier::ExpAbs(s1)).unwrap(),
                                         Multiplier::ExpAbs(s2)).unwrap();
                let b = apply_multiplier(&f, Multiplier::ExpAbs(s1 + s2)).unwrap();
                prop_assert!(a.max_rel_diff(&b) < 1e-13);
            }
        }
    }
}
