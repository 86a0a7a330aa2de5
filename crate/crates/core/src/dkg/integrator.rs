//! Integrating-factor RK4: the linear part is propagated exactly, the
//! nonlinearity by the classical fourth-order rule in the interaction picture.

use std::collections::HashMap;

use num_complex::Complex64;

use super::{DkgState, KgMass, Masses, SpinorPair, WavePair};
use crate::error::{Error, Result};
use crate::gevrey::{charge, NormLedger};
use crate::spectral::{ComplexField, Dispersion, Grid};

/// Relative charge drift at which an evolution is declared unstable.
pub const CHARGE_DRIFT_ABORT: f64 = 0.01;

/// Coefficient vectors of `(ψ₊, ψ₋, φ₊, φ₋)` and the carried zero mode.
#[derive(Clone)]
struct Vars {
    f: [Vec<Complex64>; 4],
    z: [Complex64; 2],
}

impl Vars {
    fn from_state(s: &DkgState) -> Self {
        Self {
            f: [
                s.spinors.plus.coeffs().to_vec(),
                s.spinors.minus.coeffs().to_vec(),
                s.waves.plus.coeffs().to_vec(),
                s.waves.minus.coeffs().to_vec(),
            ],
            z: s.zero_mode,
        }
    }

    fn into_state(self, grid: &Grid, masses: Masses, t: f64) -> DkgState {
        let [a, b, c, d] = self.f;
        let field = |v| ComplexField::from_coeffs_unchecked(grid.clone(), v);
        DkgState {
            t,
            spinors: SpinorPair { plus: field(a), minus: field(b) },
            waves: WavePair { plus: field(c), minus: field(d) },
            masses,
            zero_mode: self.z,
        }
    }

    /// `self + alpha·other`
    fn plus_scaled(&self, alpha: f64, other: &Vars) -> Vars {
        let mut out = self.clone();
        for (o, x) in out.f.iter_mut().zip(&other.f) {
            for (a, b) in o.iter_mut().zip(x) {
                *a += b * alpha;
            }
        }
        out.z[0] += other.z[0] * alpha;
        out.z[1] += other.z[1] * alpha;
        out
    }

    fn add(&self, other: &Vars) -> Vars {
        self.plus_scaled(1.0, other)
    }

    fn is_finite(&self) -> bool {
        self.f.iter().flatten().chain(&self.z).all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Exact linear flow over a fixed time `tau`.
struct Prop {
    phases: [Vec<Complex64>; 4],
    tau: f64,
}

fn dispersions(kg: KgMass) -> [Dispersion; 4] {
    match kg {
        KgMass::One => [Dispersion::PlusXi, Dispersion::MinusXi, Dispersion::PlusBracket, Dispersion::MinusBracket],
        KgMass::Zero => [Dispersion::PlusXi, Dispersion::MinusXi, Dispersion::PlusAbs, Dispersion::MinusAbs],
    }
}

impl Prop {
    fn new(grid: &Grid, kg: KgMass, tau: f64) -> Self {
        let [a, b, c, d] = dispersions(kg);
        Self {
            phases: [a.phases(grid, tau), b.phases(grid, tau), c.phases(grid, tau), d.phases(grid, tau)],
            tau,
        }
    }

    fn apply(&self, v: &Vars) -> Vars {
        let mut out = v.clone();
        for (o, p) in out.f.iter_mut().zip(&self.phases) {
            for (a, b) in o.iter_mut().zip(p) {
                *a *= b;
            }
        }
        // φ̂(0)'' = source: the free part is a pure drift.
        out.z[0] = v.z[0] + v.z[1] * self.tau;
        out
    }
}

/// Truncated products `P((φ - M)ψ₋)`, `P((φ - M)ψ₊)` and `P(Re(conj(ψ₊)ψ₋))`
/// from coefficient vectors; `φ` is taken real.
pub(crate) fn coupling_products(
    grid: &Grid,
    dirac: f64,
    phi: &[Complex64],
    psi_plus: &[Complex64],
    psi_minus: &[Complex64],
) -> [Vec<Complex64>; 3] {
    let ((pphi, pp), pm) = rayon::join(
        || rayon::join(|| grid.padded_samples_of(phi), || grid.padded_samples_of(psi_plus)),
        || grid.padded_samples_of(psi_minus),
    );
    let len = pphi.len();
    let mut fa = Vec::with_capacity(len);
    let mut fb = Vec::with_capacity(len);
    let mut fr = Vec::with_capacity(len);
    for j in 0..len {
        let q = pphi[j].re - dirac;
        fa.push(pm[j] * q);
        fb.push(pp[j] * q);
        fr.push(Complex64::new((pp[j].conj() * pm[j]).re, 0.0));
    }
    let ((fa, fb), fr) = rayon::join(
        || rayon::join(|| grid.coeffs_from_padded(fa), || grid.coeffs_from_padded(fb)),
        || grid.coeffs_from_padded(fr),
    );
    [fa, fb, fr]
}

/// Nonlinear part of the right-hand side.
fn nonlinear(grid: &Grid, masses: Masses, v: &Vars) -> Vars {
    let zi = grid.zero_index();
    let mut phi: Vec<Complex64> = v.f[2].iter().zip(&v.f[3]).map(|(a, b)| a + b).collect();
    if masses.kg == KgMass::Zero {
        phi[zi] += v.z[0];
    }
    let [fa, fb, fr] = coupling_products(grid, masses.dirac, &phi, &v.f[0], &v.f[1]);
    let i = Complex64::new(0.0, 1.0);
    let dpp: Vec<Complex64> = fa.iter().map(|c| i * c).collect();
    let dpm: Vec<Complex64> = fb.iter().map(|c| i * c).collect();
    let xi = grid.frequencies();
    let (inv, z): (Vec<f64>, [Complex64; 2]) = match masses.kg {
        KgMass::One => (xi.iter().map(|x| 1.0 / (1.0 + x * x).sqrt()).collect(), [Complex64::new(0.0, 0.0); 2]),
        KgMass::Zero => (
            xi.iter().map(|&x| if x == 0.0 { 0.0 } else { 1.0 / x.abs() }).collect(),
            [Complex64::new(0.0, 0.0), fr[zi] * -2.0],
        ),
    };
    let dwp: Vec<Complex64> = fr.iter().zip(&inv).map(|(r, w)| -i * r * w).collect();
    let dwm: Vec<Complex64> = dwp.iter().map(|c| -c).collect();
    Vars { f: [dpp, dpm, dwp, dwm], z }
}

/// Time derivative of the split variables.
#[derive(Clone, Debug)]
pub struct Derivative {
    pub psi_plus: ComplexField,
    pub psi_minus: ComplexField,
    pub phi_plus: ComplexField,
    pub phi_minus: ComplexField,
    /// Derivative of the carried zero mode (zero for `m = 1`).
    pub zero_mode: [Complex64; 2],
}

/// Full right-hand side `∂_t(ψ₊, ψ₋, φ₊, φ₋)`.
pub fn rhs(state: &DkgState) -> Derivative {
    let grid = state.grid();
    let v = Vars::from_state(state);
    let mut d = nonlinear(grid, state.masses, &v);
    let mi = Complex64::new(0.0, -1.0);
    for (k, h) in dispersions(state.masses.kg).into_iter().enumerate() {
        for ((out, c), &xi) in d.f[k].iter_mut().zip(&v.f[k]).zip(grid.frequencies()) {
            *out += mi * h.h(xi) * c;
        }
    }
    if state.masses.kg == KgMass::Zero {
        d.z[0] += v.z[1];
    }
    let s = d.into_state(grid, state.masses, state.t);
    Derivative {
        psi_plus: s.spinors.plus,
        psi_minus: s.spinors.minus,
        phi_plus: s.waves.plus,
        phi_minus: s.waves.minus,
        zero_mode: s.zero_mode,
    }
}

/// Stepper for a fixed grid, mass pair and step size, with the linear
/// propagators precomputed.
pub struct Integrator {
    grid: Grid,
    masses: Masses,
    dt: f64,
    full: Prop,
    half: Prop,
}

impl Integrator {
    /// Negative steps integrate backwards in time.
    pub fn new(grid: &Grid, masses: Masses, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be finite and nonzero, got {dt}")));
        }
        Ok(Self {
            grid: grid.clone(),
            masses,
            dt,
            full: Prop::new(grid, masses.kg, dt),
            half: Prop::new(grid, masses.kg, 0.5 * dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &DkgState) -> Result<DkgState> {
        if *state.grid() != self.grid || state.masses != self.masses {
            return Err(Error::InvalidParameter("state does not match the integrator's grid or masses".into()));
        }
        let h = self.dt;
        let nl = |v: &Vars| nonlinear(&self.grid, self.masses, v);
        let u = Vars::from_state(state);
        let k1 = nl(&u);
        let k2 = nl(&self.half.apply(&u.plus_scaled(0.5 * h, &k1)));
        let eu_half = self.half.apply(&u);
        let k3 = nl(&eu_half.plus_scaled(0.5 * h, &k2));
        let eu = self.full.apply(&u);
        let k4 = nl(&eu.plus_scaled(h, &self.half.apply(&k3)));
        let mut incr = self.full.apply(&k1).plus_scaled(2.0, &self.half.apply(&k2.add(&k3)));
        incr = incr.add(&k4);
        let next = eu.plus_scaled(h / 6.0, &incr);
        let t = state.t + h;
        if !next.is_finite() {
            return Err(Error::BlowUp { t, reason: "non-finite coefficients".into() });
        }
        Ok(next.into_state(&self.grid, self.masses, t))
    }
}

/// One step of size `dt`.
pub fn step(state: &DkgState, dt: f64) -> Result<DkgState> {
    Integrator::new(state.grid(), state.masses, dt)?.step(state)
}

/// Default step: half a grid spacing, and at least 64 steps per window of
/// length `delta` when one is given.
pub fn auto_dt(grid: &Grid, delta: Option<f64>) -> f64 {
    let base = 0.5 * grid.dx();
    match delta {
        Some(d) if d > 0.0 => base.min(d / 64.0),
        _ => base,
    }
}

/// Sample schedule for [`evolve`]: offsets from the start time.
#[derive(Clone, Debug, PartialEq)]
pub struct Probes {
    pub sigma: f64,
    pub times: Vec<f64>,
}

impl Probes {
    /// `count ≥ 2` equally spaced samples covering `[0, duration]`.
    pub fn uniform(sigma: f64, duration: f64, count: usize) -> Self {
        let count = count.max(2);
        let times = (0..count).map(|k| duration * k as f64 / (count - 1) as f64).collect();
        Self { sigma, times }
    }
}

/// Advances `state` by `duration`, stepping no larger than `dt` and landing
/// exactly on every sample offset, where `observer` is called.
pub fn evolve_with<F>(state: &DkgState, duration: f64, dt: f64, samples: &[f64], mut observer: F) -> Result<DkgState>
where
    F: FnMut(&DkgState) -> Result<()>,
{
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be >= 0, got {duration}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
    }
    let slack = 1e-12 * duration.max(1.0);
    let mut stops: Vec<(f64, bool)> = samples
        .iter()
        .filter(|&&s| s >= -slack && s <= duration + slack)
        .map(|&s| (s.clamp(0.0, duration), true))
        .collect();
    stops.push((duration, false));
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));

    let t0 = state.t;
    let c0 = charge(&state.spinors);
    let mut cache: HashMap<u64, Integrator> = HashMap::new();
    let mut cur = state.clone();
    let mut pos = 0.0;
    let mut last_observed = f64::NAN;
    for (stop, observe) in stops {
        let seg = stop - pos;
        if seg > slack {
            let n = ((seg / dt) - 1e-9).ceil().max(1.0) as usize;
            let h = seg / n as f64;
            let integ = match cache.entry(h.to_bits()) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(Integrator::new(state.grid(), state.masses, h)?)
                }
            };
            for _ in 0..n {
                cur = integ.step(&cur)?;
                let c = charge(&cur.spinors);
                if c0 > 0.0 && (c / c0 - 1.0).abs() > CHARGE_DRIFT_ABORT {
                    return Err(Error::BlowUp {
                        t: cur.t,
                        reason: format!("charge drift {:.3e} exceeds {CHARGE_DRIFT_ABORT}", c / c0 - 1.0),
                    });
                }
            }
            pos = stop;
            cur.t = t0 + stop;
        }
        if observe && last_observed != stop {
            observer(&cur)?;
            last_observed = stop;
        }
    }
    Ok(cur)
}

/// [`evolve_with`] recording a [`NormLedger`] at the probe offsets.
pub fn evolve(state: &DkgState, duration: f64, dt: f64, probes: &Probes) -> Result<(DkgState, NormLedger)> {
    let mut ledger = NormLedger::new(probes.sigma);
    let end = evolve_with(state, duration, dt, &probes.times, |s| {
        ledger.record(s);
        Ok(())
    })?;
    Ok((end, ledger))
}

/// States at uniform spacing `dt`, each one integrator step from the last.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<DkgState>,
}

impl Trajectory {
    pub fn record(start: &DkgState, dt: f64, count: usize) -> Result<Self> {
        let integ = Integrator::new(start.grid(), start.masses, dt)?;
        let mut states = Vec::with_capacity(count);
        states.push(start.clone());
        while states.len() < count {
            let next = integ.step(states.last().unwrap())?;
            states.push(next);
        }
        Ok(Self { dt, states })
    }
}
