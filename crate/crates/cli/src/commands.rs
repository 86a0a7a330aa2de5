use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use dkg_gevrey::certify::{
    certify as certify_inputs, measure_growth, radius_curve, verify_state, CertificateInputs, GrowthEnvelope,
};
use dkg_gevrey::dkg::{evolve as evolve_state, split_data, DkgState, KgMass, Probes, Trajectory};
use dkg_gevrey::estimates::{almost_conservation_scan, check_charge_derivative, library_reports, symbol_sweep};
use dkg_gevrey::gevrey::LEDGER_SCHEMA_VERSION;
use dkg_gevrey::library::sample_library_with;
use dkg_gevrey::picard::{
    calibrate as calibrate_samples, data_norms, iterate_to_convergence, local_timestep, CalibratedConstants, PicardOptions,
};
use dkg_gevrey::spectral::{Grid, Sign};
use serde::Serialize;

use crate::scenario::{Scenario, ValidationError};

/// Largest relative residual accepted for the charge-derivative identity.
const IDENTITY_TOL: f64 = 1e-5;
/// Samples recorded for the charge-derivative identity.
const IDENTITY_SAMPLES: usize = 9;
const CONTRACTION_MAX: f64 = 0.5;

/// Result of a command that ran to completion.
#[derive(Debug)]
pub enum Outcome {
    Pass(String),
    Fail(String),
}

impl Outcome {
    fn from_flag(pass: bool, msg: String) -> Self {
        if pass {
            Outcome::Pass(msg)
        } else {
            Outcome::Fail(msg)
        }
    }
}

pub struct Context {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub seed: u64,
    pub constants: Option<CalibratedConstants>,
}

impl Context {
    fn grid(&self) -> Result<Grid> {
        Ok(self.scenario.build_grid()?)
    }

    fn state(&self, grid: &Grid) -> Result<DkgState> {
        Ok(self.scenario.state(grid)?)
    }

    fn constants(&self) -> Result<CalibratedConstants> {
        self.constants.ok_or_else(|| {
            ValidationError::new("constants", "no calibrated constants: pass --constants or add a [constants] section").into()
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// CSV text with a leading `# schema_version` line.
fn versioned_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner()?)?;
    Ok(format!("# schema_version={LEDGER_SCHEMA_VERSION}\n{body}"))
}

/// Envelope from the scenario, else measured over `[0, t_end]`.
fn growth_for(ctx: &Context, state: Option<&DkgState>, t_end: f64) -> Result<Option<GrowthEnvelope>> {
    if ctx.scenario.masses.kg != KgMass::Zero {
        return Ok(None);
    }
    let c = &ctx.scenario.certify;
    if let (Some(alpha), Some(beta)) = (c.alpha, c.beta) {
        return Ok(Some(GrowthEnvelope { alpha, beta }));
    }
    let state = state.ok_or_else(|| ValidationError::new("certify", "m = 0 needs alpha/beta or a [data] section"))?;
    let (env, _, _) = measure_growth(state, t_end, ctx.scenario.dt(state.grid()), c.checkpoints)?;
    Ok(Some(env))
}

pub fn evolve(ctx: &Context) -> Result<Outcome> {
    let sc = &ctx.scenario;
    let grid = ctx.grid()?;
    let state = ctx.state(&grid)?;
    let probes = Probes::uniform(sc.sigma0, sc.t_end, sc.probes);
    let (_, ledger) = evolve_state(&state, sc.t_end, sc.dt(&grid), &probes)?;
    let path = ctx.write("ledger.csv", &ledger.to_csv())?;
    Ok(Outcome::Pass(format!(
        "{} rows, max charge drift {:.3e} -> {}",
        ledger.rows.len(),
        ledger.max_charge_drift(),
        path.display()
    )))
}

#[derive(Serialize)]
struct RadiusRow {
    #[serde(rename = "T")]
    t: f64,
    sigma_cert: f64,
    sigma_measured: f64,
    pass: bool,
}

pub fn radius(ctx: &Context) -> Result<Outcome> {
    let sc = &ctx.scenario;
    let consts = ctx.constants()?;
    let grid = ctx.grid()?;
    let state = ctx.state(&grid)?;
    let times = sc.radius_times();
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let mut inputs = CertificateInputs::from_state(&state, sc.sigma0, consts, t_max);
    inputs.growth = growth_for(ctx, Some(&state), t_max)?;
    let points = radius_curve(&state, &inputs, &times, sc.dt(&grid))?;
    let rows: Vec<RadiusRow> = points
        .iter()
        .map(|p| RadiusRow { t: p.t, sigma_cert: p.sigma_cert, sigma_measured: p.sigma_measured, pass: p.pass })
        .collect();
    let path = ctx.write("radius.csv", &versioned_csv(&rows)?)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    Ok(Outcome::from_flag(failed == 0, format!("{} points, {failed} failed -> {}", rows.len(), path.display())))
}

#[derive(Serialize)]
struct PicardReport<'a> {
    scenario: &'a str,
    constants: CalibratedConstants,
    diagnostics: dkg_gevrey::picard::PicardDiagnostics,
}

pub fn picard(ctx: &Context) -> Result<Outcome> {
    let sc = &ctx.scenario;
    let consts = ctx.constants()?;
    let grid = ctx.grid()?;
    let state = ctx.state(&grid)?;
    let (a0, b0) = data_norms(&state, sc.sigma0)?;
    let delta = local_timestep(a0, b0, &consts);
    let (_, diag) = iterate_to_convergence(&state, sc.sigma0, delta, PicardOptions::default())?;
    let pass = diag.converged && diag.max_ratio() <= CONTRACTION_MAX;
    let msg = format!(
        "delta {:.4e}, {} iterations, max contraction ratio {:.3e}, residual {:.2e}",
        diag.delta,
        diag.iterations,
        diag.max_ratio(),
        diag.residual
    );
    let path = ctx.write_json("picard.json", &PicardReport { scenario: &sc.name, constants: consts, diagnostics: diag })?;
    Ok(Outcome::from_flag(pass, format!("{msg} -> {}", path.display())))
}

pub fn calibrate(ctx: &Context) -> Result<Outcome> {
    let sc = &ctx.scenario;
    let grid = ctx.grid()?;
    let masses = sc.masses();
    let samples: Vec<(String, DkgState)> = sample_library_with(&grid, &sc.library.amplitudes)?
        .into_iter()
        .map(|s| Ok((s.id, split_data(&s.data, masses)?)))
        .collect::<Result<_>>()?;
    let guess = match ctx.constants {
        Some(c) => c,
        None => CalibratedConstants::new(1.0, 2.0)?,
    };
    let cal = calibrate_samples(&guess, masses, &samples, sc.sigma0, 0.0)?;
    ctx.write_json("calibration.json", &cal)?;
    let path = ctx.write_json("constants.json", &cal.consts)?;
    Ok(Outcome::Pass(format!(
        "C = {}, c0 = {} on {} samples -> {}",
        cal.consts.big_c,
        cal.consts.c0,
        cal.samples.len(),
        path.display()
    )))
}

#[derive(Serialize)]
struct CheckRow {
    check: String,
    sample: String,
    ratio: f64,
    constant: f64,
    margin: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ChecksReport<'a> {
    schema_version: u32,
    scenario: &'a str,
    sigma: f64,
    constants: CalibratedConstants,
    reports: Vec<dkg_gevrey::estimates::RatioReport>,
    symbol_sweep: dkg_gevrey::estimates::SymbolSweep,
    charge_derivative: Vec<dkg_gevrey::estimates::ChargeDerivativeReport>,
    almost_conservation_scan: dkg_gevrey::estimates::AlmostConservationScan,
}

pub fn checks(ctx: &Context) -> Result<Outcome> {
    let sc = &ctx.scenario;
    let consts = ctx.constants()?;
    let grid = ctx.grid()?;
    let state = ctx.state(&grid)?;
    let sigma = sc.checks_sigma();
    let masses = sc.masses();
    let samples: Vec<(String, DkgState)> = sample_library_with(&grid, &sc.library.amplitudes)?
        .into_iter()
        .map(|s| Ok((s.id, split_data(&s.data, masses)?)))
        .collect::<Result<_>>()?;
    let reports = library_reports(&samples, sigma, &consts, sc.checks.null_form_t)?;
    let sweep = symbol_sweep(&grid, sc.checks.symbol_draws, sc.checks.symbol_sigma_max, ctx.seed);
    let traj = Trajectory::record(&state, sc.checks.identity_dt, IDENTITY_SAMPLES)?;
    let identity = Sign::BOTH
        .iter()
        .map(|&eps| check_charge_derivative(&traj, sc.checks.identity_sigma, eps))
        .collect::<dkg_gevrey::Result<Vec<_>>>()?;
    let scan = almost_conservation_scan(&state, &sc.checks.scan_sigmas, &consts, &sc.name)?;

    let mut rows: Vec<CheckRow> = reports
        .iter()
        .map(|r| CheckRow {
            check: r.name.clone(),
            sample: r.sample_id.clone(),
            ratio: r.ratio,
            constant: r.constant,
            margin: r.margin(),
            pass: r.pass,
        })
        .collect();
    rows.push(CheckRow {
        check: "symbol_bound".into(),
        sample: "grid".into(),
        ratio: 1.0 - sweep.min_relative_margin,
        constant: 1.0,
        margin: sweep.min_relative_margin,
        pass: sweep.violations == 0,
    });
    for r in &identity {
        rows.push(CheckRow {
            check: format!("charge_derivative_eps{:+}", r.eps),
            sample: sc.name.clone(),
            ratio: r.relative_residual,
            constant: IDENTITY_TOL,
            margin: IDENTITY_TOL - r.relative_residual,
            pass: r.relative_residual <= IDENTITY_TOL,
        });
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let csv_path = ctx.write("checks.csv", &versioned_csv(&rows)?)?;
    ctx.write_json(
        "checks.json",
        &ChecksReport {
            schema_version: LEDGER_SCHEMA_VERSION,
            scenario: &sc.name,
            sigma,
            constants: consts,
            reports,
            symbol_sweep: sweep,
            charge_derivative: identity,
            almost_conservation_scan: scan,
        },
    )?;
    Ok(Outcome::from_flag(failed == 0, format!("{} checks, {failed} failed -> {}", rows.len(), csv_path.display())))
}

pub fn certify(ctx: &Context) -> Result<Outcome> {
    let sc = &ctx.scenario;
    let consts = ctx.constants()?;
    let c = &sc.certify;
    let overridden = c.m0.is_some();
    let state = if overridden {
        None
    } else {
        let grid = ctx.grid()?;
        Some(ctx.state(&grid)?)
    };
    let mut inputs = match (&state, c.m0, c.n0) {
        (None, Some(m0), Some(n0)) => CertificateInputs {
            sigma0: sc.sigma0,
            m0,
            n0,
            masses: sc.masses(),
            consts,
            t_end: sc.t_end,
            growth: None,
        },
        (Some(s), _, _) => CertificateInputs::from_state(s, sc.sigma0, consts, sc.t_end),
        _ => unreachable!("m0 and n0 are validated together"),
    };
    inputs.growth = growth_for(ctx, state.as_ref(), sc.t_end)?;
    let cert = certify_inputs(&inputs)?;
    ctx.write_json("certificate.json", &cert)?;
    let mut msg = format!("sigma_cert = {:e} (A = {}, n = {}, valid = {})", cert.sigma_cert, cert.a, cert.n, cert.valid);
    let mut pass = cert.valid;
    if let (Some(s), true, true) = (&state, c.verify, cert.valid) {
        let v = verify_state(s, &cert, sc.dt(s.grid()), c.checkpoints)?;
        ctx.write_json("verification.json", &v)?;
        msg.push_str(&format!("; verification {} (sigma_hat(T) = {:.4})", if v.pass { "passed" } else { "failed" }, v.sigma_hat_final));
        pass &= v.pass;
    }
    Ok(Outcome::from_flag(pass, format!("{msg} -> {}", ctx.out.display())))
}

/// Output directory: flag or environment, then scenario, then `out`.
pub fn out_dir(flag: Option<&Path>, scenario: &Scenario) -> PathBuf {
    flag.map(Path::to_path_buf).or_else(|| scenario.out.clone()).unwrap_or_else(|| PathBuf::from("out"))
}
