use std::f64::consts::PI;

use super::*;
use crate::dkg::{split_data, Masses, SpinorPair};
use crate::gevrey::{gaussian, poisson_kernel, Profile};
use crate::library::{random_band_limited, DataSpec};

fn grid() -> Grid {
    Grid::new(8.0 * PI, 512).unwrap()
}

fn state(spec: &DataSpec, dirac: f64, kg: KgMass) -> DkgState {
    let data = spec.build(&grid()).unwrap();
    split_data(&data, Masses::new(dirac, kg).unwrap()).unwrap()
}

#[test]
fn sobolev_constant_matches_lattice_sum() {
    let l = 3.0;
    let sum: f64 = (-200_000i64..=200_000).map(|k| 1.0 / (1.0 + (PI * k as f64 / l).powi(2))).sum();
    let direct = (sum / (2.0 * l)).sqrt();
    assert!((sobolev_constant(l) - direct).abs() < 1e-5);
}

#[test]
fn ratio_report_edge_cases() {
    let z = RatioReport::new("x", "s", &[], 0.0, 0.0, 1.0);
    assert_eq!(z.ratio, 0.0);
    assert!(z.pass);
    let v = RatioReport::new("x", "s", &[], 5.0, f64::INFINITY, 1.0);
    assert!(v.vacuous && v.pass);
    let bad = RatioReport::new("x", "s", &[], 1.0, 0.0, 1.0);
    assert!(!bad.pass);
    let r = RatioReport::new("x", "s", &[("T", 2.0)], 1.0, 2.0, 0.6);
    assert_eq!(r.ratio, 0.5);
    assert!((r.margin() - 0.1).abs() < 1e-15);
    assert_eq!(r.params["T"], 2.0);
}

#[test]
fn symbol_examples() {
    let c = check_symbol_bound(0.3, 2.0, Sign::Plus);
    assert!((c.lhs - 0.8221188).abs() < 1e-6);
    assert!((c.rhs - 1.0932713).abs() < 1e-6);
    assert!(c.pass);
    let z = check_symbol_bound(0.7, 0.0, Sign::Minus);
    assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
    assert!(z.pass);
    assert_eq!(check_symbol_bound(0.0, 17.0, Sign::Plus).lhs, 0.0);
}

#[test]
fn symbol_sweep_has_no_violations() {
    let s = symbol_sweep(&grid(), 25, 1.0, 5);
    assert_eq!(s.checks, 25 * 512);
    assert_eq!(s.violations, 0);
    assert!(s.min_relative_margin >= -SYMBOL_ULPS);
}

#[test]
fn null_form_zero_factor() {
    let g = grid();
    let f = gaussian(&g, 1.0).unwrap();
    let r = check_null_form(&f, &ComplexField::zeros(&g), 5.0, false, null_form_dt(&g)).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert!(r.pass);
}

#[test]
fn null_form_conjugate_variants_agree() {
    let g = grid();
    let f = gaussian(&g, 1.0).unwrap();
    let h = gaussian(&g, 0.7).unwrap().scale(Complex64::from_polar(1.0, 0.3));
    let dt = null_form_dt(&g);
    let a = check_null_form(&f, &h, 10.0, false, dt).unwrap();
    let b = check_null_form(&f, &h, 10.0, true, dt).unwrap();
    assert!((a.ratio / b.ratio - 1.0).abs() < 0.05);
    assert!(a.pass && b.pass);
}

#[test]
fn null_form_gevrey_at_zero_is_plain() {
    let g = grid();
    let f = poisson_kernel(&g, 1.0, 1.0).unwrap();
    let dt = null_form_dt(&g);
    let a = check_null_form(&f, &f, 4.0, true, dt).unwrap();
    let b = check_null_form_gevrey(&f, &f, 0.0, 4.0, true, dt).unwrap();
    assert_eq!((a.lhs, a.rhs), (b.lhs, b.rhs));
    let c = check_null_form_gevrey(&f, &f, 0.3, 4.0, true, dt).unwrap();
    assert!(c.ratio.is_finite() && !c.vacuous && c.pass);
    let d = check_null_form_gevrey(&f, &f, 1.0, 4.0, true, dt).unwrap();
    assert!(d.vacuous);
}

#[test]
fn null_form_rejects_coarse_steps() {
    let g = grid();
    let f = gaussian(&g, 1.0).unwrap();
    assert!(matches!(check_null_form(&f, &f, 1.0, false, 2.0 * g.dx()), Err(Error::Resolution(_))));
}

#[test]
fn parallel_control_grows_like_sqrt_t() {
    let g = grid();
    let f = gaussian(&g, 1.0).unwrap();
    let dt = null_form_dt(&g);
    let a = null_form_parallel_control(&f, &f, 1.0, dt).unwrap();
    let b = null_form_parallel_control(&f, &f, 4.0, dt).unwrap();
    assert!((b.lhs / a.lhs - 2.0).abs() < 1e-10);
}

#[test]
fn sobolev_constant_field() {
    let g = grid();
    let one = g.sample_real(|_| 1.0);
    let h = gaussian(&g, 1.0).unwrap();
    let r = check_sobolev_product(&one, &h, 0.0).unwrap();
    assert!((r.ratio - 1.0 / (2.0 * g.half_length()).sqrt()).abs() < 1e-12);
}

#[test]
fn sobolev_random_fields_pass() {
    let g = grid();
    for seed in [1, 2, 3] {
        let f = random_band_limited(&g, 40, seed);
        let h = random_band_limited(&g, 40, seed + 10);
        for sigma in [0.0, 0.2, 0.5] {
            assert!(check_sobolev_product(&f, &h, sigma).unwrap().pass, "seed {seed} sigma {sigma}");
        }
    }
    let f = random_band_limited(&g, 10, 4);
    let high = ComplexField::single_mode(&g, 200, Complex64::new(1.0, 0.0)).unwrap();
    let r = check_sobolev_product(&f, &high, 0.0).unwrap();
    assert!(r.pass);
}

#[test]
fn charge_derivative_vanishes_at_zero_sigma() {
    let s = state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), 1.0, KgMass::One);
    assert_eq!(charge_derivative_identity(&s, 0.0, Sign::Plus), 0.0);
    let traj = Trajectory::record(&s, 0.01, 7).unwrap();
    let r = check_charge_derivative(&traj, 0.0, Sign::Minus).unwrap();
    assert_eq!(r.max_derivative, 0.0);
    assert!(r.max_residual < 1e-9);
}

#[test]
fn charge_derivative_decoupled_is_zero() {
    let s = state(&DataSpec::decoupled(Profile::Poisson { a: 1.0 }, 1.0), 0.0, KgMass::One);
    let traj = Trajectory::record(&s, 0.01, 6).unwrap();
    let r = check_charge_derivative(&traj, 0.3, Sign::Plus).unwrap();
    assert_eq!(r.max_derivative, 0.0);
    assert!(r.max_residual < 1e-9);
}

#[test]
fn charge_derivative_identity_holds() {
    let s = state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), 1.0, KgMass::One);
    for eps in [Sign::Minus, Sign::Plus] {
        let traj = Trajectory::record(&s, 0.01, 9).unwrap();
        let r = check_charge_derivative(&traj, 0.2, eps).unwrap();
        assert!(r.max_derivative > 1e-4);
        assert!(r.relative_residual < 1e-5, "{r:?}");
    }
}

#[test]
fn charge_derivative_massless() {
    let s = state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), 1.0, KgMass::Zero);
    let traj = Trajectory::record(&s, 0.01, 9).unwrap();
    let r = check_charge_derivative(&traj, 0.2, Sign::Plus).unwrap();
    assert!(r.relative_residual < 1e-5, "{r:?}");
}

#[test]
fn charge_derivative_sampling_errors() {
    let s = state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), 1.0, KgMass::One);
    let short = Trajectory::record(&s, 0.01, 4).unwrap();
    assert!(matches!(check_charge_derivative(&short, 0.2, Sign::Plus), Err(Error::Resolution(_))));
    let coarse = Trajectory { dt: 0.5, states: vec![s.clone(); 5] };
    assert!(matches!(check_charge_derivative(&coarse, 0.2, Sign::Plus), Err(Error::Resolution(_))));
}

#[test]
fn loglog_slope_of_power_law() {
    let xs = [1.0, 2.0, 4.0, 8.0];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
    assert!((loglog_slope(&xs, &ys).unwrap() + 1.5).abs() < 1e-12);
    assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0, 1.0]).is_none());
    assert!(loglog_slope(&[1.0], &[1.0]).is_none());
}

#[test]
fn almost_conservation_without_spinors() {
    let mut s = state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), 1.0, KgMass::One);
    s.spinors = SpinorPair::zeros(s.grid());
    let consts = CalibratedConstants::new(1.0 / 64.0, 2.0).unwrap();
    let ac = check_almost_conservation(&s, 0.2, &consts, "free-wave").unwrap();
    assert_eq!(ac.m0, 0.0);
    assert_eq!(ac.n_increment, 0.0);
    assert_eq!(ac.nest.rhs, 0.0);
    assert!(ac.pass());
}

#[test]
fn almost_conservation_passes_on_reference_shape() {
    let s = state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), 1.0, KgMass::One);
    let consts = CalibratedConstants::new(1.0 / 1024.0, 2.0).unwrap();
    let ac = check_almost_conservation(&s, 0.2, &consts, "ref").unwrap();
    assert!(ac.pass(), "{:?}", ac.reports());
    assert!((ac.delta - consts.c0 / (1.0 + ac.m0 + ac.n0)).abs() < 1e-15);
    let m0 = state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), 1.0, KgMass::Zero);
    let ac0 = check_almost_conservation(&m0, 0.2, &consts, "ref-m0").unwrap();
    assert!(ac0.pass(), "{:?}", ac0.reports());
}
