use super::*;
use crate::dkg::split_data;
use crate::gevrey::Profile;
use crate::library::DataSpec;
use crate::spectral::Grid;

fn worked(t_end: f64) -> CertificateInputs {
    CertificateInputs {
        sigma0: 1.0,
        m0: 1.0,
        n0: 1.0,
        masses: Masses::new(1.0, KgMass::One).unwrap(),
        consts: CalibratedConstants::new(1.0, 2.0).unwrap(),
        t_end,
        growth: None,
    }
}

#[test]
fn worked_example_is_bit_exact() {
    let c = certified_radius(&worked(10.0)).unwrap();
    assert_eq!(c.a, 16.0);
    assert_eq!(c.n, 16000);
    assert_eq!(c.delta, 1.0 / 1600.0);
    assert_eq!(c.sigma_cert, 9.765625e-8);
    assert!(c.valid && c.flags.tlarge_ok && !c.flags.clamped_to_sigma0);
    assert_eq!(c.c, 9.765625e-8 * 1e4);
}

#[test]
fn doubling_t_divides_by_sixteen() {
    let mut prev = certified_radius(&worked(10.0)).unwrap().sigma_cert;
    for t in [20.0, 40.0, 80.0] {
        let s = certified_radius(&worked(t)).unwrap().sigma_cert;
        assert_eq!(prev / s, 16.0);
        prev = s;
    }
}

#[test]
fn final_conditions_hold_on_computed_numbers() {
    for (m, t, c0) in [(0.37, 7.3, 0.001), (2.5, 13.0, 0.3), (1e-3, 50.0, 1.0 / 1024.0)] {
        let mut inp = worked(t);
        inp.m0 = m;
        inp.n0 = 0.1;
        inp.consts = CalibratedConstants::new(c0, 2.0).unwrap();
        let c = certified_radius(&inp).unwrap();
        let s = c.n_sqrt_delta();
        let cc = inp.consts.big_c;
        assert!(c.n as f64 * c.delta <= t * (1.0 + 1e-15) && c.n as f64 * c.delta >= t * (1.0 - 1e-15));
        assert!(c.delta <= c0 / (c.a * t * t) * (1.0 + 1e-12));
        assert!(cc * c.sigma_cert * s * 2.0 * m * 4.0 * c.a * t * t <= m * (1.0 + 1e-12));
        assert!(2.0 * cc * s * m <= c.a * t * t);
        assert!(c.valid);
    }
}

#[test]
fn tlarge_violation_invalidates() {
    let mut inp = worked(10.0);
    inp.m0 = 100.0;
    inp.n0 = 100.0;
    let c = certified_radius(&inp).unwrap();
    assert!(!c.flags.tlarge_ok && !c.valid);
}

#[test]
fn small_t_clamps() {
    let mut inp = worked(1.0);
    inp.m0 = 0.0;
    inp.n0 = 0.0;
    inp.consts = CalibratedConstants::new(1.0, 1.5).unwrap();
    inp.sigma0 = 0.01;
    let c = certified_radius(&inp).unwrap();
    assert!(c.flags.clamped_to_sigma0);
    assert_eq!(c.sigma_cert, 0.01);
}

#[test]
fn monotone_in_mass_constant_and_time() {
    let base = certified_radius(&worked(10.0)).unwrap().sigma_cert;
    let mut m = worked(10.0);
    m.m0 = 2.0;
    assert!(certified_radius(&m).unwrap().sigma_cert <= base);
    let mut c = worked(10.0);
    c.consts = CalibratedConstants::new(1.0, 3.0).unwrap();
    assert!(certified_radius(&c).unwrap().sigma_cert <= base);
    assert!(certified_radius(&worked(11.0)).unwrap().sigma_cert <= base);
}

#[test]
fn invalid_inputs() {
    let mut inp = worked(10.0);
    inp.t_end = 0.0;
    assert!(certified_radius(&inp).is_err());
    let mut inp = worked(10.0);
    inp.m0 = f64::NAN;
    assert!(certified_radius(&inp).is_err());
    assert!(m0_certified_radius(&worked(10.0)).is_err());
}

#[test]
fn m0_reduces_to_massive_arithmetic() {
    let mut inp = worked(10.0);
    inp.masses = Masses::new(1.0, KgMass::Zero).unwrap();
    inp.growth = Some(GrowthEnvelope { alpha: 0.0, beta: 0.0 });
    let a = m0_certified_radius(&inp).unwrap();
    let b = certified_radius(&worked(10.0)).unwrap();
    assert_eq!(a.sigma_cert, b.sigma_cert);
    inp.growth = Some(GrowthEnvelope { alpha: 30.0, beta: 2.0 });
    let big = m0_certified_radius(&inp).unwrap();
    assert_eq!(big.a, 32.0);
    assert!(big.sigma_cert < b.sigma_cert);
}

#[test]
fn growth_envelope_covers_samples() {
    let ts: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
    let ys: Vec<f64> = ts.iter().map(|t| 1.0 + 0.3 * t * t + 0.2 * (3.0 * t).sin()).collect();
    let env = GrowthEnvelope::fit(&ts, &ys).unwrap();
    assert!(env.margin(&ts, &ys) >= 0.0);
    assert!((env.beta - 0.3).abs() < 0.02);
    let flat = GrowthEnvelope::fit(&ts, &vec![2.0; ts.len()]).unwrap();
    assert_eq!((flat.alpha, flat.beta), (2.0, 0.0));
    assert!(GrowthEnvelope::fit(&[], &[]).is_err());
}

fn small_state(spec: &DataSpec, kg: KgMass, dirac: f64) -> DkgState {
    let grid = Grid::new(8.0 * std::f64::consts::PI, 512).unwrap();
    split_data(&spec.build(&grid).unwrap(), Masses::new(dirac, kg).unwrap()).unwrap()
}

#[test]
fn decoupled_verification_passes() {
    let s = small_state(&DataSpec::decoupled(Profile::Poisson { a: 1.0 }, 1.0), KgMass::One, 0.0);
    let consts = CalibratedConstants::new(1.0 / 64.0, 2.0).unwrap();
    let cert = certified_radius(&CertificateInputs::from_state(&s, 0.5, consts, 3.0)).unwrap();
    assert!(cert.valid);
    let v = verify_state(&s, &cert, 0.02, 10).unwrap();
    assert!(v.pass, "{v:?}");
    assert_eq!(v.hypotheses.len(), 4);
    assert!(v.hypotheses.iter().all(|h| h.holds));
    assert_eq!(v.hypotheses[1].min_margin, 1.0);
    assert_eq!(v.hypotheses[3].min_margin, 1.0);
}

#[test]
fn coupled_verification_and_curve() {
    let s = small_state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), KgMass::One, 1.0);
    let consts = CalibratedConstants::new(1.0 / 1024.0, 2.0).unwrap();
    let inputs = CertificateInputs::from_state(&s, 0.5, consts, 4.0);
    let cert = certified_radius(&inputs).unwrap();
    let v = verify_state(&s, &cert, 0.02, 8).unwrap();
    assert!(v.pass, "{v:?}");
    let pts = radius_curve(&s, &inputs, &[2.0, 4.0, 3.0], 0.02).unwrap();
    assert_eq!(pts.iter().map(|p| p.t).collect::<Vec<_>>(), vec![2.0, 3.0, 4.0]);
    assert!(pts.iter().all(|p| p.pass));
}

#[test]
fn massless_verification() {
    let s = small_state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), KgMass::Zero, 1.0);
    let (env, ts, ys) = measure_growth(&s, 3.0, 0.02, 15).unwrap();
    assert!(env.margin(&ts, &ys) >= 0.0);
    let consts = CalibratedConstants::new(1.0 / 1024.0, 2.0).unwrap();
    let inputs = CertificateInputs::from_state(&s, 0.5, consts, 3.0).with_growth(env);
    let cert = certify(&inputs).unwrap();
    let v = verify_state(&s, &cert, 0.02, 6).unwrap();
    assert!(v.pass, "{v:?}");
    assert_eq!(v.hypotheses.len(), 5);
}

#[test]
fn invalid_certificate_is_not_verified() {
    let s = small_state(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0), KgMass::One, 1.0);
    let consts = CalibratedConstants::new(1.0 / 1024.0, 2.0).unwrap();
    let cert = certified_radius(&CertificateInputs::from_state(&s, 0.5, consts, 0.5)).unwrap();
    assert!(!cert.valid);
    assert!(verify_state(&s, &cert, 0.02, 4).is_err());
}
