use std::f64::consts::PI;

use dkg_gevrey::certify::{certify, measure_growth, radius_curve, radius_curve_slopes, verify_state, CertificateInputs};
use dkg_gevrey::dkg::{auto_dt, evolve, split_data, DkgState, KgMass, Masses, Probes};
use dkg_gevrey::estimates::library_reports;
use dkg_gevrey::gevrey::Profile;
use dkg_gevrey::library::{sample_library_with, DataSpec};
use dkg_gevrey::picard::{calibrate, CalibratedConstants};
use dkg_gevrey::spectral::Grid;

fn grid() -> Grid {
    Grid::new(8.0 * PI, 512).unwrap()
}

fn samples(masses: Masses) -> Vec<(String, DkgState)> {
    sample_library_with(&grid(), &[0.1, 1.0])
        .unwrap()
        .into_iter()
        .map(|s| (s.id, split_data(&s.data, masses).unwrap()))
        .collect()
}

#[test]
fn calibrate_then_check_library() {
    let masses = Masses::new(1.0, KgMass::One).unwrap();
    let set = samples(masses);
    let cal = calibrate(&CalibratedConstants::new(1.0, 2.0).unwrap(), masses, &set, 0.5, 0.0).unwrap();
    assert!(cal.consts.c0 > 0.0 && cal.consts.c0 <= 1.0);
    assert!(cal.consts.big_c > 1.0);
    assert_eq!(cal.samples.len(), set.len());
    for s in &cal.samples {
        assert!(s.max_contraction_ratio <= 0.5, "{s:?}");
        assert!(2.0 * s.max_estimate_ratio <= cal.consts.big_c * (1.0 + 1e-3), "{s:?}");
    }
    let reports = library_reports(&set, 0.2, &cal.consts, 5.0).unwrap();
    assert_eq!(reports.len(), set.len() * 9);
    assert!(reports.windows(2).all(|w| w[0].sample_id <= w[1].sample_id));
    let failing: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    assert!(failing.is_empty(), "{failing:?}");
}

#[test]
fn certificate_holds_along_a_run() {
    let masses = Masses::new(1.0, KgMass::One).unwrap();
    let st = split_data(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0).build(&grid()).unwrap(), masses).unwrap();
    let consts = CalibratedConstants::new(1.0 / 1024.0, 2.0).unwrap();
    let inputs = CertificateInputs::from_state(&st, 0.5, consts, 6.0);
    let cert = certify(&inputs).unwrap();
    assert!(cert.valid);
    assert!(cert.sigma_cert > 0.0 && cert.sigma_cert < 0.5);
    let v = verify_state(&st, &cert, auto_dt(st.grid(), None), 30).unwrap();
    assert!(v.pass, "{v:?}");

    let curve = radius_curve(&st, &inputs, &[8.0, 4.0, 6.0, 4.0], auto_dt(st.grid(), None)).unwrap();
    assert_eq!(curve.iter().map(|p| p.t).collect::<Vec<_>>(), vec![4.0, 6.0, 8.0]);
    assert!(curve.iter().all(|p| p.pass));
    let (cert_slope, _) = radius_curve_slopes(&curve);
    assert!(cert_slope.unwrap() < -3.5);
}

#[test]
fn massless_certificate_with_growth_envelope() {
    let masses = Masses::new(1.0, KgMass::Zero).unwrap();
    let st = split_data(&DataSpec::standard(Profile::Poisson { a: 1.0 }, 1.0).build(&grid()).unwrap(), masses).unwrap();
    let dt = auto_dt(st.grid(), None);
    let (env, ts, vs) = measure_growth(&st, 6.0, dt, 30).unwrap();
    assert!(env.margin(&ts, &vs) >= 0.0);
    let inputs = CertificateInputs::from_state(&st, 0.5, CalibratedConstants::new(1.0 / 1024.0, 2.0).unwrap(), 6.0);
    assert!(certify(&inputs).is_err());
    let cert = certify(&inputs.with_growth(env)).unwrap();
    assert!(cert.valid);
    let v = verify_state(&st, &cert, dt, 30).unwrap();
    assert!(v.pass, "{v:?}");
    assert!(v.hypotheses.iter().any(|h| h.name == "phi_growth_envelope"));
}

#[test]
fn ledger_tracks_a_coupled_run() {
    let masses = Masses::new(1.0, KgMass::One).unwrap();
    let st = split_data(&DataSpec::standard(Profile::Gaussian { width: 1.0 }, 1.0).build(&grid()).unwrap(), masses).unwrap();
    let (end, ledger) = evolve(&st, 2.0, 0.01, &Probes::uniform(0.3, 2.0, 5)).unwrap();
    assert_eq!(ledger.rows.len(), 5);
    assert!(ledger.max_charge_drift() < 1e-9);
    assert!((end.t - 2.0).abs() < 1e-12);
    for r in &ledger.rows {
        assert!(r.m_prime <= r.m_sigma && r.m_sigma <= 2.0 * r.m_prime * (1.0 + 1e-14));
    }
}
