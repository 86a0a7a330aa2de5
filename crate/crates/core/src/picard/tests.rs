use super::*;
use crate::dkg::{split_data, Integrator};
use crate::gevrey::Profile;
use crate::library::DataSpec;

fn small_state(amp: f64) -> DkgState {
    let grid = Grid::new(8.0 * std::f64::consts::PI, 512).unwrap();
    let data = DataSpec::standard(Profile::Poisson { a: 1.0 }, amp).build(&grid).unwrap();
    split_data(&data, Masses::new(1.0, KgMass::One).unwrap()).unwrap()
}

#[test]
fn cumulative_rule_is_exact_for_cubics() {
    let h = 0.1;
    let n = 10;
    let g = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - 0.5 * t * t * t;
    let big = |t: f64| t - t * t + t * t * t - 0.125 * t.powi(4);
    let vals: Vec<f64> = (0..=n).map(|j| g(j as f64 * h)).collect();
    let cum = cumulative_integral(&vals, h);
    for (j, c) in cum.iter().enumerate() {
        assert!((c - big(j as f64 * h)).abs() < 1e-14, "node {j}");
    }
}

#[test]
fn constants_validate() {
    assert!(CalibratedConstants::new(0.0, 2.0).is_err());
    assert!(CalibratedConstants::new(0.5, 1.0).is_err());
    let c = CalibratedConstants::new(0.25, 3.0).unwrap();
    assert_eq!(c.c2, 2.0);
    assert!(c.validate().is_ok());
    let bad = CalibratedConstants { c2: 1.0, ..c };
    assert!(bad.validate().is_err());
}

#[test]
fn local_timestep_formula() {
    let c = CalibratedConstants::new(0.5, 2.0).unwrap();
    assert_eq!(local_timestep(1.0, 2.0, &c), 0.5 / 4.0);
    assert_eq!(local_timestep(0.0, 0.0, &c), 0.5);
}

#[test]
fn admissible_delta_shrinks_with_mass_and_size() {
    let d0 = admissible_delta(2.0, 0.0, 0.1, 0.1);
    let d10 = admissible_delta(2.0, 10.0, 0.1, 0.1);
    assert!(d10 < d0);
    assert!(admissible_delta(2.0, 1.0, 1.0, 1.0) < admissible_delta(2.0, 1.0, 0.1, 0.1));
    assert_eq!(admissible_delta(2.0, 0.0, 0.0, 0.0), f64::INFINITY);
}

#[test]
fn zero_data_converges_immediately() {
    let mut s = small_state(1.0);
    let z = ComplexField::zeros(s.grid());
    s.spinors = SpinorPair { plus: z.clone(), minus: z.clone() };
    s.waves = WavePair { plus: z.clone(), minus: z };
    let (_, d) = run_contraction_with_delta(&s, 0.5, 0.01, PicardOptions::default()).unwrap();
    assert!(d.converged);
    assert_eq!(d.residual, 0.0);
}

#[test]
fn fixed_point_matches_integrator() {
    let s = small_state(1.0);
    let delta = 0.02;
    let (it, d) = run_contraction_with_delta(&s, 0.5, delta, PicardOptions::default()).unwrap();
    assert!(d.converged, "{:?}", d.ratios);
    assert!(d.residual <= 10.0 * DEFAULT_TOL);
    assert!(d.max_ratio() < 0.5);
    let integ = Integrator::new(s.grid(), s.masses, delta / 64.0).unwrap();
    let mut st = s.clone();
    for _ in 0..64 {
        st = integ.step(&st).unwrap();
    }
    let last = MESH_INTERVALS;
    for (a, b) in [
        (&it.psi_plus[last], &st.spinors.plus),
        (&it.psi_minus[last], &st.spinors.minus),
        (&it.phi_plus[last], &st.waves.plus),
        (&it.phi_minus[last], &st.waves.minus),
    ] {
        assert!((a - b).l2_norm() < 1e-9 * (1.0 + b.l2_norm()), "{}", (a - b).l2_norm());
    }
}

#[test]
fn iterates_keep_wave_reality() {
    let s = small_state(1.0);
    let (it, _) = run_contraction_with_delta(&s, 0.5, 0.02, PicardOptions::default()).unwrap();
    let wp = WavePair::new(it.phi_plus[MESH_INTERVALS].clone(), it.phi_minus[MESH_INTERVALS].clone());
    assert!(wp.is_ok());
}

#[test]
fn too_long_window_fails_to_contract() {
    let s = small_state(10.0);
    let opts = PicardOptions { max_iter: 12, tol: DEFAULT_TOL };
    match run_contraction_with_delta(&s, 0.5, 2.0, opts) {
        Err(Error::NoConvergence { iterations, .. }) => assert_eq!(iterations, 12),
        Err(Error::BlowUp { .. }) => {}
        other => panic!("expected failure, got {:?}", other.map(|r| r.1.converged)),
    }
}

#[test]
fn massless_is_rejected() {
    let mut s = small_state(1.0);
    s.masses.kg = KgMass::Zero;
    assert!(run_contraction_with_delta(&s, 0.5, 0.01, PicardOptions::default()).is_err());
}
