use blowup_core::coords::fundamental_solution;
use blowup_core::crosscheck::{compare_with_physical, physical_cone, physical_growth, PhysicalSettings};
use blowup_core::linear::{build_propagator, evolve_linear};
use blowup_core::physical::{detect_blowup_rate, evolve_to_cone, step_wave, BlowupSettings, RadialState, WaveMode};
use blowup_core::spectral::{compute_spectrum, Branch};
use blowup_core::{build_grid, ErrorKind, Params};
use std::sync::Arc;

fn p3() -> Params {
    Params::new(3, 1.0, 4).unwrap()
}

/// Max |psi - psi^T| at t = 0.5 for the full equation started from psi^T.
fn background_error(n_cells: usize) -> f64 {
    let params = p3();
    let a = params.c0.sqrt();
    let mut st = RadialState::new(3.0, n_cells, 0.0, |r| (r * a, r * a));
    let steps = (0.5 / (0.9 * st.dr)).ceil() as usize;
    let dt = 0.5 / steps as f64;
    for _ in 0..steps {
        st = step_wave(&st, &params, WaveMode::Full, dt).unwrap();
    }
    let exact = fundamental_solution(&params, 0.5, 0.0).unwrap();
    (1..st.w.len() / 3).map(|i| (st.w[i] / st.r(i) - exact).abs()).fold(0.0, f64::max)
}

#[test]
fn background_error_is_second_order() {
    let e: Vec<f64> = [150, 300, 600].iter().map(|&n| background_error(n)).collect();
    for w in e.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..4.5).contains(&r), "{e:?}");
    }
}

#[test]
fn zero_perturbation_gives_zero_cone_images() {
    let params = p3();
    let grid = build_grid(24).unwrap();
    let st = RadialState::new(2.5, 500, 0.0, |_| (0.0, 0.0));
    let out = evolve_to_cone(&st, &params, WaveMode::Perturbation, 0.0045, &[0.0, 1.0, 2.0], grid.nodes()).unwrap();
    for s in out {
        assert!(s.phi1.iter().chain(&s.phi2).all(|&v| v == 0.0));
    }
}

#[test]
fn cone_requests_past_the_resolved_limit_fail() {
    let params = p3();
    let st = RadialState::new(2.5, 500, 0.0, |_| (0.0, 0.0));
    let err = evolve_to_cone(&st, &params, WaveMode::Perturbation, 0.0045, &[4.0], &[0.0, 1.0]).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Resolution);
}

#[test]
fn pullback_round_trip_and_linear_rates() {
    let params = p3();
    let dec = Arc::new(compute_spectrum(&params, 32, 48).unwrap());
    let space = &dec.space;
    let settings = PhysicalSettings::default();
    let g = 1e-6 * &dec.gauge;
    let (grid, s) = physical_cone(space, &g, WaveMode::Linear, &settings, &[0.0]).unwrap();
    let f = space.to_field(&g, &grid);
    let err = s[0].phi1.iter().zip(&f.u1).chain(s[0].phi2.iter().zip(&f.u2)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6 * f.sup_norm(), "{err}");
    for (j, branch) in [(0, Branch::Plus), (1, Branch::Plus), (0, Branch::Minus), (2, Branch::Plus)] {
        let m = dec.mode(j, branch).unwrap();
        let rep = physical_growth(space, &(1e-6 * &m.vector), WaveMode::Linear, &settings, (0.5, 2.5), 11).unwrap();
        let want = m.eigenvalue - params.shift();
        assert!((rep.rate - want).abs() < 0.03 * want.abs(), "{j}{branch:?}: {} vs {want}", rep.rate);
    }
}

#[test]
fn linear_physical_run_matches_the_semigroup() {
    let params = p3();
    let dec = Arc::new(compute_spectrum(&params, 32, 48).unwrap());
    let prop = build_propagator(dec.clone(), 0.05).unwrap();
    let u = 1e-4 * (&dec.mode(1, Branch::Plus).unwrap().vector + &dec.mode(0, Branch::Minus).unwrap().vector);
    let traj = evolve_linear(&prop, &u, 40).unwrap();
    let rep = compare_with_physical(&dec.space, &traj, WaveMode::Linear, &PhysicalSettings::default(), (0.0, 2.0), 5).unwrap();
    assert!(rep.max_relative < 0.02, "{:?}", rep.rows);
    let zero = evolve_linear(&prop, &dec.space.zeros(), 40).unwrap();
    let rep = compare_with_physical(&dec.space, &zero, WaveMode::Perturbation, &PhysicalSettings::default(), (0.0, 2.0), 5).unwrap();
    assert_eq!(rep.max_relative, 0.0);
    assert!(rep.rows.iter().all(|r| r.physical_norm == 0.0));
}

#[test]
fn small_data_does_not_blow_up() {
    let st = RadialState::new(8.0, 2000, 0.0, |r| (0.1 * r * (-r * r).exp(), 0.0));
    let fit = detect_blowup_rate(&st, &p3(), &BlowupSettings::new(0.0036, 7.0)).unwrap();
    assert!(!fit.detected);
}
