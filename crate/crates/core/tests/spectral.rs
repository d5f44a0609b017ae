use blowup_core::linear::{build_propagator, evolve_linear, measure_decay};
use blowup_core::spectral::{compute_spectrum, Branch};
use blowup_core::{k_min, ErrorKind, Params};
use std::sync::Arc;

fn contains(ev: &[nalgebra::Complex<f64>], target: f64) -> bool {
    ev.iter().any(|z| (z.re - target).abs() < 1e-6 && z.im.abs() < 1e-6)
}

#[test]
fn p3_contains_the_listed_eigenvalues() {
    let dec = compute_spectrum(&Params::new(3, 1.0, 4).unwrap(), 32, 48).unwrap();
    for target in [2.0, 0.0, -3.0, -5.0] {
        assert!(contains(&dec.retained, target), "missing {target}");
    }
    // the fine-only eigenvalues are exact ones beyond the coarse truncation
    assert!(dec.spurious.iter().all(|z| z.re < -20.0 && z.im == 0.0), "{:?}", dec.spurious);
}

#[test]
fn p5_contains_the_resonant_pair() {
    let dec = compute_spectrum(&Params::new(5, 1.0, 3).unwrap(), 32, 48).unwrap();
    assert!(contains(&dec.retained, 1.5));
    assert!(contains(&dec.retained, -2.5));
}

#[test]
fn refinement_levels_must_differ() {
    let err = compute_spectrum(&Params::new(3, 1.0, 4).unwrap(), 40, 48).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Math);
}

#[test]
fn gauge_dual_is_biorthogonal() {
    for p in [3u32, 5, 7] {
        let dec = compute_spectrum(&Params::new(p, 1.0, k_min(p).unwrap()).unwrap(), 32, 48).unwrap();
        assert!(dec.mode_gram_cond < 1e12);
        for (i, m) in dec.modes.iter().enumerate() {
            let c = dec.gauge_coefficient(&m.vector);
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-8, "p={p} mode {i}: {c}");
        }
        let g = &dec.gauge;
        let pg = dec.project_gauge(g);
        assert!(dec.space.norm(&(pg - g)) < 1e-10);
    }
}

#[test]
fn modes_evolve_at_their_shifted_rates() {
    for p in [3u32, 5, 7] {
        let params = Params::new(p, 1.0, k_min(p).unwrap()).unwrap();
        let dec = Arc::new(compute_spectrum(&params, 32, 48).unwrap());
        let prop = build_propagator(dec.clone(), 0.05).unwrap();
        for m in dec.modes.iter().filter(|m| !m.generalized) {
            let traj = evolve_linear(&prop, &m.vector, 40).unwrap();
            let rate = measure_decay(&traj, &dec, (0.0, 2.0)).unwrap();
            let want = m.eigenvalue - params.shift();
            assert!((rate - want).abs() < 1e-6, "p={p} {}{:?}: {rate} vs {want}", m.j, m.branch);
        }
    }
}

#[test]
fn gauge_grows_like_e_tau_and_lambda1_decays() {
    let dec = Arc::new(compute_spectrum(&Params::new(3, 1.0, 4).unwrap(), 32, 48).unwrap());
    let prop = build_propagator(dec.clone(), 0.05).unwrap();
    let g = evolve_linear(&prop, &dec.gauge, 60).unwrap();
    assert!((measure_decay(&g, &dec, (0.0, 3.0)).unwrap() - 1.0).abs() < 1e-9);
    let s = evolve_linear(&prop, &dec.mode(1, Branch::Plus).unwrap().vector, 100).unwrap();
    assert!((measure_decay(&s, &dec, (0.0, 5.0)).unwrap() + 1.0).abs() < 1e-9);
}

#[test]
fn evolve_linear_rejects_long_spans() {
    let dec = Arc::new(compute_spectrum(&Params::new(3, 1.0, 4).unwrap(), 16, 24).unwrap());
    let prop = build_propagator(dec.clone(), 0.5).unwrap();
    assert_eq!(evolve_linear(&prop, &dec.gauge, 101).unwrap_err().kind(), ErrorKind::Config);
}
