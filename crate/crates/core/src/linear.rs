//! The semigroup S~(tau) = e^{-2 tau/(p-1)} S(tau), the gauge projection and decay fits.

use crate::error::{LabError, Result};
use crate::spectral::{Modal, SpectralDecomposition};
use crate::trajectory::Trajectory;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Longest tau span evolve_linear accepts; e^{50} is the gauge growth at that point.
pub const MAX_LINEAR_SPAN: f64 = 50.0;
/// Tolerance of the gauge eigenrelation check at construction.
pub const GAUGE_RELATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Propagator {
    pub h: f64,
    /// exp(h (L - 2/(p-1))).
    pub estep: DMatrix<f64>,
    pub dec: Arc<SpectralDecomposition>,
}

pub fn build_propagator(dec: Arc<SpectralDecomposition>, h: f64) -> Result<Propagator> {
    if !(0.0..=1.0).contains(&h) {
        return Err(LabError::param("h", format!("step must lie in [0, 1], got {h}")));
    }
    let space = &dec.space;
    let shift = space.params().shift();
    let a = (space.lmat() - DMatrix::identity(space.dim(), space.dim()) * shift) * h;
    let estep = a.exp();
    if estep.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Spectral("matrix exponential overflowed".into()));
    }
    let defect = space.norm(&(&estep * &dec.gauge - h.exp() * &dec.gauge));
    if defect > GAUGE_RELATION_TOL {
        return Err(LabError::Spectral(format!("gauge eigenrelation violated by {defect:.3e}")));
    }
    Ok(Propagator { h, estep, dec })
}

impl Propagator {
    pub fn step(&self, u: &Modal) -> Modal {
        &self.estep * u
    }

    /// Estep^m u.
    pub fn advance(&self, u: &Modal, m: usize) -> Modal {
        let mut v = u.clone();
        for _ in 0..m {
            v = &self.estep * v;
        }
        v
    }
}

/// P u = (u | g*) g.
pub fn project_gauge(dec: &SpectralDecomposition, u: &Modal) -> Modal {
    dec.project_gauge(u)
}

/// Phi(mh) = Estep^m u0 for m = 0..=n_steps.
pub fn evolve_linear(prop: &Propagator, u0: &Modal, n_steps: usize) -> Result<Trajectory> {
    let span = n_steps as f64 * prop.h;
    if span > MAX_LINEAR_SPAN {
        return Err(LabError::param("n_steps", format!("tau span {span} exceeds {MAX_LINEAR_SPAN}")));
    }
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut cur = u0.clone();
    states.push(cur.clone());
    for _ in 0..n_steps {
        cur = prop.step(&cur);
        states.push(cur.clone());
    }
    Ok(Trajectory::new(prop.h, states))
}

/// Least-squares slope of log ||Phi(tau)|| over samples with tau in [a, b].
///
/// Samples whose norm has dropped below 1e-14 of the largest norm end the window.
pub fn measure_decay(traj: &Trajectory, dec: &SpectralDecomposition, window: (f64, f64)) -> Result<f64> {
    measure_decay_with(traj, window, |u| dec.space.norm(u))
}

/// [`measure_decay`] with a caller-supplied norm.
pub fn measure_decay_with(traj: &Trajectory, window: (f64, f64), norm: impl Fn(&Modal) -> f64) -> Result<f64> {
    let norms: Vec<f64> = traj.states.iter().map(&norm).collect();
    let peak = norms.iter().copied().fold(0.0, f64::max);
    let mut pts = Vec::new();
    for (m, &n) in norms.iter().enumerate() {
        let tau = traj.tau(m);
        if tau < window.0 - 1e-12 || tau > window.1 + 1e-12 {
            continue;
        }
        if n <= 1e-14 * peak || n == 0.0 {
            break;
        }
        pts.push((tau, n.ln()));
    }
    fit_slope(&pts).ok_or_else(|| LabError::Resolution(format!("fewer than two usable samples in window {window:?}")))
}

/// Least-squares slope of y on x.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;
    use crate::spectral::{compute_spectrum, Branch};

    fn setup() -> Arc<SpectralDecomposition> {
        Arc::new(compute_spectrum(&Params::new(3, 1.0, 4).unwrap(), 16, 24).unwrap())
    }

    #[test]
    fn propagator_examples() {
        let dec = setup();
        let id = build_propagator(dec.clone(), 0.0).unwrap();
        assert!((id.estep.clone() - DMatrix::identity(id.estep.nrows(), id.estep.ncols())).amax() < 1e-15);
        let p1 = build_propagator(dec.clone(), 0.1).unwrap();
        let p2 = build_propagator(dec.clone(), 0.2).unwrap();
        let sq = &p1.estep * &p1.estep;
        assert!((sq - &p2.estep).amax() <= 1e-10 * p2.estep.amax());
        assert!(dec.space.norm(&(p1.step(&dec.gauge) - 0.1f64.exp() * &dec.gauge)) < 1e-8);
        assert!(build_propagator(dec, 1.5).is_err());
    }

    #[test]
    fn evolution_examples() {
        let dec = setup();
        let prop = build_propagator(dec.clone(), 0.1).unwrap();
        let t = evolve_linear(&prop, &dec.gauge, 10).unwrap();
        assert!(dec.space.norm(&(&t.states[10] - std::f64::consts::E * &dec.gauge)) < 1e-6);
        let z = evolve_linear(&prop, &dec.space.zeros(), 5).unwrap();
        assert!(z.states.iter().all(|s| s.amax() == 0.0));
        let stable = &dec.mode(1, Branch::Plus).unwrap().vector;
        let t = evolve_linear(&prop, stable, 30).unwrap();
        for (m, n) in t.norms(&dec.space).iter().enumerate() {
            assert!((n - (-t.tau(m)).exp()).abs() < 1e-6);
        }
        assert!((measure_decay(&t, &dec, (1.0, 3.0)).unwrap() + 1.0).abs() < 0.01);
        assert!(evolve_linear(&prop, stable, 501).is_err());
    }

    #[test]
    fn projection_examples() {
        let dec = setup();
        assert!(dec.space.norm(&(project_gauge(&dec, &dec.gauge) - &dec.gauge)) < 1e-10);
        let m0 = &dec.mode(0, Branch::Minus).unwrap().vector;
        assert!(dec.space.norm(&project_gauge(&dec, m0)) < 1e-8);
        let m1 = &dec.mode(1, Branch::Plus).unwrap().vector;
        let u = 2.0 * &dec.gauge + m1;
        assert!(dec.space.norm(&(project_gauge(&dec, &u) - 2.0 * &dec.gauge)) < 1e-8);
    }
}
