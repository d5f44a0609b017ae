//! Fixed-point formulation with gauge correction:
//! K_u(Phi)(tau) = S~(tau)[u + alpha g] + int_0^tau S~(tau - s) N(Phi(s)) ds,
//! alpha = -int_0^inf e^{-s} (N(Phi(s)) | g*) ds - (u | g*).

use crate::error::{LabError, Result};
use crate::linear::Propagator;
use crate::sampling;
use crate::spectral::{Modal, SpectralDecomposition};
use crate::trajectory::Trajectory;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

/// Largest admissible alpha tail bound before tau_max counts as too short.
pub const ALPHA_TAIL_TOL: f64 = 1e-8;
/// Contraction factor required by the fixed-point argument.
pub const CONTRACTION_TARGET: f64 = 0.5;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverSettings {
    pub tau_max: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tau_max: 12.0, tol: 1e-13, max_iter: 100 }
    }
}

impl SolverSettings {
    pub fn n_steps(&self, h: f64) -> usize {
        (self.tau_max / h).round() as usize
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlphaEstimate {
    pub value: f64,
    /// Bound on the neglected integral over (tau_max, inf).
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub alpha: f64,
    pub alpha_tail_bound: f64,
    pub iterations: usize,
    pub contraction_ratios: Vec<f64>,
    pub differences: Vec<f64>,
    /// Y_delta margin of every iterate, in order.
    pub margins: Vec<f64>,
    pub decay_margin: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Y_delta membership with the worst ratio max_m ||Phi(mh)|| e^{mh} / delta.
pub fn in_y_delta(traj: &Trajectory, dec: &SpectralDecomposition, delta: f64) -> Result<(bool, f64)> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LabError::param("delta", format!("need 0 < delta <= 1, got {delta}")));
    }
    let margin = traj
        .states
        .iter()
        .enumerate()
        .map(|(m, s)| dec.space.norm(s) * traj.tau(m).exp() / delta)
        .fold(0.0, f64::max);
    Ok((margin <= 1.0 + 1e-12, margin))
}

/// Evaluator of K_u for one propagator; caches the pieces shared by all applications.
pub struct KMap<'a> {
    pub prop: &'a Propagator,
    dual_image: DVector<f64>,
}

impl<'a> KMap<'a> {
    pub fn new(prop: &'a Propagator) -> Self {
        let dec = &prop.dec;
        let dual_image = dec.space.analysis_apply(&dec.gauge_dual);
        KMap { prop, dual_image }
    }

    pub fn dec(&self) -> &SpectralDecomposition {
        &self.prop.dec
    }

    /// (v | g*).
    pub fn dual_pairing(&self, v: &Modal) -> f64 {
        self.dec().space.analysis_apply(v).dot(&self.dual_image)
    }

    pub fn nonlinear_terms(&self, traj: &Trajectory) -> Vec<Modal> {
        let space = &self.dec().space;
        traj.states.par_iter().map(|s| space.apply_n(s)).collect()
    }

    /// alpha via the trapezoid rule on the tau grid, the same rule as the Duhamel sum.
    pub fn alpha_from_terms(&self, u: &Modal, h: f64, terms: &[Modal]) -> AlphaEstimate {
        let f: Vec<f64> = terms
            .iter()
            .enumerate()
            .map(|(m, n)| (-(m as f64) * h).exp() * self.dual_pairing(n))
            .collect();
        let mut integral = 0.0;
        for w in f.windows(2) {
            integral += 0.5 * h * (w[0] + w[1]);
        }
        // ||N(Phi(s))|| <= c e^{-2s}: c fitted from the samples
        let space = &self.dec().space;
        let c = terms
            .iter()
            .enumerate()
            .map(|(m, n)| space.norm(n) * (2.0 * m as f64 * h).exp())
            .fold(0.0, f64::max);
        let tau_max = h * (terms.len().saturating_sub(1)) as f64;
        let tail_bound = space.norm(&self.dec().gauge_dual) * c * (-3.0 * tau_max).exp() / 3.0;
        AlphaEstimate { value: -integral - self.dual_pairing(u), tail_bound }
    }

    pub fn alpha(&self, u: &Modal, traj: &Trajectory) -> AlphaEstimate {
        let terms = self.nonlinear_terms(traj);
        self.alpha_from_terms(u, traj.h, &terms)
    }

    /// K_u(Phi) and the alpha used.
    pub fn apply(&self, u: &Modal, traj: &Trajectory) -> Result<(Trajectory, AlphaEstimate)> {
        if (traj.h - self.prop.h).abs() > 1e-14 {
            return Err(LabError::Precondition(format!("trajectory step {} differs from propagator step {}", traj.h, self.prop.h)));
        }
        let terms = self.nonlinear_terms(traj);
        let alpha = self.alpha_from_terms(u, traj.h, &terms);
        let h = traj.h;
        let e = &self.prop.estep;
        let mut cur = u + alpha.value * &self.dec().gauge;
        let mut duhamel = self.dec().space.zeros();
        let mut out = Vec::with_capacity(traj.len());
        out.push(cur.clone());
        for m in 1..traj.len() {
            cur = e * cur;
            duhamel = e * (duhamel + 0.5 * h * &terms[m - 1]) + 0.5 * h * &terms[m];
            out.push(&cur + &duhamel);
        }
        if out.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(LabError::Spectral("non-finite values in K_u(Phi)".into()));
        }
        Ok((Trajectory::new(h, out), alpha))
    }
}

pub fn compute_alpha(u: &Modal, traj: &Trajectory, prop: &Propagator) -> Result<AlphaEstimate> {
    let a = KMap::new(prop).alpha(u, traj);
    if a.tail_bound > ALPHA_TAIL_TOL {
        return Err(LabError::Resolution(format!("alpha tail bound {:.3e} exceeds {ALPHA_TAIL_TOL:e}; increase tau_max", a.tail_bound)));
    }
    Ok(a)
}

pub fn apply_k(u: &Modal, traj: &Trajectory, prop: &Propagator) -> Result<Trajectory> {
    Ok(KMap::new(prop).apply(u, traj)?.0)
}

/// Successive differences below this multiple of the machine-precision floor are not
/// used to judge contraction.
const NOISE_FACTOR: f64 = 1e3;

/// Picard iteration from Phi_0 = 0 with Y_delta and contraction checks at every step.
pub fn solve_fixed_point(
    u: &Modal,
    delta: f64,
    prop: &Propagator,
    settings: &SolverSettings,
) -> Result<(Trajectory, FixedPointReport)> {
    let dec = &prop.dec;
    let space = &dec.space;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LabError::param("delta", format!("need 0 < delta <= 1, got {delta}")));
    }
    let un = space.norm(u);
    if un > delta * delta * (1.0 + 1e-12) {
        return Err(LabError::Precondition(format!("||u|| = {un:.6e} exceeds delta^2 = {:.6e}", delta * delta)));
    }
    let n_steps = settings.n_steps(prop.h);
    let start = Trajectory::zeros(space, prop.h, n_steps);
    iterate(u, delta, prop, settings, start, true)
}

fn iterate(
    u: &Modal,
    delta: f64,
    prop: &Propagator,
    settings: &SolverSettings,
    start: Trajectory,
    enforce_tube: bool,
) -> Result<(Trajectory, FixedPointReport)> {
    let dec = &prop.dec;
    let space = &dec.space;
    let k = KMap::new(prop);
    let mut phi = start;
    let mut ratios = Vec::new();
    let mut diffs: Vec<f64> = Vec::new();
    let mut margins = Vec::new();
    let mut alpha = AlphaEstimate { value: 0.0, tail_bound: 0.0 };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < settings.max_iter {
        let (next, a) = k.apply(u, &phi)?;
        iterations += 1;
        alpha = a;
        let d = next.x_distance(&phi, space);
        let (_, margin) = in_y_delta(&next, dec, delta)?;
        margins.push(margin);
        let floor = NOISE_FACTOR * f64::EPSILON * next.x_norm(space);
        if let Some(&prev) = diffs.last() {
            if prev > floor {
                let r = d / prev;
                ratios.push(r);
                if r > 1.0 && d > floor {
                    return Err(LabError::Contraction { reason: format!("iteration {iterations} expanded"), ratios });
                }
            }
        }
        diffs.push(d);
        phi = next;
        if enforce_tube && margin > 1.0 + 1e-9 {
            return Err(LabError::Contraction {
                reason: format!("iterate {iterations} left Y_delta (margin {margin:.4})"),
                ratios,
            });
        }
        if d < settings.tol || d <= floor {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LabError::Contraction { reason: format!("no convergence in {} iterations", settings.max_iter), ratios });
    }
    if alpha.tail_bound > ALPHA_TAIL_TOL {
        return Err(LabError::Resolution(format!("alpha tail bound {:.3e} exceeds {ALPHA_TAIL_TOL:e}", alpha.tail_bound)));
    }
    let (check, _) = k.apply(u, &phi)?;
    let residual = check.x_distance(&phi, space);
    let (_, decay_margin) = in_y_delta(&phi, dec, delta)?;
    let report = FixedPointReport {
        alpha: alpha.value,
        alpha_tail_bound: alpha.tail_bound,
        iterations,
        contraction_ratios: ratios,
        differences: diffs,
        margins,
        decay_margin,
        residual,
        converged,
    };
    Ok((phi, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub perturbation: f64,
    pub iterations: usize,
    pub distance: f64,
    pub passed: bool,
}

/// Restarts Picard from traj + eps e^{-tau} w(tau) (random unit w) and checks that it
/// returns to traj within 10 tol.
pub fn verify_uniqueness(
    u: &Modal,
    traj: &Trajectory,
    delta: f64,
    prop: &Propagator,
    settings: &SolverSettings,
    eps: f64,
    seed: u64,
) -> Result<UniquenessReport> {
    let space = &prop.dec.space;
    let mut rng = sampling::rng(seed);
    let pert = if eps > 0.0 {
        sampling::random_y_delta(space, &mut rng, 1.0, traj.h, traj.len() - 1)
    } else {
        Trajectory::zeros(space, traj.h, traj.len() - 1)
    };
    let start = traj.combine(1.0, &pert, eps);
    let outcome = iterate(u, delta, prop, settings, start, false);
    let (phi, report) = match outcome {
        Ok(v) => v,
        Err(LabError::Contraction { .. }) => {
            return Ok(UniquenessReport { perturbation: eps, iterations: settings.max_iter, distance: f64::INFINITY, passed: false })
        }
        Err(e) => return Err(e),
    };
    let distance = phi.x_distance(traj, space);
    Ok(UniquenessReport { perturbation: eps, iterations: report.iterations, distance, passed: distance < 10.0 * settings.tol })
}

/// Max over interior samples of ||(Phi_{m+1} - Phi_{m-1})/2h - (L - 2/(p-1)) Phi_m - N(Phi_m)||.
pub fn pde_residual(traj: &Trajectory, dec: &SpectralDecomposition) -> f64 {
    let space = &dec.space;
    let shift = space.params().shift();
    let h = traj.h;
    (1..traj.len() - 1)
        .into_par_iter()
        .map(|m| {
            let dt = (&traj.states[m + 1] - &traj.states[m - 1]) / (2.0 * h);
            let rhs = space.apply_l(&traj.states[m]) - shift * &traj.states[m] + space.apply_n(&traj.states[m]);
            space.norm(&(dt - rhs))
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionSample {
    pub ratio: f64,
    pub image_margin: f64,
}

/// Contraction ratios and image margins of K_u for `n` random pairs in Y_delta.
pub fn contraction_samples(prop: &Propagator, delta: f64, tau_max: f64, n: usize, seed: u64) -> Result<Vec<ContractionSample>> {
    let space = &prop.dec.space;
    let n_steps = (tau_max / prop.h).round() as usize;
    let k = KMap::new(prop);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::substream(seed, i as u64);
            let phi = sampling::random_y_delta(space, &mut rng, delta, prop.h, n_steps);
            let psi = sampling::random_y_delta(space, &mut rng, delta, prop.h, n_steps);
            let u = sampling::random_data(space, &mut rng, delta * delta);
            let (kphi, _) = k.apply(&u, &phi)?;
            let (kpsi, _) = k.apply(&u, &psi)?;
            let ratio = kphi.x_distance(&kpsi, space) / phi.x_distance(&psi, space);
            let (_, image_margin) = in_y_delta(&kphi, &prop.dec, delta)?;
            Ok(ContractionSample { ratio, image_margin })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaScan {
    pub delta_max: Option<f64>,
    /// (delta, worst ratio, worst image margin) per scanned level.
    pub levels: Vec<(f64, f64, f64)>,
}

/// Largest delta in {0.2, 0.1, 0.05, ...} whose sampled contraction ratios are all <= 1/2.
pub fn find_delta_max(prop: &Propagator, tau_max: f64, n_pairs: usize, max_halvings: usize, seed: u64) -> Result<DeltaScan> {
    let mut levels = Vec::new();
    let mut delta = 0.2;
    for _ in 0..=max_halvings {
        let samples = contraction_samples(prop, delta, tau_max, n_pairs, seed)?;
        let worst = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        let margin = samples.iter().map(|s| s.image_margin).fold(0.0, f64::max);
        levels.push((delta, worst, margin));
        if worst <= CONTRACTION_TARGET {
            return Ok(DeltaScan { delta_max: Some(delta), levels });
        }
        delta /= 2.0;
    }
    Ok(DeltaScan { delta_max: None, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::build_propagator;
    use crate::params::Params;
    use crate::spectral::{compute_spectrum, Branch};
    use std::sync::Arc;

    fn setup() -> Propagator {
        let dec = Arc::new(compute_spectrum(&Params::new(3, 1.0, 4).unwrap(), 16, 24).unwrap());
        build_propagator(dec, 0.05).unwrap()
    }

    #[test]
    fn y_delta_examples() {
        let prop = setup();
        let dec = &prop.dec;
        let z = Trajectory::zeros(&dec.space, 0.1, 10);
        assert_eq!(in_y_delta(&z, dec, 0.1).unwrap(), (true, 0.0));
        let edge = Trajectory::from_fn(0.1, 10, |t| 0.1 * (-t).exp() * &dec.gauge);
        let (ok, m) = in_y_delta(&edge, dec, 0.1).unwrap();
        assert!(ok && (m - 1.0).abs() < 1e-12);
        let out = Trajectory::from_fn(0.1, 10, |t| 0.2 * (-t).exp() * &dec.gauge);
        let (ok, m) = in_y_delta(&out, dec, 0.1).unwrap();
        assert!(!ok && (m - 2.0).abs() < 1e-12);
    }

    #[test]
    fn k_examples() {
        let prop = setup();
        let dec = &prop.dec;
        let zero = Trajectory::zeros(&dec.space, prop.h, 40);
        let k0 = apply_k(&dec.space.zeros(), &zero, &prop).unwrap();
        assert!(k0.x_norm(&dec.space) == 0.0);
        let eps = 1e-3;
        let gauge_data = eps * &dec.gauge;
        let a = compute_alpha(&gauge_data, &zero, &prop).unwrap();
        assert!((a.value + eps).abs() < 1e-12);
        assert!(apply_k(&gauge_data, &zero, &prop).unwrap().x_norm(&dec.space) < 1e-10);
        let stable = eps * &dec.mode(1, Branch::Plus).unwrap().vector;
        let ks = apply_k(&stable, &zero, &prop).unwrap();
        for (m, s) in ks.states.iter().enumerate() {
            assert!(dec.space.norm(&(s - (-ks.tau(m)).exp() * &stable)) < 1e-10);
        }
    }

    #[test]
    fn zero_data_fixed_point() {
        let prop = setup();
        let (t, r) = solve_fixed_point(&prop.dec.space.zeros(), 0.05, &prop, &SolverSettings::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.alpha, 0.0);
        assert_eq!(t.x_norm(&prop.dec.space), 0.0);
    }

    #[test]
    fn rejects_large_data() {
        let prop = setup();
        let u = 0.1 * &prop.dec.gauge;
        assert!(solve_fixed_point(&u, 0.05, &prop, &SolverSettings::default()).is_err());
    }
}
