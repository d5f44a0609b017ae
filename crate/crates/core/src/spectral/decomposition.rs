//! Spectrum of the modal L, the analytic eigenvalue match, the gauge mode and its dual.

use super::modal::{Modal, ModalSpace};
use crate::error::{LabError, Result};
use crate::params::Params;
use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;

/// Two-grid stability threshold for keeping an eigenvalue.
pub const REFINEMENT_TOL: f64 = 1e-6;
/// Distance within which a retained eigenvalue is matched to an analytic one.
pub const MATCH_TOL: f64 = 1e-4;
/// Largest acceptable condition number of the mode Gram matrix.
pub const MAX_MODE_GRAM_COND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn symbol(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }
}

/// (lambda_j^+, lambda_j^-) for j = 0..=j_max.
pub fn analytic_eigenvalues(params: &Params, j_max: usize) -> Vec<(f64, f64)> {
    (0..=j_max).map(|j| (params.lambda_plus(j), params.lambda_minus(j))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticMatch {
    pub j: usize,
    pub branch: Branch,
    pub analytic: f64,
    pub computed_re: f64,
    pub computed_im: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub j: usize,
    pub branch: Branch,
    pub eigenvalue: f64,
    /// Unit H^{2k} norm.
    pub vector: Modal,
    /// Root vector of a Jordan chain rather than an eigenvector.
    pub generalized: bool,
    /// ||(L - lambda) v|| for eigenvectors, ||(L - lambda)^2 v|| for root vectors, relative to ||v||.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub space: Arc<ModalSpace>,
    pub coarse_levels: usize,
    /// All eigenvalues at the fine level.
    pub eigenvalues: Vec<Complex<f64>>,
    pub retained: Vec<Complex<f64>>,
    pub spurious: Vec<Complex<f64>>,
    pub matches: Vec<AnalyticMatch>,
    /// Modes for j < k, gauge mode first.
    pub modes: Vec<Mode>,
    pub gauge: Modal,
    pub gauge_dual: Modal,
    pub mode_gram_cond: f64,
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal).then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal)));
    ev
}

fn shifted(l: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    l - DMatrix::identity(l.nrows(), l.ncols()) * lambda
}

fn null_vector(a: DMatrix<f64>) -> Modal {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &s)| if s < bv { (i, s) } else { (bi, bv) });
    v_t.row(imin).transpose()
}

fn normalize_mode(space: &ModalSpace, v: Modal) -> Modal {
    let v = &v / space.norm(&v);
    let (c1, c2) = space.series(&v);
    let u2_at_0 = crate::cheb::cheb_eval(&c2, 0.0);
    let reference = if u2_at_0.abs() > 1e-10 {
        u2_at_0
    } else {
        let lead = c1.iter().chain(&c2).fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m });
        lead
    };
    if reference < 0.0 {
        -v
    } else {
        v
    }
}

/// Dense eigendecomposition at two truncation levels, analytic matching and gauge data.
///
/// `n_coarse` and `n_fine` are Lobatto grid orders; each selects the parity space
/// the grid samples exactly.
pub fn compute_spectrum(params: &Params, n_coarse: usize, n_fine: usize) -> Result<SpectralDecomposition> {
    if (n_fine as f64) < 1.5 * n_coarse as f64 {
        return Err(LabError::Precondition(format!(
            "refinement levels {n_coarse} and {n_fine} differ by less than a factor 1.5"
        )));
    }
    let coarse = ModalSpace::for_grid_order(params, n_coarse)?;
    let fine = Arc::new(ModalSpace::for_grid_order(params, n_fine)?);
    let ev_c = sorted_eigenvalues(coarse.lmat());
    let ev_f = sorted_eigenvalues(fine.lmat());
    let (retained, spurious): (Vec<Complex<f64>>, Vec<Complex<f64>>) = ev_f
        .iter()
        .partition(|z| ev_c.iter().any(|c| (*c - **z).norm() < REFINEMENT_TOL));

    let mut claimed = vec![false; retained.len()];
    let mut matches = Vec::new();
    for (j, (lp, lm)) in analytic_eigenvalues(params, fine.levels()).into_iter().enumerate() {
        for (branch, target) in [(Branch::Plus, lp), (Branch::Minus, lm)] {
            let best = retained
                .iter()
                .enumerate()
                .filter(|(i, _)| !claimed[*i])
                .map(|(i, z)| (i, (*z - Complex::new(target, 0.0)).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            if let Some((i, d)) = best {
                if d < MATCH_TOL {
                    claimed[i] = true;
                    matches.push(AnalyticMatch {
                        j,
                        branch,
                        analytic: target,
                        computed_re: retained[i].re,
                        computed_im: retained[i].im,
                        error: d,
                    });
                }
            }
        }
    }
    if !matches.iter().any(|m| m.j == 0 && m.branch == Branch::Plus) {
        return Err(LabError::Spectral(format!(
            "lambda_0^+ = {} is not among the resolved eigenvalues",
            params.lambda_plus(0)
        )));
    }

    let modes = extract_modes(&fine, &matches, params.k)?;
    let vectors: Vec<Modal> = modes.iter().map(|m| m.vector.clone()).collect();
    let (gauge_dual, cond) = build_gauge_dual(&fine, &vectors)?;
    Ok(SpectralDecomposition {
        gauge: modes[0].vector.clone(),
        space: fine,
        coarse_levels: coarse.levels(),
        eigenvalues: ev_f,
        retained,
        spurious,
        matches,
        modes,
        gauge_dual,
        mode_gram_cond: cond,
    })
}

/// Smallest leading block L[..2m, ..2m] that is invariant (exact zeros below it) and
/// has `lambda` as an eigenvalue. Polynomial eigenvectors live in such a block; solving
/// there keeps their high-degree coefficients exactly zero, which the H^{2k} norm needs.
fn leading_block(l: &DMatrix<f64>, lambda: f64) -> Option<usize> {
    let dim = l.nrows();
    let scale = l.amax().max(1.0);
    (1..=dim / 2).find(|&m| {
        let n = 2 * m;
        let invariant = (n..dim).all(|r| (0..n).all(|c| l[(r, c)] == 0.0));
        if !invariant {
            return false;
        }
        let sub = shifted(&l.view((0, 0), (n, n)).into_owned(), lambda);
        sub.singular_values().min() < 1e-9 * scale
    })
}

fn pad(v: &DVector<f64>, dim: usize) -> Modal {
    let mut out = DVector::zeros(dim);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

fn extract_modes(space: &ModalSpace, matches: &[AnalyticMatch], k: usize) -> Result<Vec<Mode>> {
    let l = space.lmat();
    let dim = space.dim();
    let mut modes: Vec<Mode> = Vec::new();
    for m in matches.iter().filter(|m| m.j < k) {
        if m.computed_im.abs() > MATCH_TOL {
            return Err(LabError::Spectral(format!("mode ({}, {}) has a complex eigenvalue", m.j, m.branch.symbol())));
        }
        let lambda = m.analytic;
        let a = shifted(l, lambda);
        let n = 2 * leading_block(l, lambda)
            .ok_or_else(|| LabError::Spectral(format!("no invariant block carries lambda = {lambda}")))?;
        let sub = a.view((0, 0), (n, n)).into_owned();
        let v = normalize_mode(space, pad(&null_vector(sub.clone()), dim));
        let duplicate = modes
            .iter()
            .find(|o| (o.eigenvalue - lambda).abs() < REFINEMENT_TOL && space.inner(&o.vector, &v).abs() > 1.0 - 1e-6);
        let mode = match duplicate {
            None => {
                let residual = (&a * &v).norm() / v.norm();
                Mode { j: m.j, branch: m.branch, eigenvalue: lambda, vector: v, generalized: false, residual }
            }
            Some(eig) => {
                // defective eigenvalue: continue the Jordan chain, (L - lambda) w = v, in the
                // smallest invariant block that leaves room for a new degree
                let mut w = None;
                for n2 in (n + 2..=dim).step_by(2) {
                    let sub2 = a.view((0, 0), (n2, n2)).into_owned();
                    let rhs = eig.vector.rows(0, n2).into_owned();
                    let svd = sub2.clone().svd(true, true);
                    if let Ok(sol) = svd.solve(&rhs, 1e-10 * svd.singular_values.max()) {
                        if (&sub2 * &sol - &rhs).norm() < 1e-8 * rhs.norm() {
                            w = Some(pad(&sol, dim));
                            break;
                        }
                    }
                }
                let w = w.ok_or_else(|| LabError::Spectral(format!("Jordan chain at lambda = {lambda} not found")))?;
                let w = normalize_mode(space, w);
                let residual = (&a * (&a * &w)).norm() / w.norm();
                Mode { j: m.j, branch: m.branch, eigenvalue: lambda, vector: w, generalized: true, residual }
            }
        };
        modes.push(mode);
    }
    if modes.len() != 2 * k {
        return Err(LabError::Spectral(format!("expected {} modes with j < {k}, resolved {}", 2 * k, modes.len())));
    }
    Ok(modes)
}

/// The vector in span(modes) with (modes[i] | g*) = delta_{i0}, and the Gram condition number.
pub fn build_gauge_dual(space: &ModalSpace, modes: &[Modal]) -> Result<(Modal, f64)> {
    let n = modes.len();
    let gram = DMatrix::from_fn(n, n, |a, b| space.inner(&modes[a], &modes[b]));
    let sv = gram.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond > MAX_MODE_GRAM_COND {
        return Err(LabError::Resolution(format!(
            "mode Gram matrix has condition number {cond:.3e}; k or N too aggressive"
        )));
    }
    let mut e0 = DVector::zeros(n);
    e0[0] = 1.0;
    let beta = gram
        .lu()
        .solve(&e0)
        .ok_or_else(|| LabError::Resolution("singular mode Gram matrix".into()))?;
    let mut dual = space.zeros();
    for (b, m) in beta.iter().zip(modes) {
        dual += *b * m;
    }
    Ok((dual, cond))
}

impl SpectralDecomposition {
    pub fn params(&self) -> &Params {
        self.space.params()
    }

    /// c_0^+(u) = (u | g*).
    pub fn gauge_coefficient(&self, u: &Modal) -> f64 {
        self.space.inner(u, &self.gauge_dual)
    }

    /// P u = (u | g*) g.
    pub fn project_gauge(&self, u: &Modal) -> Modal {
        self.gauge_coefficient(u) * &self.gauge
    }

    pub fn mode(&self, j: usize, branch: Branch) -> Option<&Mode> {
        self.modes.iter().find(|m| m.j == j && m.branch == branch)
    }

    /// Gram matrix of the retained modes.
    pub fn mode_gram(&self) -> DMatrix<f64> {
        let n = self.modes.len();
        DMatrix::from_fn(n, n, |a, b| self.space.inner(&self.modes[a].vector, &self.modes[b].vector))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        let p = Params::new(3, 1.0, 4).unwrap();
        let v = analytic_eigenvalues(&p, 1);
        assert_eq!(v, vec![(2.0, -3.0), (0.0, -5.0)]);
    }

    #[test]
    fn p3_spectrum() {
        let p = Params::new(3, 1.0, 4).unwrap();
        let dec = compute_spectrum(&p, 32, 48).unwrap();
        for target in [2.0, 0.0, -2.0, -3.0, -5.0] {
            assert!(dec.retained.iter().any(|z| (z - Complex::new(target, 0.0)).norm() < 1e-6), "{target}");
        }
        assert!((dec.gauge_coefficient(&dec.gauge) - 1.0).abs() < 1e-8);
        for m in &dec.modes[1..] {
            assert!(dec.gauge_coefficient(&m.vector).abs() < 1e-8);
        }
        assert!(compute_spectrum(&p, 40, 48).is_err());
    }

    #[test]
    fn p5_resonance_uses_a_root_vector() {
        let p = Params::new(5, 1.0, 3).unwrap();
        let dec = compute_spectrum(&p, 32, 48).unwrap();
        let root = dec.mode(2, Branch::Plus).unwrap();
        assert!(root.generalized);
        assert!(!dec.mode(0, Branch::Minus).unwrap().generalized);
        assert!(dec.mode_gram_cond < MAX_MODE_GRAM_COND);
    }
}
