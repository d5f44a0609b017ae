//! Comparison of similarity-coordinate trajectories with cone images of physical runs.

use crate::error::{LabError, Result};
use crate::grid::{build_grid, Grid};
use crate::linear::fit_slope;
use crate::physical::{cone_limit_tau, evolve_to_cone, pullback, ConeSample, WaveMode};
use crate::spectral::{Modal, ModalSpace};
use crate::trajectory::Trajectory;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhysicalSettings {
    pub dr: f64,
    /// dt / dr.
    pub cfl: f64,
    /// Radial domain is [0, T + r_margin].
    pub r_margin: f64,
    /// Nodes of the Lobatto grid used for cone sampling and the L^2 x L^2 norm.
    pub cone_nodes: usize,
}

impl Default for PhysicalSettings {
    fn default() -> Self {
        PhysicalSettings { dr: 1e-3, cfl: 0.9, r_margin: 1.5, cone_nodes: 48 }
    }
}

impl PhysicalSettings {
    pub fn dt(&self) -> f64 {
        self.cfl * self.dr
    }

    pub fn tau_limit(&self) -> f64 {
        cone_limit_tau(self.dt())
    }
}

fn l2(grid: &Grid<f64>, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).zip(grid.weights().iter()).map(|((x, y), w)| w * (x * x + y * y)).sum::<f64>().sqrt()
}

/// Runs the physical solver from the pullback of `data` (at tau = 0) and samples the cone at `taus`.
pub fn physical_cone(
    space: &ModalSpace,
    data: &Modal,
    mode: WaveMode,
    settings: &PhysicalSettings,
    taus: &[f64],
) -> Result<(Grid<f64>, Vec<ConeSample>)> {
    let params = space.params();
    if params.t_blowup != 1.0 {
        // tau = 0 corresponds to t = T - 1, so T must be 1 for the run to start at t = 0
        return Err(LabError::param("t_blowup", "cross-validation runs use T = 1"));
    }
    let grid = build_grid(settings.cone_nodes)?;
    let r_max = params.t_blowup + settings.r_margin;
    let n_cells = (r_max / settings.dr).round() as usize;
    let init = pullback(space, data, 0.0, r_max, n_cells);
    let samples = evolve_to_cone(&init, params, mode, settings.dt(), taus, grid.nodes())?;
    Ok((grid, samples))
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub tau: f64,
    pub similarity_norm: f64,
    pub physical_norm: f64,
    pub difference: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub max_relative: f64,
    pub window: (f64, f64),
    /// True when the window had to be cut at the resolved cone limit.
    pub truncated: bool,
    #[serde(skip)]
    pub samples: Vec<ConeSample>,
}

/// Pulls back traj(0), evolves it physically and compares cone images with traj on `window`,
/// every `stride` samples. Norm is L^2 x L^2 on [0, 1].
pub fn compare_with_physical(
    space: &ModalSpace,
    traj: &Trajectory,
    mode: WaveMode,
    settings: &PhysicalSettings,
    window: (f64, f64),
    stride: usize,
) -> Result<CompareReport> {
    let limit = settings.tau_limit().min(traj.tau_max());
    let truncated = window.1 > limit;
    let hi = window.1.min(limit);
    let idx: Vec<usize> = (0..traj.len())
        .step_by(stride.max(1))
        .filter(|&m| traj.tau(m) >= window.0 - 1e-12 && traj.tau(m) <= hi + 1e-12)
        .collect();
    if idx.is_empty() {
        return Err(LabError::Resolution(format!("no samples in the comparison window up to tau = {hi:.4}")));
    }
    let taus: Vec<f64> = idx.iter().map(|&m| traj.tau(m)).collect();
    let (grid, samples) = physical_cone(space, &traj.states[0], mode, settings, &taus)?;
    let rows: Vec<CompareRow> = idx
        .iter()
        .zip(&samples)
        .map(|(&m, s)| {
            let f = space.to_field(&traj.states[m], &grid);
            let d1: Vec<f64> = s.phi1.iter().zip(&f.u1).map(|(a, b)| a - b).collect();
            let d2: Vec<f64> = s.phi2.iter().zip(&f.u2).map(|(a, b)| a - b).collect();
            let sim = l2(&grid, &f.u1, &f.u2);
            let diff = l2(&grid, &d1, &d2);
            CompareRow {
                tau: s.tau,
                similarity_norm: sim,
                physical_norm: l2(&grid, &s.phi1, &s.phi2),
                difference: diff,
                relative: if sim > 0.0 { diff / sim } else if diff == 0.0 { 0.0 } else { f64::INFINITY },
            }
        })
        .collect();
    let max_relative = rows.iter().map(|r| r.relative).fold(0.0, f64::max);
    Ok(CompareReport { rows, max_relative, window: (window.0, hi), truncated, samples })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub taus: Vec<f64>,
    pub norms: Vec<f64>,
    pub rate: f64,
}

/// Fitted exponential rate of the physical cone norm of the evolution of `data`.
pub fn physical_growth(
    space: &ModalSpace,
    data: &Modal,
    mode: WaveMode,
    settings: &PhysicalSettings,
    window: (f64, f64),
    samples: usize,
) -> Result<GrowthReport> {
    if window.1 > settings.tau_limit() {
        return Err(LabError::Resolution(format!("window end {} is beyond the resolved limit {:.4}", window.1, settings.tau_limit())));
    }
    let taus: Vec<f64> = (0..samples).map(|i| window.0 + (window.1 - window.0) * i as f64 / (samples - 1) as f64).collect();
    let (grid, out) = physical_cone(space, data, mode, settings, &taus)?;
    let norms: Vec<f64> = out.iter().map(|s| l2(&grid, &s.phi1, &s.phi2)).collect();
    let pts: Vec<(f64, f64)> = taus.iter().zip(&norms).filter(|(_, n)| **n > 0.0).map(|(t, n)| (*t, n.ln())).collect();
    let rate = fit_slope(&pts).ok_or_else(|| LabError::Resolution("cone norm vanished; no rate to fit".into()))?;
    Ok(GrowthReport { taus, norms, rate })
}
