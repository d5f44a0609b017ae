//! Radial wave solver in physical coordinates, cone extraction and blowup-rate fits.
//!
//! The unknown is w = r f, where f is either the perturbation of the ODE blowup
//! solution or the full field, so that w(t, 0) = 0 and
//! w_tt = w_rr + V(t) w + F(t, r, w).

use crate::coords::fundamental_solution;
use crate::error::{LabError, Result};
use crate::linear::fit_slope;
use crate::params::Params;
use crate::spectral::{Modal, ModalSpace};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WaveMode {
    /// Perturbation of the blowup solution: V = p c0/(T-t)^2 plus the nonlinear sum.
    Perturbation,
    /// Perturbation equation without the nonlinear sum.
    Linear,
    /// Full field: w_tt = w_rr + w^p / r^{p-1}.
    Full,
    /// w_tt = w_rr.
    Free,
}

impl WaveMode {
    fn uses_background(self) -> bool {
        matches!(self, WaveMode::Perturbation | WaveMode::Linear)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub dr: f64,
    /// w at r_i = i dr.
    pub w: Vec<f64>,
    pub w_t: Vec<f64>,
    pub t: f64,
}

impl RadialState {
    pub fn new(r_max: f64, n_cells: usize, t: f64, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let dr = r_max / n_cells as f64;
        let (w, w_t) = (0..=n_cells).map(|i| if i == 0 { (0.0, 0.0) } else { f(i as f64 * dr) }).unzip();
        RadialState { dr, w, w_t, t }
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn r_max(&self) -> f64 {
        self.r(self.w.len() - 1)
    }

    /// w_r by centered differences (odd reflection at r = 0, one-sided at r = R).
    pub fn w_r(&self) -> Vec<f64> {
        let n = self.w.len();
        (0..n)
            .map(|i| {
                if i == 0 {
                    self.w[1] / self.dr
                } else if i == n - 1 {
                    (self.w[i] - self.w[i - 1]) / self.dr
                } else {
                    (self.w[i + 1] - self.w[i - 1]) / (2.0 * self.dr)
                }
            })
            .collect()
    }
}

fn lagrange4(vals: &[f64], dr: f64, r: f64) -> f64 {
    let n = vals.len();
    let x = r / dr;
    let i0 = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (x - (i0 + b) as f64) / (a as f64 - b as f64);
            }
        }
        acc += l * vals[i0 + a];
    }
    acc
}

/// Acceleration w_tt at every node, excluding the outer boundary.
fn acceleration(state: &RadialState, params: &Params, mode: WaveMode) -> Result<Vec<f64>> {
    let n = state.w.len();
    let dr2 = state.dr * state.dr;
    let mut a = vec![0.0; n];
    let (v, psi) = if mode.uses_background() {
        let psi = fundamental_solution(params, state.t, 0.0)?;
        let s = params.t_blowup - state.t;
        (params.p as f64 * params.c0 / (s * s), psi)
    } else {
        (0.0, 0.0)
    };
    let coeffs: Vec<f64> = (2..=params.p)
        .map(|j| crate::params::binomial(params.p, j) as f64 * psi.powi((params.p - j) as i32))
        .collect();
    for i in 1..n - 1 {
        let w = state.w[i];
        let lap = (state.w[i + 1] - 2.0 * w + state.w[i - 1]) / dr2;
        let r = state.r(i);
        let source = match mode {
            WaveMode::Free => 0.0,
            WaveMode::Linear => v * w,
            WaveMode::Perturbation => {
                let q = w / r;
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = (acc + c) * q;
                }
                v * w + r * acc * q
            }
            WaveMode::Full => {
                let q = w / r;
                r * q.powi(params.p as i32)
            }
        };
        a[i] = lap + source;
    }
    Ok(a)
}

/// One velocity-Verlet (leapfrog) step with w(t, 0) = 0 and w_t + w_r = 0 at r = R.
pub fn step_wave(state: &RadialState, params: &Params, mode: WaveMode, dt: f64) -> Result<RadialState> {
    if dt <= 0.0 || dt > 0.9 * state.dr * (1.0 + 1e-12) {
        return Err(LabError::param("dt", format!("dt = {dt} violates 0 < dt <= 0.9 dr = {}", 0.9 * state.dr)));
    }
    if mode.uses_background() && state.t + dt >= params.t_blowup {
        return Err(LabError::Resolution(format!("step to t = {} reaches the blowup time", state.t + dt)));
    }
    let n = state.w.len();
    let a0 = acceleration(state, params, mode)?;
    let mut next = state.clone();
    for i in 1..n - 1 {
        let half = state.w_t[i] + 0.5 * dt * a0[i];
        next.w[i] = state.w[i] + dt * half;
        next.w_t[i] = half;
    }
    // outgoing boundary, first-order upwind
    let c = dt / state.dr;
    next.w[n - 1] = state.w[n - 1] - c * (state.w[n - 1] - state.w[n - 2]);
    next.t = state.t + dt;
    let a1 = acceleration(&next, params, mode)?;
    for i in 1..n - 1 {
        next.w_t[i] += 0.5 * dt * a1[i];
    }
    next.w_t[n - 1] = -(next.w[n - 1] - next.w[n - 2]) / state.dr;
    next.w[0] = 0.0;
    next.w_t[0] = 0.0;
    if next.w.iter().chain(&next.w_t).any(|v| !v.is_finite() || v.abs() > 1e150) {
        return Err(LabError::Resolution(format!("solution overflowed at t = {}", next.t)));
    }
    Ok(next)
}

/// Smooth cutoff: 1 on [0, a], 0 on [b, inf).
fn cutoff(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        return 1.0;
    }
    if x >= b {
        return 0.0;
    }
    let f = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    let y = (x - a) / (b - a);
    f(1.0 - y) / (f(1.0 - y) + f(y))
}

/// Chebyshev series in rho continued past rho = 1 by its degree-4 Taylor polynomial at 1.
struct Extended {
    series: Vec<f64>,
    taylor: [f64; 5],
}

impl Extended {
    fn new(series: Vec<f64>) -> Self {
        let mut taylor = [0.0; 5];
        let mut d = series.clone();
        let mut fact = 1.0;
        for (i, t) in taylor.iter_mut().enumerate() {
            if i > 0 {
                fact *= i as f64;
                d = crate::cheb::cheb_der(&d);
            }
            *t = crate::cheb::cheb_eval(&d, 1.0) / fact;
        }
        Extended { series, taylor }
    }

    fn eval(&self, rho: f64) -> f64 {
        if rho <= 1.0 {
            crate::cheb::cheb_eval(&self.series, rho)
        } else {
            let x = rho - 1.0;
            self.taylor.iter().rev().fold(0.0, |acc, &c| acc * x + c)
        }
    }
}

/// Cutoff window in rho for initial data outside the backward cone.
pub const EXTENSION_WINDOW: (f64, f64) = (1.1, 1.6);

/// Physical data at t0 = T - e^{-tau0} whose similarity image at tau0 is `phi`.
pub fn pullback(space: &ModalSpace, phi: &Modal, tau0: f64, r_max: f64, n_cells: usize) -> RadialState {
    let params = space.params();
    let s0 = (-tau0).exp();
    let q = params.shift();
    let (c1, _) = space.series(phi);
    let u1 = Extended::new(c1);
    let w2 = Extended::new(space.u2_antiderivative(phi));
    RadialState::new(r_max, n_cells, params.t_blowup - s0, |r| {
        let rho = r / s0;
        let chi = cutoff(rho, EXTENSION_WINDOW.0, EXTENSION_WINDOW.1);
        (chi * s0.powf(1.0 - q) * w2.eval(rho), chi * s0.powf(-q) * u1.eval(rho))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeSample {
    pub tau: f64,
    pub rho: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

/// Similarity image (phi1, phi2) of a physical state on the rho nodes.
pub fn extract_cone(state: &RadialState, params: &Params, rho: &[f64]) -> Result<ConeSample> {
    let s = params.t_blowup - state.t;
    if s <= 0.0 {
        return Err(LabError::Resolution("state is past the blowup time".into()));
    }
    if s > state.r_max() {
        return Err(LabError::Resolution("backward cone exceeds the radial domain".into()));
    }
    let scale = s.powf(params.shift());
    let wr = state.w_r();
    let phi1 = rho.iter().map(|&x| scale * lagrange4(&state.w_t, state.dr, x * s)).collect();
    let phi2 = rho.iter().map(|&x| scale * lagrange4(&wr, state.dr, x * s)).collect();
    Ok(ConeSample { tau: -s.ln(), rho: rho.to_vec(), phi1, phi2 })
}

/// Latest tau the fixed grid resolves: integration stops once T - t < 10 dt.
pub fn cone_limit_tau(dt: f64) -> f64 {
    -(10.0 * dt).ln()
}

/// Evolves `initial` and returns cone images at the requested (ascending) tau values.
pub fn evolve_to_cone(
    initial: &RadialState,
    params: &Params,
    mode: WaveMode,
    dt: f64,
    taus: &[f64],
    rho: &[f64],
) -> Result<Vec<ConeSample>> {
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let t_target = params.t_blowup - (-tau).exp();
        if params.t_blowup - t_target < 10.0 * dt {
            return Err(LabError::Resolution(format!(
                "tau = {tau} is beyond the resolved limit {:.4}",
                cone_limit_tau(dt)
            )));
        }
        if t_target < state.t - 1e-14 {
            return Err(LabError::Precondition(format!("tau = {tau} precedes the current state")));
        }
        while state.t + dt <= t_target {
            state = step_wave(&state, params, mode, dt)?;
        }
        let gap = t_target - state.t;
        let snap = if gap > 1e-14 { step_partial(&state, params, mode, gap)? } else { state.clone() };
        out.push(extract_cone(&snap, params, rho)?);
    }
    Ok(out)
}

fn step_partial(state: &RadialState, params: &Params, mode: WaveMode, dt: f64) -> Result<RadialState> {
    step_wave(state, params, mode, dt)
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupFit {
    pub detected: bool,
    pub t_est: f64,
    pub exponent: f64,
    pub t_stop: f64,
    pub sup_stop: f64,
    pub samples_in_fit: usize,
    /// (t, sup|psi|) at every step.
    #[serde(skip)]
    pub history: Vec<(f64, f64)>,
    #[serde(skip)]
    pub snapshots: Vec<RadialState>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowupSettings {
    pub dt: f64,
    pub t_limit: f64,
    /// Stop once dt^2 p sup|psi|^{p-1} exceeds this.
    pub stiffness_stop: f64,
    /// Fit over samples with sup|psi| >= sup_stop / fit_decade.
    pub fit_decade: f64,
    /// Keep every n-th state (0 keeps none).
    pub snapshot_every: usize,
}

impl BlowupSettings {
    pub fn new(dt: f64, t_limit: f64) -> Self {
        // 0.06 corresponds to T - t = 10 dt for the p = 3 blowup profile
        BlowupSettings { dt, t_limit, stiffness_stop: 0.06, fit_decade: 10.0, snapshot_every: 0 }
    }
}

/// sup |psi| over the part of the grid the outer boundary cannot have influenced yet.
fn causal_sup(state: &RadialState, t0: f64) -> f64 {
    // numerical signal speed is dr/dt > 1; 1.2 leaves room for the 0.9 CFL factor
    let reach = state.r_max() - 1.2 * (state.t - t0) - 4.0 * state.dr;
    let n = ((reach / state.dr).floor().max(1.0) as usize).min(state.w.len() - 1);
    let mut m = (state.w[1] / state.dr).abs();
    for i in 1..=n {
        m = m.max((state.w[i] / state.r(i)).abs());
    }
    m
}

/// Full-field run: integrates until the stiffness limit and fits sup|psi| ~ (T_est - t)^exponent.
pub fn detect_blowup_rate(initial: &RadialState, params: &Params, settings: &BlowupSettings) -> Result<BlowupFit> {
    let p = params.p as f64;
    let t0 = initial.t;
    let mut state = initial.clone();
    let mut hist = vec![(state.t, causal_sup(&state, t0))];
    let mut snapshots = Vec::new();
    if settings.snapshot_every > 0 {
        snapshots.push(state.clone());
    }
    let mut hit = false;
    while state.t < settings.t_limit {
        let reach = state.r_max() - 1.2 * (state.t - t0);
        if reach < 0.1 * state.r_max() {
            break;
        }
        state = match step_wave(&state, params, WaveMode::Full, settings.dt) {
            Ok(s) => s,
            Err(LabError::Resolution(_)) => {
                hit = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let sup = causal_sup(&state, t0);
        hist.push((state.t, sup));
        if settings.snapshot_every > 0 && (hist.len() - 1) % settings.snapshot_every == 0 {
            snapshots.push(state.clone());
        }
        if settings.dt * settings.dt * p * sup.powf(p - 1.0) > settings.stiffness_stop {
            hit = true;
            break;
        }
    }
    let (t_stop, sup_stop) = *hist.last().unwrap();
    if !hit {
        return Ok(BlowupFit {
            detected: false,
            t_est: f64::NAN,
            exponent: f64::NAN,
            t_stop,
            sup_stop,
            samples_in_fit: 0,
            history: hist,
            snapshots,
        });
    }
    let window: Vec<(f64, f64)> = hist.iter().copied().filter(|&(_, s)| s >= sup_stop / settings.fit_decade).collect();
    if window.len() < 8 {
        return Err(LabError::Resolution(format!("only {} samples in the final decade; decrease dt", window.len())));
    }
    let span = t_stop - window[0].0;
    let fit_at = |t_est: f64| -> (f64, f64) {
        let pts: Vec<(f64, f64)> = window.iter().map(|&(t, s)| ((t_est - t).ln(), s.ln())).collect();
        let slope = fit_slope(&pts).unwrap_or(f64::NAN);
        let n = pts.len() as f64;
        let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
        let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
        let rss = pts.iter().map(|q| (q.1 - my - slope * (q.0 - mx)).powi(2)).sum::<f64>();
        (rss, slope)
    };
    // golden section over log(T_est - t_stop)
    let (mut lo, mut hi) = ((settings.dt * 1e-3).ln(), (10.0 * span).ln());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| fit_at(t_stop + x.exp()).0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let t_est = t_stop + (0.5 * (lo + hi)).exp();
    let (_, exponent) = fit_at(t_est);
    let samples_in_fit = window.len();
    Ok(BlowupFit { detected: true, t_est, exponent, t_stop, sup_stop, samples_in_fit, history: hist, snapshots })
}
