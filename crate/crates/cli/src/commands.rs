//! Subcommand implementations. Each writes its artifacts into `out` and returns the
//! command-specific part of report.json.

use crate::config::{Auto, ConfigError, DataFamily, RunConfig};
use crate::output::{write_csv, Cell};
use blowup_core::crosscheck::{compare_with_physical, physical_growth, PhysicalSettings};
use blowup_core::linear::{build_propagator, evolve_linear, measure_decay_with, Propagator, MAX_LINEAR_SPAN};
use blowup_core::nonlinear::{find_delta_max, pde_residual, solve_fixed_point, verify_uniqueness, SolverSettings};
use blowup_core::physical::{detect_blowup_rate, BlowupSettings, RadialState, WaveMode};
use blowup_core::properties::{hardy_suite, nonlinearity_suite, semigroup_suite, FittedBound};
use blowup_core::spectral::{compute_spectrum, Branch, Modal, SpectralDecomposition};
use blowup_core::{build_grid, k_min, sampling, LabError, Params, Trajectory};
use serde_json::{json, Map, Value};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Lab(LabError),
    Io(std::io::Error),
    /// Artifacts failed validation.
    Invalid(Vec<String>),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Lab(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Invalid(p) => write!(f, "{} validation problem(s):\n  {}", p.len(), p.join("\n  ")),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Lab(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use blowup_core::ErrorKind;
        match self {
            CliError::Config(_) => 2,
            CliError::Lab(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Math => 3,
                ErrorKind::Resolution => 4,
            },
            CliError::Io(_) | CliError::Invalid(_) => 1,
        }
    }
}

/// Outcome of a subcommand: report status, resolved "auto" values and results.
pub struct Outcome {
    pub status: &'static str,
    pub resolved: Map<String, Value>,
    pub results: Value,
    /// Error to exit with after the report is written.
    pub error: Option<CliError>,
}

fn cfg_err(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(ConfigError { field: field.into(), reason: reason.into() })
}

fn params(cfg: &RunConfig) -> Result<Params, CliError> {
    let k = match cfg.k {
        Auto::Auto => k_min(cfg.p).map_err(|e| cfg_err("p", e.to_string()))?,
        Auto::Value(k) => k,
    };
    Params::new(cfg.p, cfg.t_blowup, k).map_err(|e| match e {
        LabError::InvalidParameter { name, reason } => cfg_err(if name == "t_blowup" { "T" } else { name }, reason),
        other => CliError::Lab(other),
    })
}

fn resolved_base(cfg: &RunConfig, params: &Params) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("k".into(), json!(params.k));
    m.insert("c0".into(), json!(params.c0));
    m.insert("N_coarse".into(), json!(cfg.coarse_order()));
    m
}

fn decomposition(cfg: &RunConfig, params: &Params) -> Result<Arc<SpectralDecomposition>, CliError> {
    if cfg.n % 2 != 0 {
        return Err(cfg_err("N", "grid order must be even"));
    }
    Ok(Arc::new(compute_spectrum(params, cfg.coarse_order(), cfg.n)?))
}

fn propagator(cfg: &RunConfig, dec: &Arc<SpectralDecomposition>) -> Result<Propagator, CliError> {
    build_propagator(dec.clone(), cfg.h).map_err(|e| match e {
        LabError::InvalidParameter { reason, .. } => cfg_err("h", reason),
        other => CliError::Lab(other),
    })
}

fn solver_settings(cfg: &RunConfig) -> SolverSettings {
    SolverSettings { tau_max: cfg.tau_max, tol: cfg.tol, max_iter: cfg.max_iter }
}

/// delta, plus the scan when it was "auto".
fn resolve_delta(cfg: &RunConfig, prop: &Propagator, resolved: &mut Map<String, Value>) -> Result<f64, CliError> {
    let delta = match cfg.delta {
        Auto::Value(d) => d,
        Auto::Auto => {
            let scan = find_delta_max(prop, cfg.tau_max, cfg.pairs, 30, cfg.seed)?;
            resolved.insert("delta_scan".into(), serde_json::to_value(&scan.levels).expect("plain numbers"));
            scan.delta_max.ok_or_else(|| {
                LabError::Contraction { reason: "no scanned delta contracts".into(), ratios: scan.levels.iter().map(|l| l.1).collect() }
            })?
        }
    };
    resolved.insert("delta".into(), json!(delta));
    Ok(delta)
}

fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), CliError> {
    let bad = |r: String| cfg_err("data_path", r);
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_owned).collect();
    if headers != ["rho", "u1", "u2"] {
        return Err(bad(format!("expected header rho,u1,u2, got {}", headers.join(","))));
    }
    let (mut r, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |j: usize| rec[j].trim().parse::<f64>().map_err(|_| bad(format!("row {}: \"{}\" is not a number", i + 1, &rec[j])));
        r.push(num(0)?);
        a.push(num(1)?);
        b.push(num(2)?);
    }
    Ok((r, a, b))
}

fn unit(dec: &SpectralDecomposition, v: Modal) -> Modal {
    let n = dec.space.norm(&v);
    v / n
}

/// Initial data in the modal space with ||u|| = amplitude (unless read from a file
/// without an amplitude).
fn build_data(cfg: &RunConfig, dec: &SpectralDecomposition, family: DataFamily, amplitude: f64) -> Result<Modal, CliError> {
    let space = &dec.space;
    if let Some(path) = &cfg.data_path {
        if cfg.data.is_some() {
            return Err(cfg_err("data_path", "give either `data` or `data_path`, not both"));
        }
        let (r, a, b) = read_samples(path)?;
        let u = space.from_samples(&r, &a, &b).map_err(|e| cfg_err("data_path", e.to_string()))?;
        return Ok(match cfg.amplitude {
            Some(amp) if space.norm(&u) > 0.0 => amp * unit(dec, u),
            _ => u,
        });
    }
    let mode = |j: usize, branch: Branch| -> Result<Modal, CliError> {
        dec.mode(j, branch)
            .map(|m| m.vector.clone())
            .ok_or_else(|| cfg_err("mode", format!("no computed mode {j}{} (modes j < k only)", branch.symbol())))
    };
    let dir = match family {
        DataFamily::Zero => return Ok(space.zeros()),
        DataFamily::Gauge => dec.gauge.clone(),
        DataFamily::Stable => mode(1, Branch::Plus)?,
        DataFamily::Mixed => unit(dec, mode(1, Branch::Plus)? + &dec.gauge),
        DataFamily::Random => sampling::random_direction(space, &mut sampling::rng(cfg.seed)),
        DataFamily::Mode => {
            let (j, plus) = cfg.mode_label()?;
            mode(j, if plus { Branch::Plus } else { Branch::Minus })?
        }
        DataFamily::Exact | DataFamily::Gaussian => {
            return Err(cfg_err("data", "physical-space families (exact, gaussian) only apply to blowup-rate"))
        }
    };
    Ok(amplitude * dir)
}

/// Data for the fixed point: ||u|| = amplitude (default delta^2 / 2), which must not exceed delta^2.
fn fixed_point_data(cfg: &RunConfig, dec: &SpectralDecomposition, delta: f64) -> Result<Modal, CliError> {
    let amp = cfg.amplitude.unwrap_or(0.5 * delta * delta);
    let u = build_data(cfg, dec, cfg.data_or(DataFamily::Stable), amp)?;
    let n = dec.space.norm(&u);
    if n > delta * delta * (1.0 + 1e-12) {
        let field = if cfg.data_path.is_some() && cfg.amplitude.is_none() { "data_path" } else { "amplitude" };
        return Err(cfg_err(field, format!("||u|| = {n:.6e} exceeds delta^2 = {:.6e}", delta * delta)));
    }
    Ok(u)
}

fn trajectory_rows(dec: &SpectralDecomposition, traj: &Trajectory) -> Vec<Vec<Cell>> {
    let space = &dec.space;
    traj.states
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let pu = dec.project_gauge(s);
            vec![
                Cell::F(traj.tau(m)),
                Cell::F(space.norm(s)),
                Cell::F(space.norm(&pu)),
                Cell::F(space.norm(&(s - &pu))),
            ]
        })
        .collect()
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

pub fn spectrum(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let params = params(cfg)?;
    let dec = decomposition(cfg, &params)?;
    let mut rows = Vec::new();
    for (z, status) in dec.retained.iter().map(|z| (z, "retained")).chain(dec.spurious.iter().map(|z| (z, "spurious"))) {
        let m = dec.matches.iter().find(|m| m.computed_re == z.re && m.computed_im == z.im && status == "retained");
        let residual = m.and_then(|m| dec.modes.iter().find(|x| x.j == m.j && x.branch == m.branch)).map(|x| x.residual);
        rows.push(vec![
            Cell::F(z.re),
            Cell::F(z.im),
            Cell::T(status.into()),
            m.map_or(Cell::Empty, |m| Cell::I(m.j as i64)),
            m.map_or(Cell::Empty, |m| Cell::T(branch_name(m.branch).into())),
            m.map_or(Cell::Empty, |m| Cell::F(m.analytic)),
            m.map_or(Cell::Empty, |m| Cell::F(m.error)),
            residual.map_or(Cell::Empty, Cell::F),
        ]);
    }
    write_csv(out, "spectrum.csv", rows)?;
    let grid = build_grid(cfg.n)?;
    let g = dec.space.to_field(&dec.gauge, &grid);
    let gs = dec.space.to_field(&dec.gauge_dual, &grid);
    write_csv(
        out,
        "gauge.csv",
        (0..grid.len()).map(|i| {
            vec![Cell::F(grid.nodes()[i]), Cell::F(g.u1[i]), Cell::F(g.u2[i]), Cell::F(gs.u1[i]), Cell::F(gs.u2[i])]
        }),
    )?;
    let matches: Vec<Value> = dec
        .matches
        .iter()
        .map(|m| json!({"j": m.j, "branch": branch_name(m.branch), "analytic": m.analytic, "computed_re": m.computed_re, "computed_im": m.computed_im, "error": m.error}))
        .collect();
    let modes: Vec<Value> = dec
        .modes
        .iter()
        .map(|m| json!({"j": m.j, "branch": branch_name(m.branch), "eigenvalue": m.eigenvalue, "residual": m.residual, "generalized": m.generalized}))
        .collect();
    Ok(Outcome {
        status: "ok",
        resolved: resolved_base(cfg, &params),
        results: json!({
            "retained": dec.retained.len(),
            "spurious": dec.spurious.len(),
            "matches": matches,
            "modes": modes,
            "mode_gram_cond": dec.mode_gram_cond,
        }),
        error: None,
    })
}

pub fn fixed_point(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let params = params(cfg)?;
    let dec = decomposition(cfg, &params)?;
    let prop = propagator(cfg, &dec)?;
    let mut resolved = resolved_base(cfg, &params);
    let delta = resolve_delta(cfg, &prop, &mut resolved)?;
    let u = fixed_point_data(cfg, &dec, delta)?;
    resolved.insert("data_norm".into(), json!(dec.space.norm(&u)));
    let settings = solver_settings(cfg);
    let (traj, rep) = match solve_fixed_point(&u, delta, &prop, &settings) {
        Ok(v) => v,
        Err(LabError::Contraction { reason, ratios }) => {
            return Ok(Outcome {
                status: "contraction-failure",
                resolved,
                results: json!({"reason": reason, "contraction_ratios": ratios}),
                error: Some(CliError::Lab(LabError::Contraction { reason, ratios })),
            })
        }
        Err(e) => return Err(e.into()),
    };
    write_csv(out, "trajectory.csv", trajectory_rows(&dec, &traj))?;
    let uq = verify_uniqueness(&u, &traj, delta, &prop, &settings, 1e-3 * delta * delta, cfg.seed)?;
    let mut results = serde_json::to_value(&rep).expect("report serializes");
    let obj = results.as_object_mut().expect("report is an object");
    obj.insert("pde_residual".into(), json!(pde_residual(&traj, &dec)));
    obj.insert("uniqueness".into(), serde_json::to_value(&uq).expect("plain fields"));
    Ok(Outcome { status: "ok", resolved, results, error: None })
}

pub fn cross_validate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    if cfg.t_blowup != 1.0 {
        return Err(cfg_err("T", "cross-validation starts the physical run at t = 0, which needs T = 1"));
    }
    let params = params(cfg)?;
    let dec = decomposition(cfg, &params)?;
    let prop = propagator(cfg, &dec)?;
    let mut resolved = resolved_base(cfg, &params);
    let delta = resolve_delta(cfg, &prop, &mut resolved)?;
    let u = fixed_point_data(cfg, &dec, delta)?;
    let (traj, rep) = solve_fixed_point(&u, delta, &prop, &solver_settings(cfg))?;
    let phys = PhysicalSettings { dr: cfg.dr, r_margin: cfg.r_margin, cone_nodes: cfg.n, ..Default::default() };
    resolved.insert("tau_limit".into(), json!(phys.tau_limit()));
    let cmp = compare_with_physical(&dec.space, &traj, WaveMode::Perturbation, &phys, (0.0, cfg.tau_window), 1)?;
    write_csv(
        out,
        "compare.csv",
        cmp.rows.iter().map(|r| {
            vec![Cell::F(r.tau), Cell::F(r.similarity_norm), Cell::F(r.physical_norm), Cell::F(r.difference), Cell::F(r.relative)]
        }),
    )?;
    write_csv(
        out,
        "cone.csv",
        cmp.samples.iter().flat_map(|s| {
            (0..s.rho.len()).map(move |i| vec![Cell::F(s.tau), Cell::F(s.rho[i]), Cell::F(s.phi1[i]), Cell::F(s.phi2[i])])
        }),
    )?;
    // gauge demonstration: the pulled-back data with and without the alpha correction
    let window = (0.5, (cfg.tau_window + 0.5).min(phys.tau_limit()));
    let growth = if dec.space.norm(&u) > 0.0 && window.1 > window.0 {
        let up = physical_growth(&dec.space, &u, WaveMode::Perturbation, &phys, window, 21)?;
        let down = physical_growth(&dec.space, &traj.states[0], WaveMode::Perturbation, &phys, window, 21)?;
        write_csv(
            out,
            "growth.csv",
            (0..up.taus.len()).map(|i| vec![Cell::F(up.taus[i]), Cell::F(up.norms[i]), Cell::F(down.norms[i])]),
        )?;
        json!({"window": window, "uncorrected_rate": up.rate, "corrected_rate": down.rate})
    } else {
        write_csv(out, "growth.csv", Vec::<Vec<Cell>>::new())?;
        json!({"skipped": "zero data"})
    };
    Ok(Outcome {
        status: if cmp.truncated { "truncated" } else { "ok" },
        resolved,
        results: json!({
            "alpha": rep.alpha,
            "iterations": rep.iterations,
            "max_relative_difference": cmp.max_relative,
            "window": cmp.window,
            "truncated": cmp.truncated,
            "norm": "L2 x L2 on [0, 1]",
            "gauge_demonstration": growth,
        }),
        error: None,
    })
}

pub fn evolve_linear_cmd(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    if cfg.tau_max > MAX_LINEAR_SPAN {
        return Err(cfg_err("tau_max", format!("linear evolution is limited to tau <= {MAX_LINEAR_SPAN}")));
    }
    let params = params(cfg)?;
    let dec = decomposition(cfg, &params)?;
    let prop = propagator(cfg, &dec)?;
    let u = build_data(cfg, &dec, cfg.data_or(DataFamily::Random), cfg.amplitude.unwrap_or(1.0))?;
    let n_steps = (cfg.tau_max / cfg.h).round() as usize;
    let traj = evolve_linear(&prop, &u, n_steps)?;
    write_csv(out, "trajectory.csv", trajectory_rows(&dec, &traj))?;
    let space = &dec.space;
    let window = (0.0, traj.tau_max());
    let rate = |f: &dyn Fn(&Modal) -> f64| measure_decay_with(&traj, window, f).ok();
    let full = rate(&|v| space.norm(v));
    let stable = rate(&|v| space.norm(&(v - dec.project_gauge(v))));
    Ok(Outcome {
        status: "ok",
        resolved: resolved_base(cfg, &params),
        results: json!({
            "n_steps": n_steps,
            "gauge_coefficient": dec.gauge_coefficient(&u),
            "rate": full,
            "stable_rate": stable,
            "final_norm": space.norm(traj.states.last().expect("nonempty")),
        }),
        error: None,
    })
}

fn bound_rows(suite: &str, bounds: &[FittedBound]) -> Vec<Vec<Cell>> {
    bounds
        .iter()
        .map(|b| {
            vec![
                Cell::T(suite.into()),
                Cell::T(b.name.clone()),
                Cell::I(b.train as i64),
                Cell::I(b.validation as i64),
                Cell::F(b.training_max),
                Cell::F(b.constant),
                Cell::F(b.validation_max),
                Cell::I(b.failures as i64),
            ]
        })
        .collect()
}

pub fn hardy(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let params = params(cfg)?;
    let dec = decomposition(cfg, &params)?;
    let prop = propagator(cfg, &dec)?;
    let hardy = hardy_suite(cfg.n_train, cfg.n_valid, cfg.seed)?;
    let nonlinear = nonlinearity_suite(&dec.space, cfg.n_train, cfg.n_valid, cfg.seed)?;
    let semigroup = semigroup_suite(&prop, cfg.n_train, cfg.n_valid, 5.0, cfg.seed)?;
    let mut rows = bound_rows("hardy", &hardy);
    rows.extend(bound_rows("nonlinearity", &nonlinear));
    rows.extend(bound_rows("semigroup", &semigroup));
    write_csv(out, "hardy.csv", rows)?;
    let failures: usize = hardy.iter().chain(&nonlinear).chain(&semigroup).map(|b| b.failures).sum();
    let error = (failures > 0).then(|| {
        CliError::Lab(LabError::Precondition(format!("{failures} validation samples exceed their fitted constants")))
    });
    Ok(Outcome {
        status: if failures == 0 { "ok" } else { "validation-failures" },
        resolved: resolved_base(cfg, &params),
        results: json!({
            "samples": {"train": cfg.n_train, "validation": cfg.n_valid},
            "failures": failures,
            "hardy": hardy,
            "nonlinearity": nonlinear,
            "semigroup": semigroup,
        }),
        error,
    })
}

pub fn blowup_rate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let params = params(cfg)?;
    let family = cfg.data_or(DataFamily::Exact);
    let n_cells = (cfg.r_max / cfg.dr).round() as usize;
    let state = match family {
        DataFamily::Exact => {
            let psi = params.c0.powf(1.0 / (params.pf() - 1.0)) * params.t_blowup.powf(-params.shift());
            let psi_t = params.shift() * psi / params.t_blowup;
            RadialState::new(cfg.r_max, n_cells, 0.0, |r| (r * psi, r * psi_t))
        }
        DataFamily::Gaussian => {
            let a = cfg.amplitude.unwrap_or(4.0);
            RadialState::new(cfg.r_max, n_cells, 0.0, |r| (r * a * (-r * r).exp(), 0.0))
        }
        _ => return Err(cfg_err("data", "blowup-rate takes data = \"exact\" or \"gaussian\"")),
    };
    if n_cells < 8 {
        return Err(cfg_err("dr", "fewer than 8 radial cells"));
    }
    let settings = BlowupSettings { snapshot_every: cfg.snapshot_every, ..BlowupSettings::new(0.9 * state.dr, cfg.t_limit) };
    let fit = detect_blowup_rate(&state, &params, &settings).map_err(|e| match e {
        LabError::InvalidParameter { name: "dt", reason } => cfg_err("dr", reason),
        other => CliError::Lab(other),
    })?;
    write_csv(out, "blowup.csv", fit.history.iter().map(|&(t, s)| vec![Cell::F(t), Cell::F(s)]))?;
    if cfg.snapshot_every > 0 {
        write_csv(
            out,
            "snapshots.csv",
            fit.snapshots.iter().flat_map(|s| {
                (0..s.w.len()).map(move |i| vec![Cell::F(s.t), Cell::F(s.r(i)), Cell::F(s.w[i]), Cell::F(s.w_t[i])])
            }),
        )?;
    }
    let expected = -params.shift();
    let mut results = serde_json::to_value(&fit).expect("plain fields");
    let obj = results.as_object_mut().expect("object");
    obj.insert("expected_exponent".into(), json!(expected));
    obj.insert("relative_exponent_error".into(), json!(if fit.detected { ((fit.exponent - expected) / expected).abs() } else { f64::NAN }));
    if family == DataFamily::Exact {
        obj.insert("blowup_time_error".into(), json!(if fit.detected { (fit.t_est - params.t_blowup).abs() } else { f64::NAN }));
    }
    Ok(Outcome { status: if fit.detected { "ok" } else { "no-blowup-detected" }, resolved: resolved_base(cfg, &params), results, error: None })
}
