//! `blowup-lab <subcommand> --config <path> [--out <dir>] [--jobs <n>]`

mod commands;
mod config;
mod output;

use clap::{Parser, ValueEnum};
use commands::{CliError, Outcome};
use config::RunConfig;
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Spectrum of L, analytic matches and the gauge mode with its dual.
    Spectrum,
    /// Solve the modulated Duhamel fixed point for one datum.
    FixedPoint,
    /// Compare the similarity solution with a physical-space wave solver.
    CrossValidate,
    /// Linear semigroup evolution and fitted decay rates.
    EvolveLinear,
    /// Fitted constants for the Hardy, nonlinearity and semigroup bounds.
    Hardy,
    /// Physical blowup run with a fitted rate exponent.
    BlowupRate,
    /// Check the artifacts in --out against their schemas.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::FixedPoint => "fixed-point",
            Command::CrossValidate => "cross-validate",
            Command::EvolveLinear => "evolve-linear",
            Command::Hardy => "hardy",
            Command::BlowupRate => "blowup-rate",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "blowup-lab", version, about = "Numerical lab for self-similar blowup stability of psi_tt - Laplace psi = psi^p")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat JSON config; repeat to run several configs, each into <out>/<file stem>.
    #[arg(long = "config", value_name = "PATH")]
    configs: Vec<PathBuf>,
    /// Output directory (default: the config's out_dir, else "out").
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of configs run concurrently.
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

fn run_command(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    match cmd {
        Command::Spectrum => commands::spectrum(cfg, out),
        Command::FixedPoint => commands::fixed_point(cfg, out),
        Command::CrossValidate => commands::cross_validate(cfg, out),
        Command::EvolveLinear => commands::evolve_linear_cmd(cfg, out),
        Command::Hardy => commands::hardy(cfg, out),
        Command::BlowupRate => commands::blowup_rate(cfg, out),
        Command::Validate => unreachable!("validate has no config"),
    }
}

fn report(cmd: Command, cfg: &RunConfig, status: &str, resolved: Map<String, Value>, results: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(cmd.name()));
    m.insert("status".into(), json!(status));
    m.insert("inputs".into(), serde_json::to_value(cfg).expect("config serializes"));
    m.insert("resolved".into(), Value::Object(resolved));
    m.insert("results".into(), results);
    m.insert("timestamp".into(), json!(output::timestamp()));
    m
}

/// Runs one config into `out`. The report is written for every run that got past
/// config parsing, including math and resolution failures.
fn run_one(cmd: Command, config: &Path, out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let cfg = RunConfig::from_path(config)?;
    let out = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    match run_command(cmd, &cfg, &out) {
        Ok(o) => {
            output::write_report(&out, &report(cmd, &cfg, o.status, o.resolved, o.results))?;
            o.error.map_or(Ok(out), Err)
        }
        Err(e @ CliError::Lab(_)) => {
            let status = match e.exit_code() {
                4 => "under-resolved",
                2 => "config-error",
                _ => "math-error",
            };
            output::write_report(&out, &report(cmd, &cfg, status, Map::new(), json!({"error": e.to_string()})))?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn validate(out: &Path) -> Result<(), CliError> {
    // a --jobs layout has one run per subdirectory
    let mut dirs = vec![out.to_path_buf()];
    if !out.join("report.json").exists() {
        let mut subs: Vec<PathBuf> = std::fs::read_dir(out)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("report.json").exists())
            .collect();
        subs.sort();
        if !subs.is_empty() {
            dirs = subs;
        }
    }
    let mut problems = Vec::new();
    for d in &dirs {
        let (checked, p) = output::validate_dir(d)?;
        println!("{}: checked {}", d.display(), checked.join(", "));
        problems.extend(p.into_iter().map(|s| format!("{}: {s}", d.display())));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(problems))
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("BLOWUP_LAB_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring BLOWUP_LAB_THREADS=\"{v}\" (expected a positive integer)"),
        }
    }
}

fn fail(context: &str, e: &CliError) -> i32 {
    eprintln!("error{context}: {e}");
    e.exit_code()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let code = if cli.command == Command::Validate {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        match validate(&out) {
            Ok(()) => {
                println!("ok");
                0
            }
            Err(e) => fail("", &e),
        }
    } else {
        match cli.configs.len() {
            0 => {
                eprintln!("error: {} needs --config <path>", cli.command.name());
                2
            }
            1 => match run_one(cli.command, &cli.configs[0], cli.out.clone()) {
                Ok(dir) => {
                    println!("wrote {}", dir.display());
                    0
                }
                Err(e) => fail("", &e),
            },
            _ => run_many(&cli),
        }
    };
    ExitCode::from(code as u8)
}

/// Several configs, `--jobs` at a time, each into <out>/<stem>. Returns the first
/// nonzero exit code in config order.
fn run_many(cli: &Cli) -> i32 {
    let base = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut stems: Vec<String> = Vec::new();
    for c in &cli.configs {
        let stem = c.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        if stem.is_empty() || stems.contains(&stem) {
            eprintln!("error: config file stems must be distinct and nonempty ({})", c.display());
            return 2;
        }
        stems.push(stem);
    }
    let next = AtomicUsize::new(0);
    let codes = Mutex::new(vec![0; cli.configs.len()]);
    std::thread::scope(|s| {
        for _ in 0..cli.jobs.clamp(1, cli.configs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cli.configs.len() {
                    break;
                }
                let code = match run_one(cli.command, &cli.configs[i], Some(base.join(&stems[i]))) {
                    Ok(dir) => {
                        println!("wrote {}", dir.display());
                        0
                    }
                    Err(e) => fail(&format!(" [{}]", cli.configs[i].display()), &e),
                };
                codes.lock().expect("no panics while held")[i] = code;
            });
        }
    });
    let codes = codes.into_inner().expect("workers joined");
    codes.into_iter().find(|&c| c != 0).unwrap_or(0)
}
