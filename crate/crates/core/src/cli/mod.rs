//! Batch front end behind the `moyal` binary.

pub mod config;
pub mod state;
pub mod verify;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{calibrate_b, calibrate_b_numerical, StateReport};
use crate::dynamics::{evolve, EvolutionPlan, Monitor};
use crate::error::{Error, Result};
use crate::genvalue::{build_operators, solve_spectrum};
use crate::io::{export_trajectory, read_psf, write_field, Format, PSF_VERSION};

pub use config::{Command, RunConfig};
pub use state::initial_state_builder;

pub const THREADS_ENV: &str = "MOYAL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "moyal", version, about = "Phase-space quantum mechanics on a grid")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config leaf, e.g. `--set params.b=0`.
    #[arg(long = "set", value_name = "DOTTED.KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Field file format.
    #[arg(long, value_parser = ["psf", "csv", "json"])]
    pub format: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Verb {
    /// Genvalue spectrum of the configured observable.
    Solve(CommonArgs),
    /// Time evolution of an initial pseudodensity.
    Evolve(CommonArgs),
    /// Run verification suites.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        suite: Vec<String>,
    },
    /// Fix b from the oscillator ground state.
    Calibrate(CommonArgs),
    /// Convert a `.psf` field file.
    Export {
        #[command(flatten)]
        common: CommonArgs,
        input: Option<PathBuf>,
    },
}

impl Verb {
    fn name(&self) -> &'static str {
        match self {
            Verb::Solve(_) => "solve",
            Verb::Evolve(_) => "evolve",
            Verb::Verify { .. } => "verify",
            Verb::Calibrate(_) => "calibrate",
            Verb::Export { .. } => "export",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Verb::Solve(c) | Verb::Evolve(c) | Verb::Calibrate(c) => c,
            Verb::Verify { common, .. } | Verb::Export { common, .. } => common,
        }
    }
}

/// Resolves the effective config for parsed arguments.
pub fn config_from_cli(cli: &Cli) -> Result<RunConfig> {
    let verb = cli.verb.name();
    let common = cli.verb.common();
    let doc = common.config.as_deref().map(RunConfig::load).transpose()?;
    let mut overrides = Vec::new();
    match &cli.verb {
        Verb::Verify { suite, .. } if !suite.is_empty() => {
            overrides.push(format!("command.verify.suites={}", serde_json::to_string(suite)?));
        }
        Verb::Export { input: Some(p), .. } => {
            overrides.push(format!("command.export.input={}", serde_json::to_string(p)?));
        }
        _ => {}
    }
    overrides.extend(common.set.iter().cloned());
    if let Some(out) = &common.out {
        overrides.push(format!("output.directory={}", serde_json::to_string(out)?));
    }
    if let Some(f) = &common.format {
        overrides.push(format!("output.formats=[\"{f}\"]"));
    }
    RunConfig::resolve(doc, &overrides, verb)
}

/// Applies `MOYAL_THREADS` to the dense linear algebra backend.
pub fn configure_threads() -> Result<usize> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(n)
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    psf_version: u32,
    command: &'static str,
    status: &'static str,
    threads: usize,
    config: &'a RunConfig,
    outputs: Vec<String>,
    summary: Value,
    /// The only entries that differ between identical runs.
    timings: BTreeMap<String, f64>,
}

struct Outcome {
    outputs: Vec<String>,
    summary: Value,
    timings: BTreeMap<String, f64>,
    /// A failure to report after the manifest is written.
    deferred: Option<Error>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            outputs: Vec::new(),
            summary: Value::Null,
            timings: BTreeMap::new(),
            deferred: None,
        }
    }

    fn file(&mut self, dir: &Path, path: &Path) {
        let rel = path.strip_prefix(dir).unwrap_or(path);
        self.outputs.push(rel.to_string_lossy().into_owned());
    }

    fn write_json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)?)?;
        self.file(dir, &path);
        Ok(())
    }
}

/// Executes one command, writing artifacts and `manifest.json` into the
/// output directory.
pub fn run(cfg: &RunConfig, threads: usize) -> Result<Value> {
    let start = Instant::now();
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir)?;
    let mut out = Outcome::new();
    match &cfg.command {
        Command::Solve(c) => run_solve(cfg, c, &dir, &mut out)?,
        Command::Evolve(c) => run_evolve(cfg, c, &dir, &mut out)?,
        Command::Verify(c) => run_verify(cfg, c, &dir, &mut out)?,
        Command::Calibrate(c) => run_calibrate(cfg, c, &dir, &mut out)?,
        Command::Export(c) => run_export(cfg, c, &dir, &mut out)?,
    }
    out.timings
        .insert("total_seconds".into(), start.elapsed().as_secs_f64());
    let manifest = Manifest {
        program: "moyal",
        version: env!("CARGO_PKG_VERSION"),
        psf_version: PSF_VERSION,
        command: cfg.command.verb(),
        status: if out.deferred.is_some() { "failed" } else { "ok" },
        threads,
        config: cfg,
        outputs: out.outputs,
        summary: out.summary,
        timings: out.timings,
    };
    let value = serde_json::to_value(&manifest)?;
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&value)?)?;
    match out.deferred {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

fn field_formats(cfg: &RunConfig) -> &[Format] {
    &cfg.output.formats
}

fn run_solve(cfg: &RunConfig, c: &config::SolveCommand, dir: &Path, out: &mut Outcome) -> Result<()> {
    let grid = cfg.grid.build(cfg.params.hbar)?;
    let obs = cfg.observable.build(&grid)?;
    let t = Instant::now();
    let ops = build_operators(&obs, &grid, &cfg.params)?;
    let res = solve_spectrum(&ops, c.n_states, &c.tolerances)?;
    if res.is_empty() {
        let reasons: Vec<String> = res
            .rejected
            .iter()
            .take(5)
            .map(|r| format!("{:.6} ({})", r.value, r.reason))
            .collect();
        return Err(Error::Accuracy(format!(
            "no admissible state resolved on this grid; lowest rejected clusters: {}",
            reasons.join("; ")
        )));
    }
    out.timings.insert("solve_seconds".into(), t.elapsed().as_secs_f64());
    let report = StateReport::for_family(&res.eigenfields)?;
    let spectrum = json!({
        "eigenvalues": res.eigenvalues,
        "residual_plus": res.residual_plus,
        "residual_minus": res.residual_minus,
        "null_dimension": res.null_dimension,
        "degenerate": (0..res.len()).map(|i| res.is_degenerate(i)).collect::<Vec<_>>(),
        "spectrum_kind": res.spectrum_kind,
        "rejected": res.rejected,
        "report": report,
    });
    out.write_json(dir, "spectrum.json", &spectrum)?;
    for (n, f) in res.eigenfields.iter().enumerate() {
        for &fmt in field_formats(cfg) {
            let path = write_field(f, dir, &format!("state_{n:03}"), fmt)?;
            out.file(dir, &path);
        }
    }
    out.summary = json!({
        "n_states": res.len(),
        "requested": c.n_states,
        "eigenvalues": res.eigenvalues,
        "spectrum_kind": res.spectrum_kind,
    });
    Ok(())
}

fn run_evolve(cfg: &RunConfig, c: &config::EvolveCommand, dir: &Path, out: &mut Outcome) -> Result<()> {
    let grid = cfg.grid.build(cfg.params.hbar)?;
    let h = cfg.observable.build(&grid)?;
    let p0 = initial_state_builder(&c.initial, &grid, &cfg.params, &h)?;
    let plan = EvolutionPlan::new(&h, &grid, &cfg.params, c.dt, c.n_steps, c.integrator)?
        .with_stride(c.stride)
        .with_tolerance(c.monitor_tolerance);
    let t = Instant::now();
    let traj = evolve(&p0, &plan)?;
    out.timings.insert("evolve_seconds".into(), t.elapsed().as_secs_f64());
    let sub = dir.join("trajectory");
    let manifest = export_trajectory(&traj, &sub, field_formats(cfg)[0])?;
    for f in &manifest.frames {
        out.file(dir, &sub.join(f));
    }
    out.file(dir, &sub.join("manifest.json"));
    let drifts: BTreeMap<&str, f64> = [Monitor::Norm, Monitor::Purity, Monitor::Energy]
        .iter()
        .filter_map(|m| traj.drift(*m).map(|d| (m.name(), d)))
        .collect();
    let report = StateReport::for_state(traj.last())?;
    out.write_json(
        dir,
        "evolution.json",
        &json!({
            "final_time": traj.times.last(),
            "frames": traj.frames.len(),
            "spectral_radius": plan.spectral_radius(),
            "drift": drifts,
            "final_state": report,
        }),
    )?;
    out.summary = json!({ "final_time": traj.times.last(), "drift": drifts });
    Ok(())
}

fn run_verify(cfg: &RunConfig, c: &config::VerifyCommand, dir: &Path, out: &mut Outcome) -> Result<()> {
    let mut suites = BTreeMap::new();
    let mut failed = Vec::new();
    for name in &c.suites {
        let t = Instant::now();
        let report = verify::run_suite(name, &cfg.params)?;
        out.timings.insert(format!("{name}_seconds"), t.elapsed().as_secs_f64());
        if !report.passed {
            failed.push(name.clone());
        }
        suites.insert(name.clone(), report);
    }
    let passed = failed.is_empty();
    out.write_json(dir, "verify.json", &json!({ "passed": passed, "suites": suites }))?;
    out.summary = json!({ "passed": passed, "failed": failed });
    if !passed {
        out.deferred = Some(Error::Accuracy(format!("verification failed: {}", failed.join(", "))));
    }
    Ok(())
}

fn run_calibrate(cfg: &RunConfig, c: &config::CalibrateCommand, dir: &Path, out: &mut Outcome) -> Result<()> {
    let grid = cfg.grid.build(cfg.params.hbar)?;
    let b = match c.method {
        config::CalibrationMethod::ClosedForm => calibrate_b(&grid, cfg.params.hbar, c.omega)?,
        config::CalibrationMethod::Numerical => calibrate_b_numerical(&grid, c.omega)?,
    };
    out.write_json(dir, "calibration.json", &json!({ "b": b }))?;
    out.summary = json!({ "b": b, "omega": c.omega, "method": c.method });
    Ok(())
}

fn run_export(cfg: &RunConfig, c: &config::ExportCommand, dir: &Path, out: &mut Outcome) -> Result<()> {
    let field = read_psf(&c.input)?;
    let stem = c
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "field".into());
    for &fmt in field_formats(cfg) {
        let path = write_field(&field, dir, &stem, fmt)?;
        out.file(dir, &path);
    }
    out.summary = json!({ "input": c.input, "domain": field.domain() });
    Ok(())
}

/// Machine-readable error document.
pub fn error_json(e: &Error) -> Value {
    json!({
        "error": {
            "kind": e.kind(),
            "message": e.to_string(),
            "exit_code": e.exit_code(),
        }
    })
}

/// Entry point for the binary: returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    let mut out_dir = cli.verb.common().out.clone();
    let result = configure_threads().and_then(|threads| {
        let cfg = config_from_cli(&cli)?;
        out_dir = Some(cfg.output.directory.clone());
        log::info!("running {} into {}", cfg.command.verb(), cfg.output.directory.display());
        run(&cfg, threads)
    });
    match result {
        Ok(_) => 0,
        Err(e) => {
            let doc = error_json(&e);
            eprintln!("{doc}");
            if let Some(dir) = out_dir.filter(|d| d.is_dir()) {
                // Best effort: the error may itself be an unwritable directory.
                let _ = fs::write(dir.join("error.json"), doc.to_string());
            }
            e.exit_code()
        }
    }
}
