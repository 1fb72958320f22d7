use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use geovc::document::{subspace_from_vectors, SystemDoc};
use geovc::integrate::{
    format_value, monitors_report, write_group_csv, write_trajectory_csv, MonitorStats,
    MonitorSummary,
};
use geovc::{
    check_transversal, AlgebraVector, ControlledSystem, Error, TransversalityReport,
    ValidationReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{RunConfig, Sweep};
use crate::{build_error, io_error, CliError};

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format_value(*v))
        .collect::<Vec<_>>()
        .join(", ")
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn emit<W: Write>(out: &mut W, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Config(format!("cannot write output: {e}")))
}

fn build(doc: &SystemDoc) -> Result<ControlledSystem, CliError> {
    Ok(doc.build().map_err(build_error)?.system().clone())
}

fn algebra_lines(report: &mut String, v: &ValidationReport) {
    let _ = writeln!(
        report,
        "antisymmetry = {} (max violation {})",
        verdict(v.antisymmetric()),
        format_value(v.max_antisymmetry_violation)
    );
    let _ = writeln!(
        report,
        "jacobi = {} (max violation {})",
        verdict(v.jacobi()),
        format_value(v.max_jacobi_violation)
    );
    let _ = writeln!(
        report,
        "metric_spd = {} (min eigenvalue {}, max asymmetry {})",
        verdict(v.metric_positive_definite()),
        format_value(v.min_metric_eigenvalue),
        format_value(v.max_metric_asymmetry)
    );
}

fn transversality_line(report: &mut String, t: &TransversalityReport) {
    let _ = writeln!(
        report,
        "transversality = {} (rank {} of {}: constraint {} + inputs {})",
        verdict(t.transversal),
        t.rank,
        t.expected,
        t.constraint_dim,
        t.input_dim
    );
}

/// Checks the configured system and writes `validation.txt` to `out_dir`.
///
/// Fails with [`CliError::Validation`] when any check fails; the report is
/// written either way.
pub fn validate<W: Write>(config: &RunConfig, out_dir: &Path, out: &mut W) -> Result<(), CliError> {
    let mut report = String::new();
    let mut passed = true;
    let _ = writeln!(report, "system = {}", config.system.name());

    if let SystemDoc::Custom(custom) = &config.system {
        let algebra = custom.algebra.to_algebra().map_err(build_error)?;
        let n = algebra.dim();
        let _ = writeln!(report, "dimension = {n}");
        let v = algebra.validate();
        passed &= v.passed();
        algebra_lines(&mut report, &v);
        let constraint = custom.constraint.to_constraint(n);
        let inputs = subspace_from_vectors(n, &custom.inputs);
        match (constraint, inputs) {
            (Ok(c), Ok(f)) => {
                let t = check_transversal(&c, &f);
                passed &= t.transversal;
                transversality_line(&mut report, &t);
            }
            (Err(e), _) | (_, Err(e)) => {
                passed = false;
                let _ = writeln!(report, "subspaces = FAIL ({e})");
            }
        }
    }

    match config.system.build() {
        Ok(resolved) => {
            let sys = resolved.system();
            if !matches!(config.system, SystemDoc::Custom(_)) {
                let _ = writeln!(report, "dimension = {}", sys.dim());
                algebra_lines(&mut report, &sys.algebra().validate());
                transversality_line(&mut report, &sys.transversality());
            }
            let _ = writeln!(report, "build = PASS");
        }
        Err(e @ Error::DimensionMismatch { .. }) => return Err(build_error(e)),
        Err(e) => {
            passed = false;
            let _ = writeln!(report, "build = FAIL ({e})");
        }
    }
    let _ = writeln!(report, "result = {}", verdict(passed));

    create_dir(out_dir)?;
    write_file(&out_dir.join("validation.txt"), &report)?;
    emit(out, &report)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} failed validation",
            config.system.name()
        )))
    }
}

/// Where the states for `control` come from.
#[derive(Debug, Clone, Default)]
pub struct ControlArgs {
    /// Explicit state; overrides the configured initial state.
    pub state: Option<Vec<f64>>,
    /// Draw `samples` random states on the constraint set from this seed.
    pub seed: Option<u64>,
    pub samples: usize,
}

fn random_on_constraint(sys: &ControlledSystem, rng: &mut ChaCha8Rng) -> AlgebraVector {
    let c = sys.constraint();
    let coefficients: Vec<f64> = (0..c.direction().dim())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let along = c
        .direction()
        .combine(&coefficients)
        .expect("coefficient count matches the direction dimension");
    c.offset() + &along
}

/// Prints the control `u(ξ)` and the constraint rate `A·(drift + F u)`.
pub fn control<W: Write>(
    config: &RunConfig,
    args: &ControlArgs,
    out: &mut W,
) -> Result<(), CliError> {
    let sys = build(&config.system)?;
    let n = sys.dim();
    let states = match (&args.state, args.seed) {
        (Some(xi), _) if xi.len() != n => {
            return Err(CliError::Config(format!(
                "--state has {} entries, the system dimension is {n}",
                xi.len()
            )))
        }
        (Some(xi), _) => vec![AlgebraVector::from(xi.clone())],
        (None, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..args.samples.max(1))
                .map(|_| random_on_constraint(&sys, &mut rng))
                .collect()
        }
        (None, None) => vec![config.initial_state(n)?],
    };
    let mut text = String::new();
    for (i, x) in states.iter().enumerate() {
        let u = sys.control_law(x).map_err(build_error)?;
        let field = sys.closed_loop_field(x).map_err(build_error)?;
        let rate = sys.constraint().covectors().apply(&field);
        if i > 0 {
            text.push('\n');
        }
        let _ = writeln!(text, "xi = [{}]", join(x.as_slice()));
        let _ = writeln!(text, "u = [{}]", join(u.as_slice()));
        let _ = writeln!(text, "residual = [{}]", join(rate.as_slice()));
    }
    emit(out, &text)
}

/// Result of a completed (possibly truncated) simulation.
#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub summary: MonitorSummary,
    pub final_time: f64,
    pub dir: PathBuf,
}

impl SimulateOutcome {
    /// The error this run maps to, if any.
    pub fn failure(&self) -> Option<CliError> {
        if let Some(h) = &self.summary.halted {
            return Some(CliError::Integration(format!(
                "halted at t = {}: {}",
                h.time, h.reason
            )));
        }
        let failed: Vec<&str> = self
            .summary
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        (!failed.is_empty()).then(|| {
            CliError::Validation(format!("monitor tolerance exceeded: {}", failed.join(", ")))
        })
    }
}

fn stats_line(text: &mut String, name: &str, s: &MonitorStats) {
    let _ = writeln!(
        text,
        "{name} = max {}, mean {}",
        format_value(s.max),
        format_value(s.mean)
    );
}

fn summary_text(name: &str, outcome: &SimulateOutcome) -> String {
    let s = &outcome.summary;
    let mut text = String::new();
    let _ = writeln!(text, "system = {name}");
    let _ = writeln!(text, "samples = {}", s.samples);
    let _ = writeln!(text, "final_time = {}", format_value(outcome.final_time));
    stats_line(&mut text, "energy", &s.energy);
    let _ = writeln!(
        text,
        "relative_energy_drift = {}",
        format_value(s.relative_energy_drift)
    );
    stats_line(&mut text, "constraint_residual", &s.constraint_residual);
    stats_line(&mut text, "ortho_drift", &s.orthogonality_drift);
    stats_line(&mut text, "control_norm", &s.control_norm);
    for c in &s.checks {
        let _ = writeln!(
            text,
            "check {} = {} ({} <= {})",
            c.name,
            verdict(c.passed),
            format_value(c.value),
            format_value(c.tolerance)
        );
    }
    match &s.halted {
        None => text.push_str("halted = no\n"),
        Some(h) => {
            let _ = writeln!(
                text,
                "halted = at t = {}: {}",
                format_value(h.time),
                h.reason
            );
        }
    }
    let _ = writeln!(text, "result = {}", verdict(s.passed()));
    text
}

fn run(config: &RunConfig, dir: &Path) -> Result<(SimulateOutcome, String), CliError> {
    let sys = build(&config.system)?;
    let x0 = config.initial_state(sys.dim())?;
    let g0 = config.initial_group(sys.group().matrix_size())?;
    let traj = geovc::simulate(
        &sys,
        config.dynamics(),
        &x0,
        &g0,
        &config.integrator_config(),
    )
    .map_err(|e| match e {
        Error::Integration { .. } => CliError::Integration(e.to_string()),
        Error::NotInGroup { .. } => CliError::Config(format!("initial.g: {e}")),
        other => build_error(other),
    })?;
    create_dir(dir)?;
    let mut csv = Vec::new();
    write_trajectory_csv(&traj, &mut csv).map_err(|e| io_error(dir, e))?;
    let path = dir.join("trajectory.csv");
    fs::write(&path, csv).map_err(|e| io_error(&path, e))?;
    let mut csv = Vec::new();
    write_group_csv(&traj, &mut csv).map_err(|e| io_error(dir, e))?;
    let path = dir.join("group.csv");
    fs::write(&path, csv).map_err(|e| io_error(&path, e))?;

    let summary = monitors_report(&traj, &config.monitor_tolerances()).map_err(build_error)?;
    let outcome = SimulateOutcome {
        summary,
        final_time: traj.times.last().copied().unwrap_or(0.0),
        dir: dir.to_path_buf(),
    };
    let text = summary_text(config.system.name(), &outcome);
    write_file(&dir.join("summary.txt"), &text)?;
    Ok((outcome, text))
}

/// Integrates the configured run and writes `trajectory.csv`, `group.csv`
/// and `summary.txt` to `out_dir`.
///
/// A truncated run still writes its partial output and then fails with
/// [`CliError::Integration`]; a monitor tolerance miss fails with
/// [`CliError::Validation`].
pub fn simulate<W: Write>(
    config: &RunConfig,
    out_dir: &Path,
    out: &mut W,
) -> Result<SimulateOutcome, CliError> {
    let (outcome, text) = run(config, out_dir)?;
    emit(out, &text)?;
    match outcome.failure() {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}

/// Runs one simulation per sweep value in parallel, each in its own
/// `run_NNN` directory, and writes an index to `sweep.csv`.
///
/// Fails with the highest exit code among the runs.
pub fn simulate_sweep<W: Write>(
    config: &RunConfig,
    sweep: &Sweep,
    out_dir: &Path,
    out: &mut W,
) -> Result<(), CliError> {
    let values = sweep.values();
    let mut variants = Vec::with_capacity(values.len());
    for v in &values {
        let system = config
            .system
            .with_parameter(&sweep.param, *v)
            .map_err(|e| CliError::Config(format!("--sweep: {e}")))?;
        variants.push(RunConfig {
            system,
            ..config.clone()
        });
    }
    create_dir(out_dir)?;
    let results: Vec<Result<SimulateOutcome, CliError>> = variants
        .par_iter()
        .enumerate()
        .map(|(i, c)| run(c, &out_dir.join(format!("run_{i:03}"))).map(|(o, _)| o))
        .collect();

    let mut index = String::from(
        "run,param,value,exit_code,max_residual,max_ortho_drift,relative_energy_drift\n",
    );
    let mut text = String::new();
    let mut worst: Option<CliError> = None;
    for (i, (v, r)) in values.iter().zip(results).enumerate() {
        let monitors = r.as_ref().ok().map(|o| o.summary.clone());
        let r = r.and_then(|o| o.failure().map_or(Ok(()), Err));
        let monitors = monitors.as_ref();
        let code = r.as_ref().err().map_or(0, CliError::exit_code);
        let field =
            |f: fn(&MonitorSummary) -> f64| monitors.map_or(String::new(), |s| format_value(f(s)));
        let _ = writeln!(
            index,
            "{i},{},{},{code},{},{},{}",
            sweep.param,
            format_value(*v),
            field(|s| s.constraint_residual.max),
            field(|s| s.orthogonality_drift.max),
            field(|s| s.relative_energy_drift),
        );
        match r {
            Ok(_) => {
                let _ = writeln!(text, "run_{i:03} {}={} PASS", sweep.param, format_value(*v));
            }
            Err(e) => {
                let _ = writeln!(text, "run_{i:03} {}={} {e}", sweep.param, format_value(*v));
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
            }
        }
    }
    write_file(&out_dir.join("sweep.csv"), &index)?;
    emit(out, &text)?;
    match worst {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
