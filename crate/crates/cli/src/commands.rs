//! Subcommand implementations. Exit-code discipline: 0 success, 2 for
//! configuration or input validation failures, 3 for solver failures during
//! a run, 4 for a failed check suite, 1 for unexpected I/O problems.

use crate::config::{self, MethodArg, PreparedRun, PreparedSystem};
use crate::csv;
use crate::report::{CheckReport, CompareSummary, MethodSummary, SuiteReport};
use crate::svg::{self, Series};
use std::fs;
use std::path::{Path, PathBuf};
use thermotop_core::checks;
use thermotop_core::diagnostics::{
    convergence_order, ConvergenceReport, DiagnosticsError, ReferenceSolution,
};
use thermotop_core::sim::{run, Method, RunOutput, SimError, SystemHandle};
use thermotop_core::systems::ReducedState;
use thiserror::Error;

/// Seed of the deterministic check suites; fixed so `check` output is
/// reproducible run to run.
pub const CHECK_SEED: u64 = 424242;

/// Sample count per randomized check suite.
pub const CHECK_SAMPLES: usize = 1000;

/// Step cap for the trajectory-level checks, keeping `check` at desk scale
/// even for configs that simulate long runs.
pub const CHECK_TRAJECTORY_STEPS: usize = 200;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("checks failed")]
    ChecksFailed,
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::ChecksFailed => 4,
            CliError::Io(_) => 1,
        }
    }
}

fn map_sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidOptions { .. } => CliError::Validation(e.to_string()),
        SimError::Solver { .. } => CliError::Solver(e.to_string()),
        SimError::Diagnostics(_) => CliError::Solver(e.to_string()),
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_prepared(config_path: &Path) -> Result<PreparedRun, CliError> {
    let text = read_to_string(config_path)?;
    let parsed = config::from_str(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    parsed
        .prepare()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn system_handle(sys: &PreparedSystem) -> SystemHandle<'_> {
    match sys {
        PreparedSystem::HeavyTop(s) => SystemHandle::HeavyTop(s),
        PreparedSystem::DoubleBracket(s) => SystemHandle::DoubleBracket(s),
    }
}

fn run_prepared(prepared: &PreparedRun, method: Method) -> Result<RunOutput, CliError> {
    let mut options = prepared.options;
    options.method = method;
    let handle = system_handle(&prepared.system);
    run(&prepared.initial, &prepared.rotation0, handle, &options).map_err(map_sim_error)
}

fn records_to_csv(out: &RunOutput) -> String {
    let mut buffer = Vec::new();
    csv::write_records(&mut buffer, &out.records).expect("writing to a Vec cannot fail");
    String::from_utf8(buffer).expect("CSV output is ASCII")
}

pub fn simulate(
    config_path: &Path,
    out: Option<&Path>,
    method: Option<MethodArg>,
) -> Result<(), CliError> {
    let prepared = load_prepared(config_path)?;
    let out_path: PathBuf = match (out, &prepared.output_csv) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => {
            return Err(CliError::Validation(
                "no output path: pass --out or set output.csv in the config".to_string(),
            ))
        }
    };
    let method = method.map(Method::from).unwrap_or(prepared.options.method);
    let output = run_prepared(&prepared, method)?;
    write_file(&out_path, &records_to_csv(&output))?;
    println!(
        "wrote {} records ({} finite) to {}",
        output.records.len(),
        output.summary.finite_records,
        out_path.display()
    );
    Ok(())
}

fn overlay(
    vi: &RunOutput,
    rk2: &RunOutput,
    column: impl Fn(&thermotop_core::diagnostics::TrajectoryRecord) -> Option<f64>,
) -> Vec<Series> {
    let pick = |out: &RunOutput, name: &str| Series {
        name: name.to_string(),
        points: out
            .records
            .iter()
            .filter_map(|r| column(r).map(|y| (r.t, y)))
            .collect(),
    };
    vec![pick(vi, "vi"), pick(rk2, "rk2")]
}

pub fn compare(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let prepared = load_prepared(config_path)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    let vi = run_prepared(&prepared, Method::Vi)?;
    let rk2 = run_prepared(&prepared, Method::Rk2)?;

    write_file(&out_dir.join("vi.csv"), &records_to_csv(&vi))?;
    write_file(&out_dir.join("rk2.csv"), &records_to_csv(&rk2))?;

    let summary = CompareSummary {
        vi: MethodSummary::new("vi", vi.records.len(), &vi.summary),
        rk2: MethodSummary::new("rk2", rk2.records.len(), &rk2.summary),
        vi_drift_smaller: vi.summary.energy_drift_slope.abs()
            < rk2.summary.energy_drift_slope.abs(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serialization cannot fail");
    write_file(&out_dir.join("summary.json"), &json)?;

    write_file(
        &out_dir.join("energy.svg"),
        &svg::render("t", &overlay(&vi, &rk2, |r| Some(r.e_total))),
    )?;
    write_file(
        &out_dir.join("entropy.svg"),
        &svg::render("t", &overlay(&vi, &rk2, |r| Some(r.entropy))),
    )?;
    if matches!(prepared.system, PreparedSystem::HeavyTop(_)) {
        write_file(
            &out_dir.join("com_height.svg"),
            &svg::render("t", &overlay(&vi, &rk2, |r| r.com.map(|c| c.z))),
        )?;
    }
    println!(
        "compared vi (slope {:e}) and rk2 (slope {:e}) in {}",
        summary.vi.energy_drift_slope,
        summary.rk2.energy_drift_slope,
        out_dir.display()
    );
    Ok(())
}

pub fn check(config_path: &Path, report_path: Option<&Path>) -> Result<(), CliError> {
    let prepared = load_prepared(config_path)?;

    let mut suites = vec![
        SuiteReport::new("algebra", &checks::algebra_suite(CHECK_SEED, CHECK_SAMPLES)),
        SuiteReport::new("rhs", &checks::rhs_suite(CHECK_SEED, CHECK_SAMPLES)),
    ];
    if let PreparedSystem::HeavyTop(sys) = &prepared.system {
        let mut options = prepared.options;
        options.steps = options.steps.min(CHECK_TRAJECTORY_STEPS);
        let results =
            checks::trajectory_suite(sys, &prepared.initial, &prepared.rotation0, &options)
                .map_err(map_sim_error)?;
        suites.push(SuiteReport::new("trajectory", &results));
    }

    let report = CheckReport::new(CHECK_SEED, suites);
    for suite in &report.suites {
        let status = if suite.passed { "PASS" } else { "FAIL" };
        println!("{}: {} ({} checks)", suite.name, status, suite.checks.len());
        for check in suite.checks.iter().filter(|c| !c.passed) {
            println!(
                "  FAIL {}: worst {:e} exceeds bound {:e}",
                check.name, check.worst, check.bound
            );
        }
    }
    if let Some(path) = report_path {
        let json = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
        write_file(path, &json)?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}

fn parse_h_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("bad step size `{s}` in h-list")))
        })
        .collect()
}

fn map_diagnostics_error(e: DiagnosticsError) -> CliError {
    match e {
        DiagnosticsError::IntegrationFailed { .. } => CliError::Solver(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

/// Runs one convergence study: integrate to `t_final` with each step size
/// using `method`, compare final states against a much finer fourth-order
/// reference.
fn study(
    prepared: &PreparedRun,
    system: &PreparedSystem,
    method: Method,
    t_final: f64,
    h_list: &[f64],
) -> Result<ConvergenceReport, CliError> {
    let integrate_with = |h: f64, method: Method| -> Result<ReducedState, String> {
        let steps = ((t_final / h).round() as usize).max(1);
        let mut options = prepared.options;
        options.h = h;
        options.steps = steps;
        options.method = method;
        let out = run(
            &prepared.initial,
            &prepared.rotation0,
            system_handle(system),
            &options,
        )
        .map_err(|e| e.to_string())?;
        let last = out
            .records
            .last()
            .expect("run produces at least one record");
        Ok(ReducedState::new(last.omega, last.gamma, last.entropy))
    };

    let h_min = h_list.iter().copied().fold(f64::INFINITY, f64::min);
    let h_ref = h_min / 20.0;
    let reference = ReferenceSolution {
        state: integrate_with(h_ref, Method::Rk4).map_err(CliError::Solver)?,
        h: h_ref,
    };
    convergence_order(
        h_list,
        |h| integrate_with(h, method),
        &reference,
        system.heat_capacity(),
    )
    .map_err(map_diagnostics_error)
}

pub fn format_convergence_table(name: &str, report: &ConvergenceReport) -> String {
    let mut out = format!("study: {name}\n");
    out.push_str("      h           error   local-order\n");
    for (i, (h, e)) in report.errors.iter().enumerate() {
        let local = if i == 0 {
            String::new()
        } else {
            format!("{:12.3}", report.local_orders[i - 1])
        };
        out.push_str(&format!("{h:>8} {e:>15.6e}{local}\n"));
    }
    out.push_str(&format!("fitted order: {:.3}\n", report.order));
    out
}

pub fn convergence(config_path: &Path, h_list: Option<&str>) -> Result<(), CliError> {
    let prepared = load_prepared(config_path)?;
    let h_list = match h_list {
        Some(text) => parse_h_list(text)?,
        None => vec![0.02, 0.01, 0.005],
    };
    let t_final = prepared.options.h * prepared.options.steps as f64;
    let method = prepared.options.method;

    let conservative = match &prepared.system {
        PreparedSystem::HeavyTop(sys) => PreparedSystem::HeavyTop(sys.with_friction_coeff(0.0)),
        PreparedSystem::DoubleBracket(sys) => {
            let mut params = *sys.params();
            params.lambda = thermotop_core::systems::Lambda::Constant(0.0);
            PreparedSystem::DoubleBracket(
                thermotop_core::systems::DoubleBracketSystem::new(params)
                    .expect("already-validated inertia stays valid"),
            )
        }
    };

    for (name, system) in [
        (
            "conservative (no friction, no entropy production)",
            &conservative,
        ),
        ("full system", &prepared.system),
    ] {
        let report = study(&prepared, system, method, t_final, &h_list)?;
        print!("{}", format_convergence_table(name, &report));
    }
    Ok(())
}

pub fn plot(input: &Path, fields: &str, out: &Path) -> Result<(), CliError> {
    let text = read_to_string(input)?;
    let table = csv::parse(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    let x_name = if table.columns.iter().any(|c| c == "t") {
        "t".to_string()
    } else {
        table
            .columns
            .first()
            .cloned()
            .ok_or_else(|| CliError::Validation("CSV has no columns".to_string()))?
    };
    let xs = table
        .column(&x_name)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let mut series = Vec::new();
    for field in fields.split(',').map(str::trim).filter(|f| !f.is_empty()) {
        let ys = table
            .column(field)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let points = xs
            .iter()
            .zip(&ys)
            .filter_map(|(&x, &y)| Some((x?, y?)))
            .collect();
        series.push(Series {
            name: field.to_string(),
            points,
        });
    }
    write_file(out, &svg::render(&x_name, &series))?;
    println!("wrote {} series to {}", series.len(), out.display());
    Ok(())
}
