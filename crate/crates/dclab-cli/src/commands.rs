//! Command execution: builds the solver configuration from the CLI,
//! runs the requested computation and persists the run record.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde_json::{json, Value};

use dclab_core::basis::EvenTemperedParams;
use dclab_core::critical::{
    lower_bound_lambda, nu0_of, nu1_of, tix_constant, CriticalReport, SolverBackend,
};
use dclab_core::measure::{ChargeDistribution, MeasureSpec};
use dclab_core::optim::{minimize_lambda1, scan_two_delta, OptimizerSettings};
use dclab_core::quad::GridParams;
use dclab_core::radial_solver::{solve_radial, RadialProblem, RadialSolverConfig};
use dclab_core::solver3d::{solve_lambda1, SolverConfig};

use crate::record::{
    create_run_dir, fmt17, utc_timestamp, write_csv, write_log, write_record, RunRecord,
    RECORD_VERSION,
};
use crate::report;
use crate::{Cli, CliError, Command};

pub fn run(cli: &Cli) -> Result<Option<PathBuf>, CliError> {
    match &cli.command {
        Command::Report { records, format } => {
            report::run_report(cli, records, format)?;
            Ok(None)
        }
        _ => run_compute(cli).map(Some),
    }
}

fn solver_config(cli: &Cli) -> Result<SolverConfig, CliError> {
    if cli.basis_n == 0 {
        return Err(CliError::validation(anyhow!(
            "--basis-n must be at least 1"
        )));
    }
    if !(cli.tol > 0.0) {
        return Err(CliError::validation(anyhow!("--tol must be positive")));
    }
    Ok(SolverConfig {
        basis: EvenTemperedParams {
            count: cli.basis_n,
            ..Default::default()
        },
        grid: GridParams::level(cli.grid_level)?,
        lambda_tol: cli.tol,
        ..Default::default()
    })
}

fn load_measure(cli: &Cli) -> Result<(ChargeDistribution, Value), CliError> {
    let path = cli
        .measure
        .as_ref()
        .ok_or_else(|| CliError::validation(anyhow!("this command needs --measure PATH")))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading measure file {}", path.display()))
        .map_err(CliError::validation)?;
    let spec = MeasureSpec::from_json(&text)?;
    let mu = spec.build()?;
    let snapshot: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
    Ok((mu, snapshot))
}

fn require_nu(cli: &Cli) -> Result<f64, CliError> {
    let nu = cli
        .nu
        .ok_or_else(|| CliError::validation(anyhow!("this command needs --nu F")))?;
    if !nu.is_finite() || nu < 0.0 {
        return Err(CliError::validation(anyhow!(
            "--nu must be a finite non-negative number"
        )));
    }
    Ok(nu)
}

fn run_compute(cli: &Cli) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let solver = solver_config(cli)?;
    let mut log: Vec<String> = vec![format!("dclab {RECORD_VERSION} at {}", utc_timestamp())];
    let mut csv_tables: Vec<(String, Vec<&'static str>, Vec<Vec<String>>)> = Vec::new();
    let mut extra_json: Vec<(String, Value)> = Vec::new();

    let mut config = json!({
        "nu": cli.nu,
        "k": cli.k,
        "seed": cli.seed,
        "basis": solver.basis,
        "grid": solver.grid,
        "lambda_tol": solver.lambda_tol,
        "grid_level": cli.grid_level,
    });

    let (command_name, results): (&str, Value) = match &cli.command {
        Command::Solve => {
            let (mu, snapshot) = load_measure(cli)?;
            config["measure"] = snapshot;
            let res = solve_lambda1(&mu, &solver)?;
            log.push(format!(
                "solve: lambda1 = {}, bound state = {}",
                fmt17(res.lambda1),
                res.bound_state_found
            ));
            extra_json.push((
                "diagnostics.json".into(),
                serde_json::to_value(&res.diagnostics).unwrap_or(Value::Null),
            ));
            (
                "solve",
                json!({
                    "kind": "solve",
                    "lambda1": res.lambda1,
                    "bound_state_found": res.bound_state_found,
                    "residual": res.residual,
                    "mass": mu.total_mass(),
                    "nu_max": mu.nu_max(),
                    "diagnostics": res.diagnostics,
                }),
            )
        }
        Command::Radial => {
            let (mu, snapshot) = load_measure(cli)?;
            config["measure"] = snapshot;
            let radial_cfg = RadialSolverConfig {
                lambda_tol: cli.tol,
                ..Default::default()
            };
            let res = solve_radial(&RadialProblem {
                measure: mu.clone(),
                config: radial_cfg,
            })?;
            log.push(format!(
                "radial: lambda1 = {}, bound state = {}",
                fmt17(res.lambda1),
                res.bound_state_found
            ));
            (
                "radial",
                json!({
                    "kind": "radial",
                    "lambda1": res.lambda1,
                    "bound_state_found": res.bound_state_found,
                    "residual": res.residual,
                    "mass": mu.total_mass(),
                    "singular_exponent": res.singular_exponent,
                    "evaluations": res.evaluations,
                }),
            )
        }
        Command::Scan { split, distances } => {
            let nu = require_nu(cli)?;
            config["split"] = json!(split);
            config["distances"] = json!(distances);
            let table = scan_two_delta(nu, *split, distances, &solver)?;
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt17(r.d),
                        fmt17(r.lambda1),
                        fmt17(r.residual),
                        r.status.clone(),
                    ]
                })
                .collect();
            csv_tables.push((
                "scan.csv".into(),
                vec!["d", "lambda1", "residual", "status"],
                rows,
            ));
            log.push(format!("scan: {} rows", table.rows.len()));
            ("scan", json!({ "kind": "scan", "table": table }))
        }
        Command::Optimize { restarts, budget } => {
            let nu = require_nu(cli)?;
            config["restarts"] = json!(restarts);
            config["budget"] = json!(budget);
            let settings = OptimizerSettings {
                restarts: *restarts,
                evals_per_restart: *budget,
                seed: cli.seed,
                solver,
                ..Default::default()
            };
            let out = minimize_lambda1(nu, cli.k, &settings)?;
            log.push(format!(
                "optimize: best lambda1 = {} after {} evaluations",
                fmt17(out.lambda1),
                out.trace.total_evaluations
            ));
            (
                "optimize",
                json!({
                    "kind": "optimize",
                    "lambda1": out.lambda1,
                    "best": out.best,
                    "trace": out.trace,
                }),
            )
        }
        Command::Critical => {
            let (mu, snapshot) = load_measure(cli)?;
            config["measure"] = snapshot;
            let backend = if mu.is_radial() {
                SolverBackend::Radial(RadialSolverConfig::default())
            } else {
                SolverBackend::ThreeD(solver)
            };
            let nu0 = nu0_of(&mu, &backend)?;
            let basis = dclab_core::basis::build_basis(&mu, &solver.basis)?;
            let grid = dclab_core::quad::build_multicenter_grid(&mu.centers(), &solver.grid)?;
            let nu1 = nu1_of(&mu, &basis, &grid)?;
            let report = CriticalReport::new(mu.total_mass(), Some(nu0), nu1);
            log.push(format!(
                "critical: nu0 = {:?} ({:?}), nu1 = {}",
                report.nu0,
                report.nu0_provenance,
                fmt17(report.nu1_estimate)
            ));
            ("critical", json!({ "kind": "critical", "report": report }))
        }
        Command::Bounds => {
            let nu = require_nu(cli)?;
            let tix = tix_constant();
            let bound = lower_bound_lambda(nu, tix)?;
            log.push(format!("bounds: lambda1 >= {}", fmt17(bound)));
            (
                "bounds",
                json!({
                    "kind": "bounds",
                    "nu": nu,
                    "lambda1_lower_bound": bound,
                    "tix_constant": tix,
                    "conjecture_reference": (1.0 - nu * nu).max(0.0).sqrt(),
                }),
            )
        }
        Command::Report { .. } => unreachable!("handled by run()"),
    };

    let dir = create_run_dir(&cli.out, command_name)?;
    for (name, header, rows) in &csv_tables {
        write_csv(&dir.join(name), header, rows).map_err(CliError::validation)?;
    }
    for (name, value) in &extra_json {
        let text = serde_json::to_string_pretty(value).unwrap_or_default();
        crate::record::write_atomic(&dir.join(name), text.as_bytes())?;
    }
    let record = RunRecord {
        version: RECORD_VERSION.to_string(),
        command: command_name.to_string(),
        seed: cli.seed,
        config,
        results,
        timings_ms: json!({ "total": started.elapsed().as_millis() as u64 }),
        timestamp: utc_timestamp(),
    };
    write_record(&dir, &record)?;
    log.push(format!("total {} ms", started.elapsed().as_millis()));
    write_log(&dir, &log)?;
    Ok(dir)
}
