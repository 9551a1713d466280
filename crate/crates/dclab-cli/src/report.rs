//! Merges run records into comparison tables and plot-ready data files.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde_json::Value;

use dclab_core::critical::{lower_bound_lambda, tix_constant};

use crate::record::{fmt17, write_atomic, write_csv};
use crate::{Cli, CliError};

pub fn run_report(cli: &Cli, records: &[PathBuf], format: &str) -> Result<(), CliError> {
    if records.is_empty() {
        return Err(CliError::validation(anyhow!(
            "report needs at least one record.json path"
        )));
    }
    if format != "csv" {
        return Err(CliError::validation(anyhow!(
            "unsupported report format {format:?}"
        )));
    }
    let loaded: Vec<Value> = records
        .iter()
        .map(|p| load_record(p).map_err(CliError::validation))
        .collect::<Result<_, _>>()?;

    let kinds: Vec<&str> = loaded
        .iter()
        .map(|r| r["results"]["kind"].as_str().unwrap_or(""))
        .collect();
    std::fs::create_dir_all(&cli.out)?;

    if kinds.iter().all(|k| *k == "scan") {
        merge_scans(&cli.out, &loaded).map_err(CliError::validation)?;
    } else if kinds.iter().all(|k| *k == "solve" || *k == "radial") {
        merge_sweep(&cli.out, &loaded).map_err(CliError::validation)?;
    } else {
        return Err(CliError::validation(anyhow!(
            "incompatible record kinds {kinds:?}: mix of scan and solve records"
        )));
    }
    println!("report written to {}", cli.out.display());
    Ok(())
}

fn load_record(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading record {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("results").is_none() {
        return Err(anyhow!(
            "{} is not a run record (no results)",
            path.display()
        ));
    }
    Ok(value)
}

/// Scan records merge into one table sorted by separation.
fn merge_scans(out: &Path, records: &[Value]) -> anyhow::Result<()> {
    let mut rows: Vec<(f64, f64, f64, String)> = Vec::new();
    for r in records {
        let table = &r["results"]["table"];
        for row in table["rows"].as_array().into_iter().flatten() {
            rows.push((
                row["d"].as_f64().unwrap_or(f64::NAN),
                row["lambda1"].as_f64().unwrap_or(f64::NAN),
                row["residual"].as_f64().unwrap_or(f64::NAN),
                row["status"].as_str().unwrap_or("").to_string(),
            ));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(d, l, res, s)| vec![fmt17(*d), fmt17(*l), fmt17(*res), s.clone()])
        .collect();
    write_csv(
        &out.join("report.csv"),
        &["d", "lambda1", "residual", "status"],
        &csv_rows,
    )?;

    let dat: String = rows
        .iter()
        .filter(|(_, l, _, s)| s == "ok" && l.is_finite())
        .map(|(d, l, _, _)| format!("{} {}\n", fmt17(*d), fmt17(*l)))
        .collect();
    write_atomic(&out.join("lambda_vs_d.dat"), dat.as_bytes())?;
    Ok(())
}

/// Eigenvalue records merge into a coupling sweep against the point-charge
/// reference curve and the resolvent lower bound.
fn merge_sweep(out: &Path, records: &[Value]) -> anyhow::Result<()> {
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for r in records {
        let res = &r["results"];
        let mass = res["mass"].as_f64().unwrap_or(f64::NAN);
        let lambda = res["lambda1"].as_f64().unwrap_or(f64::NAN);
        rows.push((mass, lambda));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tix = tix_constant();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(nu, l)| {
            let conjecture = (1.0 - nu * nu).max(0.0).sqrt();
            let bound = if *nu < tix {
                lower_bound_lambda(*nu, tix).map(fmt17).unwrap_or_default()
            } else {
                String::new()
            };
            vec![fmt17(*nu), fmt17(*l), fmt17(conjecture), bound]
        })
        .collect();
    write_csv(
        &out.join("report.csv"),
        &["nu", "lambda1", "conjecture_ref", "bound"],
        &csv_rows,
    )?;

    let dat: String = rows
        .iter()
        .filter(|(_, l)| l.is_finite())
        .map(|(nu, l)| format!("{} {}\n", fmt17(*nu), fmt17(*l)))
        .collect();
    write_atomic(&out.join("lambda_vs_nu.dat"), dat.as_bytes())?;
    let reference: String = rows
        .iter()
        .map(|(nu, _)| {
            format!(
                "{} {}\n",
                fmt17(*nu),
                fmt17((1.0 - nu * nu).max(0.0).sqrt())
            )
        })
        .collect();
    write_atomic(&out.join("conjecture_ref.dat"), reference.as_bytes())?;
    Ok(())
}
