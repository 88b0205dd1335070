use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::config::{RunConfig, SCHEMA_VERSION};
use crate::ensemble::run::{DelayedChoiceReport, EnsembleResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub vpcollapse: String,
    pub schema_version: u32,
}

impl Versions {
    fn current() -> Self {
        Versions {
            vpcollapse: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub result: EnsembleResult,
    pub config: RunConfig,
    pub versions: Versions,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Write `histogram.csv`, `winners.csv`, `summary.json` and, for runs that
/// kept their weights, `trajectories/NNN.csv` into `dir`.
pub fn emit_results(result: &EnsembleResult, config: &RunConfig, dir: &Path) -> Result<()> {
    create_dir(dir)?;

    let mut hist = csv_writer(&dir.join("histogram.csv"))?;
    hist.write_record(["mode_index", "y_position_or_kappa", "count", "expected_probability"])?;
    for (n, ((count, p), y)) in result
        .histogram
        .iter()
        .zip(&result.expected)
        .zip(&result.mode_coordinates)
        .enumerate()
    {
        hist.serialize((n, y, count, p))?;
    }
    hist.flush().map_err(|e| Error::io(dir.join("histogram.csv"), e))?;

    let mut winners = csv_writer(&dir.join("winners.csv"))?;
    winners.write_record([
        "run_index",
        "seed",
        "winner",
        "collapsed",
        "final_max_weight",
        "objective_final",
    ])?;
    for r in &result.runs {
        winners.serialize((
            r.run_index,
            r.seed,
            r.winner,
            r.collapsed,
            r.final_max_weight,
            r.objective_final,
        ))?;
    }
    winners.flush().map_err(|e| Error::io(dir.join("winners.csv"), e))?;

    let with_weights: Vec<_> = result.runs.iter().filter(|r| r.weights.is_some()).collect();
    if !with_weights.is_empty() {
        let traj_dir = dir.join("trajectories");
        create_dir(&traj_dir)?;
        let grid = config.build()?.grid;
        for r in with_weights {
            let weights = r.weights.as_ref().expect("filtered on presence");
            let path = traj_dir.join(format!("{:03}.csv", r.run_index));
            let mut w = csv_writer(&path)?;
            let mut header = vec!["t".to_string()];
            header.extend((0..weights.len()).map(|n| format!("w{n}")));
            w.write_record(&header)?;
            for m in 0..grid.len() {
                let mut row = vec![grid.node(m).to_string()];
                row.extend(weights.iter().map(|series| series[m].to_string()));
                w.write_record(&row)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
    }

    let summary = Summary {
        result: result.clone(),
        config: config.clone(),
        versions: Versions::current(),
    };
    write_json(&dir.join("summary.json"), &summary)
}

#[derive(Serialize)]
struct Comparison<'a> {
    statistic: f64,
    dof: usize,
    p_value: f64,
    significance: f64,
    pass: bool,
    original_histogram: &'a [u64],
    delayed_histogram: &'a [u64],
}

/// Write both ensembles under `original/` and `delayed/` and the test
/// result to `comparison.json`.
pub fn emit_delayed_choice(
    report: &DelayedChoiceReport,
    original: &RunConfig,
    delayed: &RunConfig,
    dir: &Path,
) -> Result<()> {
    emit_results(&report.original, original, &dir.join("original"))?;
    emit_results(&report.delayed, delayed, &dir.join("delayed"))?;
    let comparison = Comparison {
        statistic: report.test.statistic,
        dof: report.test.dof,
        p_value: report.test.p_value,
        significance: report.significance,
        pass: report.pass,
        original_histogram: &report.original.histogram,
        delayed_histogram: &report.delayed.histogram,
    };
    write_json(&dir.join("comparison.json"), &comparison)
}
