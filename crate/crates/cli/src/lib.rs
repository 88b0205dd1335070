//! Command-line front end: `simulate`, `delayed`, `oracle`, `validate` and
//! `schema`.
//!
//! Exit codes: 0 on success, 1 when a physics check fails, 2 for usage,
//! configuration, resource and I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use vpcollapse::ensemble::{
    compare_delayed_choice, emit_delayed_choice, emit_results, run_ensemble, EnsembleResult, RunConfig,
    RUN_CONFIG_SCHEMA,
};
use vpcollapse::optimizer::OptimizerMode;
use vpcollapse::oracle::{run_suite, NodeBudget, SuiteConfig};
use vpcollapse::validation::run_validation;
use vpcollapse::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PHYSICS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// The bundled configuration used when `simulate` gets no file.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

/// Smallest collapse rate a joint-descent ensemble must reach.
pub const MIN_COLLAPSE_RATE: f64 = 0.95;

#[derive(Debug, Parser)]
#[command(
    name = "vpcollapse",
    version,
    about = "Variational collapse simulator for the two-slit experiment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one ensemble and write its histogram, winners and summary.
    Simulate {
        /// Run configuration (JSON). Uses the bundled default when omitted.
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare an ensemble with its delayed-choice counterpart.
    Delayed {
        original: PathBuf,
        delayed: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Brute-force quadrature checks of the factorized integrals.
    Oracle {
        /// Largest node count allowed along any coordinate.
        #[arg(long, default_value_t = NodeBudget::default().per_coordinate)]
        budget: usize,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Self-checks of the action functional.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random instances per check.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the JSON schema of run configurations.
    Schema,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Replace `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace `params.epsilon`.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Replace `ensemble_size`.
    #[arg(long)]
    ensemble_size: Option<usize>,
    /// Replace `output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, mut config: RunConfig) -> vpcollapse::Result<RunConfig> {
        if let Some(s) = self.seed {
            config.base_seed = s;
        }
        if let Some(e) = self.epsilon {
            config.params.epsilon = e;
        }
        if let Some(n) = self.ensemble_size {
            config.ensemble_size = n;
        }
        if let Some(d) = &self.output_dir {
            config.output_dir = d.clone();
        }
        config.validate()?;
        config.params.build()?;
        Ok(config)
    }
}

/// Parse `args` (program name first), run the command and return the exit
/// code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let _ = write!(
                err,
                "{e}\nRun configurations follow this schema:\n{RUN_CONFIG_SCHEMA}\n"
            );
            return EXIT_USAGE;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Config(_)) {
                let _ = writeln!(err, "see `vpcollapse schema` for the configuration format");
            }
            EXIT_USAGE
        }
    }
}

fn load(path: Option<&Path>) -> vpcollapse::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => RunConfig::from_json_str(DEFAULT_CONFIG),
    }
}

fn write_report(path: Option<&Path>, json: &str, out: &mut dyn Write) -> vpcollapse::Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{json}\n")).map_err(|e| Error::io(p, e)),
        None => writeln!(out, "{json}").map_err(|e| Error::io("<stdout>", e)),
    }
}

/// Whether an ensemble passes its physics check: the Born chi-square for
/// conditioned runs, the collapse rate for joint descent.
pub fn ensemble_passes(result: &EnsembleResult, config: &RunConfig) -> bool {
    match config.optimizer.mode {
        OptimizerMode::BornConditioned => result.p_value > config.significance,
        OptimizerMode::JointDescent => result.collapse_rate >= MIN_COLLAPSE_RATE,
    }
}

fn summary_line(result: &EnsembleResult) -> String {
    format!(
        "runs {}  collapsed {}  collapse rate {:.4}  chi-square {:.3} (dof {})  p {:.4}",
        result.runs.len(),
        result.collapsed_runs(),
        result.collapse_rate,
        result.chi_square,
        result.dof,
        result.p_value
    )
}

fn execute(command: Command, out: &mut dyn Write) -> vpcollapse::Result<i32> {
    let say = |out: &mut dyn Write, line: String| writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e));
    match command {
        Command::Simulate { config, overrides } => {
            let config = overrides.apply(load(config.as_deref())?)?;
            let result = run_ensemble(&config)?;
            emit_results(&result, &config, &config.output_dir)?;
            say(out, summary_line(&result))?;
            say(out, format!("wrote {}", config.output_dir.display()))?;
            Ok(if ensemble_passes(&result, &config) {
                EXIT_OK
            } else {
                EXIT_PHYSICS
            })
        }
        Command::Delayed {
            original,
            delayed,
            overrides,
        } => {
            let original = overrides.apply(RunConfig::load(&original)?)?;
            let delayed = overrides.apply(RunConfig::load(&delayed)?)?;
            let report = compare_delayed_choice(&original, &delayed)?;
            emit_delayed_choice(&report, &original, &delayed, &original.output_dir)?;
            say(out, format!("original: {}", summary_line(&report.original)))?;
            say(out, format!("delayed:  {}", summary_line(&report.delayed)))?;
            say(
                out,
                format!(
                    "two-sample chi-square {:.3} (dof {})  p {:.4}  at significance {}",
                    report.test.statistic, report.test.dof, report.test.p_value, report.significance
                ),
            )?;
            Ok(if report.pass { EXIT_OK } else { EXIT_PHYSICS })
        }
        Command::Oracle { budget, output } => {
            let cfg = SuiteConfig {
                budget: NodeBudget { per_coordinate: budget },
                ..SuiteConfig::default()
            };
            let report = run_suite(&cfg)?;
            write_report(output.as_deref(), &report.to_json(), out)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_PHYSICS })
        }
        Command::Validate { seed, trials, output } => {
            let report = run_validation(seed, trials)?;
            write_report(output.as_deref(), &report.to_json(), out)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_PHYSICS })
        }
        Command::Schema => {
            say(out, RUN_CONFIG_SCHEMA.trim_end().to_string())?;
            Ok(EXIT_OK)
        }
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
