use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::config::{DetectorSpec, Experiment, RunConfig};
use crate::error::{Error, Result};
use crate::initializer::sample_phases_with;
use crate::model::CoefficientTrajectory;
use crate::optimizer::{relax, relax_born_conditioned, OptimizationReport, OptimizerMode};
use crate::rng::{stream_rng, STREAM_WINNER};
use crate::stats::{pearson_chi_square, two_sample_chi_square, ChiSquareTest};

/// Outcome of one relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    /// Mode drawn from the Born weights, for conditioned runs.
    pub target: Option<usize>,
    pub winner: Option<usize>,
    pub collapsed: bool,
    pub final_max_weight: f64,
    pub objective_final: f64,
    pub iterations: usize,
    /// Weights `w_n(t_m)`, one row per mode, when trajectories are kept.
    #[serde(skip)]
    pub weights: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub winners: Vec<Option<usize>>,
    pub histogram: Vec<u64>,
    pub expected: Vec<f64>,
    /// x² position or transverse wavenumber of each mode.
    pub mode_coordinates: Vec<f64>,
    #[serde(with = "crate::stats::unbounded")]
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub collapse_rate: f64,
    pub runs: Vec<RunRecord>,
}

impl EnsembleResult {
    pub fn collapsed_runs(&self) -> u64 {
        self.histogram.iter().sum()
    }
}

/// Run seed `k` is `base_seed + k`.
pub fn run_seed(base_seed: u64, run_index: usize) -> u64 {
    base_seed.wrapping_add(run_index as u64)
}

/// Draw the conditioned outcome for a run from the Born weights.
pub fn draw_winner(expected: &[f64], seed: u64) -> Result<usize> {
    let dist = WeightedIndex::new(expected).map_err(|e| Error::Degenerate(format!("Born weights: {e}")))?;
    Ok(dist.sample(&mut stream_rng(seed, STREAM_WINNER)))
}

fn record(
    run_index: usize,
    seed: u64,
    target: Option<usize>,
    report: &OptimizationReport,
    keep: bool,
) -> Result<RunRecord> {
    let weights = if keep {
        let w = report.final_trajectory.weights()?;
        Some(w.rows().into_iter().map(|r| r.to_vec()).collect())
    } else {
        None
    };
    Ok(RunRecord {
        run_index,
        seed,
        target,
        winner: report.winner,
        collapsed: report.collapsed,
        final_max_weight: report.final_max_weight,
        objective_final: report.objective_final,
        iterations: report.iterations,
        weights,
    })
}

/// Relax one member of the ensemble.
pub fn run_one(experiment: &Experiment, config: &RunConfig, run_index: usize) -> Result<RunRecord> {
    let seed = run_seed(config.base_seed, run_index);
    let initial = sample_phases_with(&experiment.amplitudes, seed, config.phases);
    let traj = CoefficientTrajectory::constant(experiment.grid, &initial)?;
    let mut opt = experiment.optimizer;
    opt.perturbation_seed = seed;
    let (target, outcome) = match opt.mode {
        OptimizerMode::JointDescent => (
            None,
            relax(
                &traj,
                &opt,
                &experiment.params,
                &experiment.geometry,
                &experiment.detector,
            ),
        ),
        OptimizerMode::BornConditioned => {
            let target = draw_winner(&experiment.expected(), seed)?;
            let outcome = relax_born_conditioned(
                &traj,
                target,
                &opt,
                &experiment.params,
                &experiment.geometry,
                &experiment.detector,
            );
            (Some(target), outcome)
        }
    };
    match outcome {
        Ok(report) => record(run_index, seed, target, &report, config.emit_trajectories),
        Err(Error::NonConvergence(report)) => {
            let mut r = record(run_index, seed, target, &report, config.emit_trajectories)?;
            r.winner = None;
            r.collapsed = false;
            Ok(r)
        }
        Err(e) => Err(e),
    }
}

/// Relax `ensemble_size` independently seeded copies of the experiment
/// and compare the winners with the Born weights.
///
/// Runs that fail to collapse count against the collapse rate but stay out
/// of the histogram.
pub fn run_ensemble(config: &RunConfig) -> Result<EnsembleResult> {
    let experiment = config.build()?;
    let workers = config.resolved_workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        (0..config.ensemble_size)
            .into_par_iter()
            .map(|k| run_one(&experiment, config, k))
            .collect::<Result<_>>()
    })?;
    Ok(summarize(&experiment, runs))
}

pub(crate) fn summarize(experiment: &Experiment, runs: Vec<RunRecord>) -> EnsembleResult {
    let expected = experiment.expected();
    let mut histogram = vec![0u64; expected.len()];
    for r in &runs {
        if let (true, Some(w)) = (r.collapsed, r.winner) {
            histogram[w] += 1;
        }
    }
    let test = pearson_chi_square(&histogram, &expected);
    let collapsed = runs.iter().filter(|r| r.collapsed).count();
    let collapse_rate = if runs.is_empty() {
        0.0
    } else {
        collapsed as f64 / runs.len() as f64
    };
    EnsembleResult {
        winners: runs.iter().map(|r| r.winner).collect(),
        histogram,
        expected,
        mode_coordinates: experiment.detector.post().mode_coordinates(),
        chi_square: test.statistic,
        dof: test.dof,
        p_value: test.p_value,
        collapse_rate,
        runs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayedChoiceReport {
    pub original: EnsembleResult,
    pub delayed: EnsembleResult,
    pub test: ChiSquareTest,
    pub significance: f64,
    pub pass: bool,
}

/// The delayed config must match the original in everything except the
/// detector schedule, seeds and output settings, and its post-switch
/// arrangement must be the original detector.
pub fn check_comparable(original: &RunConfig, delayed: &RunConfig) -> Result<()> {
    let mismatch = |what: &str| Err(Error::ConfigMismatch(format!("{what} differs between the two configs")));
    if original.geometry != delayed.geometry {
        return mismatch("geometry");
    }
    if original.slits != delayed.slits {
        return mismatch("slits");
    }
    if original.params != delayed.params {
        return mismatch("params");
    }
    if original.grid != delayed.grid {
        return mismatch("grid");
    }
    if original.optimizer != delayed.optimizer {
        return mismatch("optimizer");
    }
    if original.phases != delayed.phases {
        return mismatch("phases");
    }
    if original.ensemble_size != delayed.ensemble_size {
        return mismatch("ensemble_size");
    }
    if let DetectorSpec::DelayedChoice { .. } = original.detector {
        return Err(Error::ConfigMismatch(
            "the original config must use a fixed detector".into(),
        ));
    }
    if original.detector.final_stage() != delayed.detector.final_stage() {
        return Err(Error::ConfigMismatch(format!(
            "outcome spaces differ: {:?} versus {:?} at the screen",
            original.detector.final_stage(),
            delayed.detector.final_stage()
        )));
    }
    Ok(())
}

/// Run both ensembles and test whether their winner histograms come from
/// the same distribution.
pub fn compare_delayed_choice(original: &RunConfig, delayed: &RunConfig) -> Result<DelayedChoiceReport> {
    check_comparable(original, delayed)?;
    let a = run_ensemble(original)?;
    let b = run_ensemble(delayed)?;
    let test = two_sample_chi_square(&a.histogram, &b.histogram);
    let significance = original.significance;
    Ok(DelayedChoiceReport {
        pass: test.p_value > significance,
        original: a,
        delayed: b,
        test,
        significance,
    })
}
