mod common;

use approx::assert_relative_eq;
use ndarray::Array2;
use num_complex::Complex64;
use vpcollapse::functional::objective;
use vpcollapse::model::{CoefficientTrajectory, FunctionalParams};
use vpcollapse::optimizer::{
    argmax, relax, relax_born_conditioned, OptimizationReport, OptimizerConfig, OptimizerMode,
};
use vpcollapse::Error;

use common::*;

fn born() -> OptimizerConfig {
    OptimizerConfig {
        mode: OptimizerMode::BornConditioned,
        ..OptimizerConfig::default()
    }
}

fn check_invariants(initial: &CoefficientTrajectory, report: &OptimizationReport) {
    let fin = report.final_trajectory.coefficients();
    let init = initial.coefficients();
    for n in 0..initial.n_modes() {
        assert_eq!(fin[[n, 0]].re.to_bits(), init[[n, 0]].re.to_bits());
        assert_eq!(fin[[n, 0]].im.to_bits(), init[[n, 0]].im.to_bits());
    }
    for lambda in report.final_trajectory.norms().iter().skip(1) {
        assert!((lambda - 1.0).abs() < 1e-10);
    }
    let mut bounds = report.stage_starts.clone();
    bounds.push(report.objective_trace.len());
    for stage in bounds.windows(2) {
        for pair in report.objective_trace[stage[0]..stage[1]].windows(2) {
            assert!(pair[1] <= pair[0], "objective rose from {} to {}", pair[0], pair[1]);
        }
    }
    let w = report.final_weights();
    if let Some(winner) = report.winner {
        assert_eq!(winner, argmax(&w));
    }
    assert_eq!(report.collapsed, w[argmax(&w)] >= 0.99);
}

#[test]
fn one_hot_start_is_already_stationary() {
    let (g, det) = small_screen(4, 1.0);
    let traj = CoefficientTrajectory::constant(grid(32), &real(&[0.0, 0.0, 1.0, 0.0])).unwrap();
    let params = FunctionalParams::with_epsilon(1.0);
    let report = relax(&traj, &OptimizerConfig::default(), &params, &g, &det).unwrap();
    assert_eq!(report.iterations, 0);
    assert!(report.collapsed);
    assert_eq!(report.winner, Some(2));
    check_invariants(&traj, &report);
}

#[test]
fn two_separated_modes_collapse_below_every_constant_split() {
    let (g, det) = small_screen(2, 2.0);
    let params = FunctionalParams::with_epsilon(5.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let start = [Complex64::new(h, 0.0), Complex64::new(0.0, h)];
    let traj = CoefficientTrajectory::constant(grid(64), &start).unwrap();
    let report = relax(&traj, &OptimizerConfig::default(), &params, &g, &det).unwrap();
    assert!(report.collapsed, "max weight {}", report.final_max_weight);
    check_invariants(&traj, &report);

    // Trajectories that jump to a fixed split right after t_i and hold it.
    let nodes = traj.grid().len();
    for i in 0..=100 {
        let w = i as f64 / 100.0;
        let mut c = Array2::from_elem((2, nodes), Complex64::new(0.0, 0.0));
        for m in 0..nodes {
            if m == 0 {
                c[[0, 0]] = start[0];
                c[[1, 0]] = start[1];
            } else {
                c[[0, m]] = Complex64::new(w.sqrt(), 0.0);
                c[[1, m]] = Complex64::new(0.0, (1.0 - w).sqrt());
            }
        }
        let other = CoefficientTrajectory::new(*traj.grid(), c).unwrap();
        let o = objective(&other, &params, &g, &det).unwrap();
        assert!(
            report.objective_final <= o,
            "split {w}: {} > {o}",
            report.objective_final
        );
    }
}

#[test]
fn without_the_uncertainty_term_nothing_moves() {
    let (g, det) = small_screen(3, 1.0);
    let start = real(&[0.6, 0.0, 0.8]);
    let traj = CoefficientTrajectory::constant(grid(32), &start).unwrap();
    let params = FunctionalParams::with_epsilon(0.0);
    let report = relax(&traj, &OptimizerConfig::default(), &params, &g, &det).unwrap();
    assert!(!report.collapsed);
    assert_eq!(report.winner, None);
    let fin = report.final_trajectory.coefficients();
    for m in 0..traj.grid().len() {
        for n in 0..3 {
            assert!((fin[[n, m]] - start[n]).norm() < 1e-4);
        }
    }
    check_invariants(&traj, &report);
}

#[test]
fn relax_rejects_conditioned_mode() {
    let (g, det) = small_screen(2, 1.0);
    let traj = CoefficientTrajectory::constant(grid(8), &real(&[0.6, 0.8])).unwrap();
    let params = FunctionalParams::default();
    assert!(matches!(
        relax(&traj, &born(), &params, &g, &det),
        Err(Error::InvalidOptimizer(_))
    ));
    let joint = OptimizerConfig::default();
    assert!(relax_born_conditioned(&traj, 0, &joint, &params, &g, &det).is_err());
    assert!(relax_born_conditioned(&traj, 2, &born(), &params, &g, &det).is_err());
}

#[test]
fn conditioning_on_the_only_occupied_mode_matches_plain_descent() {
    let (g, det) = small_screen(3, 1.0);
    let traj = CoefficientTrajectory::constant(grid(32), &real(&[0.0, 1.0, 0.0])).unwrap();
    let params = FunctionalParams::with_epsilon(1.0);
    let plain = relax(&traj, &OptimizerConfig::default(), &params, &g, &det).unwrap();
    let cond = relax_born_conditioned(&traj, 1, &born(), &params, &g, &det).unwrap();
    assert_eq!(cond.winner, Some(1));
    assert_eq!(plain.objective_final, cond.objective_final);
    assert_eq!(cond.iterations, 0);
}

#[test]
fn conditioning_on_an_empty_mode_fails() {
    let (g, det) = small_screen(3, 1.0);
    let traj = CoefficientTrajectory::constant(grid(32), &real(&[0.6, 0.0, 0.8])).unwrap();
    let params = FunctionalParams::with_epsilon(1.0);
    match relax_born_conditioned(&traj, 1, &born(), &params, &g, &det) {
        Err(Error::NonConvergence(report)) => {
            assert_ne!(report.winner, Some(1));
            assert!(report.final_weights()[1] < 1e-20);
        }
        other => panic!("expected NonConvergence, got {other:?}"),
    }
}

#[test]
fn conditioned_objective_is_grid_converged() {
    let (g, det) = small_screen(3, 1.0);
    let start = real(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]);
    let params = FunctionalParams::with_epsilon(1.0);
    let run = |intervals| {
        let traj = CoefficientTrajectory::constant(grid(intervals), &start).unwrap();
        let report = relax_born_conditioned(&traj, 1, &born(), &params, &g, &det).unwrap();
        check_invariants(&traj, &report);
        report
    };
    let coarse = run(64);
    let fine = run(2048);
    assert_eq!(coarse.winner, Some(1));
    assert_relative_eq!(coarse.objective_final, fine.objective_final, max_relative = 0.05);

    // The weight moves over from mode 0 and mode 2 to mode 1 without
    // large reversals.
    let w = fine.final_trajectory.weights().unwrap();
    let series: Vec<f64> = w.row(1).to_vec();
    let mut worst_drop: f64 = 0.0;
    let mut peak = series[0];
    for x in &series {
        peak = peak.max(*x);
        worst_drop = worst_drop.max(peak - x);
    }
    assert!(worst_drop < 0.05, "winner weight fell back by {worst_drop}");
}
