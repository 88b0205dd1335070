//! Projected descent on coefficient trajectories.
//!
//! Each iteration takes the objective gradient, removes the component
//! normal to every slice's unit sphere, smooths it with the inverse of
//! the A1 Hessian (plus a diagonal shift) so that long-wavelength changes
//! are not throttled by the grid spacing, and searches along the result
//! with an Armijo backtracking line search. After every trial step each
//! slice except the boundary slice is rescaled to unit norm.

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::ActionFunctional;
use crate::model::{CoefficientTrajectory, DetectorModel, ExperimentGeometry, FunctionalParams};
use crate::rng::{stream_rng, STREAM_JITTER};

const ARMIJO_C1: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMode {
    /// Minimize `A1 + ε A2` alone and see where the weights end up.
    #[default]
    JointDescent,
    /// Add a ramped terminal penalty pulling a chosen mode to weight 1.
    BornConditioned,
}

/// Terminal penalty `κ (1 − w_winner(t_f))²` with `κ` multiplied by
/// `growth` at each of `stages` successive stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltySchedule {
    pub initial: f64,
    pub growth: f64,
    pub stages: usize,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        PenaltySchedule {
            initial: 100.0,
            growth: 10.0,
            stages: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// First trial step of the line search. Later searches start from
    /// twice the previous accepted step.
    pub step_size: f64,
    /// Threshold on the relative decrease of the objective above its
    /// one-hot floor.
    pub tolerance: f64,
    /// Number of consecutive iterations below `tolerance` that count as
    /// convergence.
    pub patience: usize,
    pub collapse_threshold: f64,
    pub mode: OptimizerMode,
    /// Diagonal shift of the smoothing preconditioner, in units of the grid
    /// step.
    pub preconditioner_shift: f64,
    /// Relative amplitude of the random modulus perturbation applied to
    /// the free slices before descent. Equal weights on mirror-image modes
    /// are a saddle the gradient cannot leave on its own.
    pub symmetry_breaking: f64,
    /// Seed of the perturbation. Ensembles set it to the run seed.
    #[serde(skip)]
    pub perturbation_seed: u64,
    pub penalty: PenaltySchedule,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 2000,
            step_size: 1.0,
            tolerance: 1e-6,
            patience: 5,
            collapse_threshold: 0.99,
            mode: OptimizerMode::JointDescent,
            preconditioner_shift: 1.0,
            symmetry_breaking: 1e-3,
            perturbation_seed: 0,
            penalty: PenaltySchedule::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidOptimizer(msg));
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad(format!("step_size must be positive, got {}", self.step_size));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return bad(format!("tolerance must lie in (0, 1), got {}", self.tolerance));
        }
        if self.patience < 1 {
            return bad("patience must be at least 1".into());
        }
        if !(self.collapse_threshold > 0.0 && self.collapse_threshold <= 1.0) {
            return bad(format!(
                "collapse_threshold must lie in (0, 1], got {}",
                self.collapse_threshold
            ));
        }
        if !(self.preconditioner_shift.is_finite() && self.preconditioner_shift >= 0.0) {
            return bad(format!(
                "preconditioner_shift must be nonnegative, got {}",
                self.preconditioner_shift
            ));
        }
        if !(self.symmetry_breaking.is_finite() && (0.0..0.5).contains(&self.symmetry_breaking)) {
            return bad(format!(
                "symmetry_breaking must lie in [0, 0.5), got {}",
                self.symmetry_breaking
            ));
        }
        let p = &self.penalty;
        if !(p.initial.is_finite() && p.initial > 0.0 && p.growth.is_finite() && p.growth >= 1.0 && p.stages >= 1) {
            return bad(format!(
                "penalty schedule needs initial > 0, growth >= 1 and stages >= 1, got {p:?}"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub final_trajectory: CoefficientTrajectory,
    /// Objective after every accepted step, including the terminal penalty
    /// in conditioned runs. The first entry is the starting value of each
    /// stage; see `stage_starts`.
    pub objective_trace: Vec<f64>,
    /// Indices into `objective_trace` where a penalty stage begins. The
    /// trace is nonincreasing within each stage.
    pub stage_starts: Vec<usize>,
    pub winner: Option<usize>,
    pub collapsed: bool,
    /// Accepted descent steps.
    pub iterations: usize,
    /// True if the last stage stopped on the tolerance or on a stationary
    /// point rather than on the iteration budget.
    pub converged: bool,
    pub final_max_weight: f64,
    /// `A1 + ε A2` of the final trajectory, without any penalty.
    pub objective_final: f64,
}

impl OptimizationReport {
    /// Final weights `w_n(t_f)`.
    pub fn final_weights(&self) -> Vec<f64> {
        terminal_weights(self.final_trajectory.coefficients())
    }
}

fn terminal_weights(c: ArrayView2<'_, Complex64>) -> Vec<f64> {
    let last = c.column(c.ncols() - 1);
    let lambda: f64 = last.iter().map(|z| z.norm_sqr()).sum();
    last.iter().map(|z| z.norm_sqr() / lambda).collect()
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (n, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = n;
        }
    }
    best
}

/// Tridiagonal `K + μI` on the free nodes `1..=M`, where `K` is the Hessian
/// of the velocity penalty with node 0 held fixed. Factored once for the
/// Thomas algorithm.
struct Smoother {
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
    off: f64,
}

impl Smoother {
    fn new(free: usize, h: f64, shift: f64) -> Self {
        let off = -2.0 / h;
        let mut upper = vec![0.0; free];
        let mut inv_pivot = vec![0.0; free];
        let mut prev_upper = 0.0;
        for i in 0..free {
            let diag = if i + 1 == free { 2.0 / h } else { 4.0 / h } + shift;
            let pivot = diag - off * prev_upper;
            inv_pivot[i] = 1.0 / pivot;
            upper[i] = off / pivot;
            prev_upper = upper[i];
        }
        Smoother { upper, inv_pivot, off }
    }

    /// Solve in place on `x[1..]`; `x[0]` is cleared.
    fn solve(&self, x: &mut [Complex64]) {
        x[0] = Complex64::new(0.0, 0.0);
        let free = &mut x[1..];
        let mut prev = Complex64::new(0.0, 0.0);
        for (i, v) in free.iter_mut().enumerate() {
            *v = (*v - prev * self.off) * self.inv_pivot[i];
            prev = *v;
        }
        for i in (0..free.len() - 1).rev() {
            let next = free[i + 1];
            free[i] -= next * self.upper[i];
        }
    }
}

/// Remove from each free slice the component along that slice.
fn project_tangent(c: &Array2<Complex64>, g: &mut Array2<Complex64>) {
    for (m, (cm, mut gm)) in c.axis_iter(Axis(1)).zip(g.axis_iter_mut(Axis(1))).enumerate() {
        if m == 0 {
            gm.fill(Complex64::new(0.0, 0.0));
            continue;
        }
        let radial: f64 = cm.iter().zip(gm.iter()).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        gm.zip_mut_with(&cm, |g, c| *g -= c * radial);
    }
}

fn normalize_free_slices(c: &mut Array2<Complex64>) -> Result<()> {
    for (m, mut col) in c.axis_iter_mut(Axis(1)).enumerate().skip(1) {
        let lambda: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        if !(lambda > 1e-300) {
            return Err(Error::ZeroNorm { node: m });
        }
        let scale = 1.0 / lambda.sqrt();
        col.mapv_inplace(|z| z * scale);
    }
    Ok(())
}

fn real_dot(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

struct Penalty {
    winner: usize,
    kappa: f64,
}

impl Penalty {
    fn value(&self, c: ArrayView2<'_, Complex64>) -> f64 {
        let w = terminal_weights(c)[self.winner];
        self.kappa * (1.0 - w).powi(2)
    }

    fn add_gradient(&self, c: ArrayView2<'_, Complex64>, g: &mut Array2<Complex64>) {
        let last = c.ncols() - 1;
        let column = c.column(last);
        let lambda: f64 = column.iter().map(|z| z.norm_sqr()).sum();
        let w = column[self.winner].norm_sqr() / lambda;
        let outer = -2.0 * self.kappa * (1.0 - w);
        for (n, z) in column.iter().enumerate() {
            let dw = if n == self.winner { 1.0 - w } else { -w };
            g[[n, last]] += z * (outer * 2.0 * dw / lambda);
        }
    }
}

struct Descent<'a> {
    functional: ActionFunctional<'a>,
    smoother: Smoother,
    config: &'a OptimizerConfig,
    floor: f64,
}

enum StageEnd {
    Converged,
    Budget,
}

impl<'a> Descent<'a> {
    fn evaluate(&self, c: &Array2<Complex64>, penalty: Option<&Penalty>) -> Result<(f64, Array2<Complex64>)> {
        let (mut f, mut g) = self.functional.value_and_gradient(c.view())?;
        if let Some(p) = penalty {
            f += p.value(c.view());
            p.add_gradient(c.view(), &mut g);
        }
        Ok((f, g))
    }

    fn run_stage(
        &self,
        c: &mut Array2<Complex64>,
        penalty: Option<&Penalty>,
        budget: usize,
        trace: &mut Vec<f64>,
        iterations: &mut usize,
    ) -> Result<StageEnd> {
        let (mut f, mut g) = self.evaluate(c, penalty)?;
        trace.push(f);
        let mut step = self.config.step_size;
        let mut quiet = 0;
        for _ in 0..budget {
            project_tangent(c, &mut g);
            let mut d = g.clone();
            for mut row in d.axis_iter_mut(Axis(0)) {
                self.smoother.solve(
                    row.as_slice_mut()
                        .expect("rows of a standard-layout array are contiguous"),
                );
            }
            project_tangent(c, &mut d);
            let slope = real_dot(&g, &d);
            if !(slope > 1e-300) {
                return Ok(StageEnd::Converged);
            }
            let mut s = step;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let mut trial = &*c - &(&d * Complex64::new(s, 0.0));
                normalize_free_slices(&mut trial)?;
                let (ft, gt) = self.evaluate(&trial, penalty)?;
                if ft <= f - ARMIJO_C1 * s * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                s *= SHRINK;
            }
            let Some((trial, ft, gt)) = accepted else {
                // No decrease along a descent direction: stationary to
                // working precision.
                return Ok(StageEnd::Converged);
            };
            // Once the excess is at rounding level every step looks large
            // relative to it, so floor the denominator.
            let excess = (f - self.floor).max(1e-12 * f.abs().max(1.0));
            let relative = (f - ft) / excess;
            *c = trial;
            f = ft;
            g = gt;
            trace.push(f);
            *iterations += 1;
            step = 2.0 * s;
            if relative < self.config.tolerance {
                quiet += 1;
                if quiet >= self.config.patience {
                    return Ok(StageEnd::Converged);
                }
            } else {
                quiet = 0;
            }
        }
        Ok(StageEnd::Budget)
    }
}

fn perturb(c: &mut Array2<Complex64>, amount: f64, seed: u64) -> Result<()> {
    if amount == 0.0 {
        return Ok(());
    }
    let mut rng = stream_rng(seed, STREAM_JITTER);
    for mut row in c.axis_iter_mut(Axis(0)) {
        let factor = 1.0 + amount * rng.gen_range(-1.0..=1.0);
        row.iter_mut().skip(1).for_each(|z| *z *= factor);
    }
    normalize_free_slices(c)
}

fn setup<'a>(
    initial: &CoefficientTrajectory,
    config: &'a OptimizerConfig,
    params: &FunctionalParams,
    geometry: &ExperimentGeometry,
    detector: &'a DetectorModel,
) -> Result<(Descent<'a>, Array2<Complex64>)> {
    config.validate()?;
    let functional = ActionFunctional::for_trajectory(initial, params, geometry, detector)?;
    let grid = initial.grid();
    let h = grid.step();
    let smoother = Smoother::new(grid.intervals(), h, config.preconditioner_shift * h);
    let floor = functional.objective_floor();
    let mut c = initial.coefficients().as_standard_layout().to_owned();
    normalize_free_slices(&mut c)?;
    perturb(&mut c, config.symmetry_breaking, config.perturbation_seed)?;
    Ok((
        Descent {
            functional,
            smoother,
            config,
            floor,
        },
        c,
    ))
}

fn finish(
    descent: &Descent<'_>,
    initial: &CoefficientTrajectory,
    c: Array2<Complex64>,
    trace: Vec<f64>,
    stage_starts: Vec<usize>,
    iterations: usize,
    converged: bool,
) -> Result<OptimizationReport> {
    let weights = terminal_weights(c.view());
    let leader = argmax(&weights);
    let final_max_weight = weights[leader];
    let collapsed = final_max_weight >= descent.config.collapse_threshold;
    let objective_final = descent.functional.value(c.view())?;
    Ok(OptimizationReport {
        final_trajectory: CoefficientTrajectory::new(*initial.grid(), c)?,
        objective_trace: trace,
        stage_starts,
        winner: collapsed.then_some(leader),
        collapsed,
        iterations,
        converged,
        final_max_weight,
        objective_final,
    })
}

/// Minimize `A1 + ε A2` with the `t_i` slice held fixed.
///
/// Returns the report whether or not the weights collapsed, as long as the
/// descent stopped on its own. Running out of iterations before either
/// converging or collapsing is a [`Error::NonConvergence`].
pub fn relax(
    initial: &CoefficientTrajectory,
    config: &OptimizerConfig,
    params: &FunctionalParams,
    geometry: &ExperimentGeometry,
    detector: &DetectorModel,
) -> Result<OptimizationReport> {
    if config.mode != OptimizerMode::JointDescent {
        return Err(Error::InvalidOptimizer(
            "relax runs joint descent; use relax_born_conditioned for conditioned runs".into(),
        ));
    }
    let (descent, mut c) = setup(initial, config, params, geometry, detector)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let end = descent.run_stage(&mut c, None, config.max_iters, &mut trace, &mut iterations)?;
    let converged = matches!(end, StageEnd::Converged);
    let report = finish(&descent, initial, c, trace, vec![0], iterations, converged)?;
    if !converged && !report.collapsed {
        return Err(Error::NonConvergence(Box::new(report)));
    }
    Ok(report)
}

/// Minimize `A1 + ε A2 + κ (1 − w_winner(t_f))²`, raising `κ` stage by
/// stage until the winner holds `collapse_threshold` of the weight at
/// `t_f`. Fails with [`Error::NonConvergence`] if every stage ends short of
/// it, which is what happens when the winner starts with zero amplitude.
pub fn relax_born_conditioned(
    initial: &CoefficientTrajectory,
    winner: usize,
    config: &OptimizerConfig,
    params: &FunctionalParams,
    geometry: &ExperimentGeometry,
    detector: &DetectorModel,
) -> Result<OptimizationReport> {
    if config.mode != OptimizerMode::BornConditioned {
        return Err(Error::InvalidOptimizer(
            "relax_born_conditioned needs mode BornConditioned".into(),
        ));
    }
    if winner >= initial.n_modes() {
        return Err(Error::InvalidOptimizer(format!(
            "winner {winner} out of range for {} modes",
            initial.n_modes()
        )));
    }
    let (descent, mut c) = setup(initial, config, params, geometry, detector)?;
    let mut trace = Vec::new();
    let mut stage_starts = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut kappa = config.penalty.initial;
    for _ in 0..config.penalty.stages {
        let budget = config.max_iters.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        stage_starts.push(trace.len());
        let penalty = Penalty { winner, kappa };
        let end = descent.run_stage(&mut c, Some(&penalty), budget, &mut trace, &mut iterations)?;
        converged = matches!(end, StageEnd::Converged);
        if terminal_weights(c.view())[winner] >= config.collapse_threshold {
            break;
        }
        kappa *= config.penalty.growth;
    }
    let report = finish(&descent, initial, c, trace, stage_starts, iterations, converged)?;
    if !report.collapsed || report.winner != Some(winner) {
        return Err(Error::NonConvergence(Box::new(report)));
    }
    Ok(report)
}
