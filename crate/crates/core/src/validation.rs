//! Self-checks of the action functional: the one-hot closed form, the
//! factorized quartic sum against the plain `O(N⁴)` sum, and the analytic
//! gradient against central differences.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functional::{coeff_a1, coeff_a2, coeff_a3, evaluate_a2, ActionFunctional};
use crate::model::{
    CoefficientTrajectory, DetectorModel, Epochs, ExperimentGeometry, FunctionalParams, TimeGrid, Vec3,
};

pub const DIAGONAL_TOLERANCE: f64 = 1e-10;
pub const QUARTIC_TOLERANCE: f64 = 1e-10;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const GRADIENT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCheck {
    pub name: String,
    /// Worst relative error seen.
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check(name: &str, max_rel_error: f64, tolerance: f64, cases: usize) -> ValidationCheck {
    ValidationCheck {
        name: name.to_string(),
        max_rel_error,
        tolerance,
        cases,
        pass: max_rel_error <= tolerance,
    }
}

fn epochs() -> Epochs {
    Epochs::new(0.0, 1.0, 2.0, 4.0).expect("valid epochs")
}

fn random_labels(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    (0..n)
        .map(|_| [10.0, rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)])
        .collect()
}

/// Random labels, and every other case a delayed-choice switch between two
/// label sets.
fn random_detector(n: usize, case: usize, rng: &mut ChaCha8Rng) -> Result<DetectorModel> {
    let post = DetectorModel::position_with_labels(random_labels(n, rng))?;
    if case % 2 == 0 {
        return Ok(post);
    }
    let pre = DetectorModel::position_with_labels(random_labels(n, rng))?;
    DetectorModel::delayed_choice(pre, post, 1.5, &epochs())
}

fn random_coefficients(grid: TimeGrid, n: usize, rng: &mut ChaCha8Rng) -> Result<CoefficientTrajectory> {
    let c = Array2::from_shape_fn((n, grid.len()), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    CoefficientTrajectory::new(grid, c)
}

fn geometry(n: usize) -> Result<ExperimentGeometry> {
    ExperimentGeometry::uniform_screen(n, -2.0, 2.0, 10.0, 1.0, 0.2, epochs())
}

/// A2 summed term by term over every index quadruple, with the same
/// trapezoid rules as the factorized evaluation.
pub fn quartic_sum_direct(
    traj: &CoefficientTrajectory,
    params: &FunctionalParams,
    geometry: &ExperimentGeometry,
    detector: &DetectorModel,
) -> Result<f64> {
    let grid = traj.grid();
    let w = traj.weights()?;
    let n = traj.n_modes();
    let (ia, ib) = grid.epoch_nodes(geometry.epochs())?;
    let last = grid.len() - 1;
    let h = grid.step();
    let trap = |m: usize, a: usize, b: usize| match m {
        _ if m < a || m > b || a == b => 0.0,
        _ if m == a || m == b => 0.5 * h,
        _ => h,
    };
    let mut total = 0.0;
    for m in 0..grid.len() {
        let t = grid.node(m);
        let (wall, wflight, wafter) = (trap(m, 0, last), trap(m, ia, ib), trap(m, ib, last));
        for i in 0..n {
            for j in 0..n {
                let a3 = coeff_a3(i, j, params, detector);
                for k in 0..n {
                    for l in 0..n {
                        let ww = w[[i, m]] * w[[j, m]] * w[[k, m]] * w[[l, m]];
                        let mut a = wall * coeff_a1([i, j, k, l], n, params, geometry) + wafter * a3;
                        if wflight != 0.0 {
                            a += wflight * coeff_a2(t, [i, j, k, l], params, geometry, detector);
                        }
                        total += ww * a;
                    }
                }
            }
        }
    }
    Ok(total)
}

fn diagonal_check(params: &FunctionalParams) -> Result<ValidationCheck> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [2, 6, 64] {
        let g = geometry(n)?;
        let detector = DetectorModel::position(&g);
        let grid = TimeGrid::for_epochs(g.epochs(), 64)?;
        for hot in [0, n / 2, n - 1] {
            let mut c0 = vec![Complex64::new(0.0, 0.0); n];
            c0[hot] = Complex64::from_polar(1.0, 0.3 * hot as f64);
            let traj = CoefficientTrajectory::constant(grid, &c0)?;
            let a2 = evaluate_a2(&traj, params, &g, &detector)?.total;
            let expected = params.zero_point_factor() * (n + 1) as f64 * g.epoch_lengths().total;
            worst = worst.max((a2 - expected).abs() / expected);
            cases += 1;
        }
    }
    Ok(check("one-hot A2 closed form", worst, DIAGONAL_TOLERANCE, cases))
}

fn quartic_check(params: &FunctionalParams, trials: usize, rng: &mut ChaCha8Rng) -> Result<ValidationCheck> {
    let mut worst: f64 = 0.0;
    for case in 0..trials {
        let n = 2 + case % 5;
        let g = geometry(n)?;
        let detector = random_detector(n, case, rng)?;
        let traj = random_coefficients(TimeGrid::for_epochs(g.epochs(), 16)?, n, rng)?;
        let fast = evaluate_a2(&traj, params, &g, &detector)?.total;
        let direct = quartic_sum_direct(&traj, params, &g, &detector)?;
        worst = worst.max((fast - direct).abs() / direct.abs());
    }
    Ok(check(
        "factorized vs direct quartic sum",
        worst,
        QUARTIC_TOLERANCE,
        trials,
    ))
}

/// Worst component error of the analytic gradient against central
/// differences, relative to the largest gradient component.
pub fn gradient_error(f: &ActionFunctional<'_>, c: &Array2<Complex64>, step: f64) -> Result<f64> {
    let (_, grad) = f.value_and_gradient(c.view())?;
    let scale = grad
        .iter()
        .map(|g| g.re.abs().max(g.im.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    let mut probe = c.clone();
    for idx in ndarray::indices(c.dim()) {
        for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let x = c[idx];
            probe[idx] = x + dir * step;
            let plus = f.value(probe.view())?;
            probe[idx] = x - dir * step;
            let minus = f.value(probe.view())?;
            probe[idx] = x;
            let fd = (plus - minus) / (2.0 * step);
            let analytic = if dir.re == 1.0 { grad[idx].re } else { grad[idx].im };
            worst = worst.max((fd - analytic).abs() / scale);
        }
    }
    Ok(worst)
}

fn gradient_check(trials: usize, rng: &mut ChaCha8Rng) -> Result<ValidationCheck> {
    let n = 3;
    let g = geometry(n)?;
    let mut worst: f64 = 0.0;
    for case in 0..trials {
        let params = FunctionalParams::with_epsilon(rng.gen_range(0.1..2.0));
        let detector = random_detector(n, case, rng)?;
        let traj = random_coefficients(TimeGrid::for_epochs(g.epochs(), 8)?, n, rng)?;
        let f = ActionFunctional::for_trajectory(&traj, &params, &g, &detector)?;
        worst = worst.max(gradient_error(&f, &traj.coefficients().to_owned(), GRADIENT_STEP)?);
    }
    Ok(check(
        "analytic vs finite-difference gradient",
        worst,
        GRADIENT_TOLERANCE,
        trials,
    ))
}

/// Run all functional self-checks with `trials` random instances each.
pub fn run_validation(seed: u64, trials: usize) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = FunctionalParams::default();
    let checks = vec![
        diagonal_check(&params)?,
        quartic_check(&params, trials, &mut rng)?,
        gradient_check(trials, &mut rng)?,
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { checks, pass })
}
