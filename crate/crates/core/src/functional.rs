//! The discretized action `A1 + ε A2`.
//!
//! `A2` is the quartic form `∫ dt Σ w_i w_j w_k w_l a_ijkl(t)` in the mode
//! weights. Every coefficient family depends on its indices only through
//! pairwise label differences or a Kronecker delta, so the quartic sum at
//! one time slice collapses into a handful of weighted moments:
//!
//! * `Σ w_i w_j w_k w_l a⁽¹⁾ = (3 + 4δx²δE²) N S⁴ + c S² (S² − Q)`
//! * `Σ w_i w_j w_k w_l a⁽²⁾ = m² g(t) Σ_q P_q²`
//! * `Σ w_i w_j w_k w_l a⁽³⁾ = 2δp² S² Σ_q P_q`
//!
//! with `S = Σ w`, `Q = Σ w²` and `P_q = Σ w_i w_j (b_iq − b_jq)² =
//! 2 (S Σ w b_q² − (Σ w b_q)²)`. One slice therefore costs `O(N)`.
//!
//! `A1` is replaced by the velocity penalty `∫ Σ_n |dC_n/dt|² dt`,
//! discretized with differences on each grid interval.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CoefficientTrajectory, DetectorModel, ExperimentGeometry, FunctionalParams, TimeGrid, Vec3};

/// Transverse axes x², x³ (zero-based components 1 and 2).
const TRANSVERSE: [usize; 2] = [1, 2];

/// Time-integrated contributions of the three coefficient families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A2Breakdown {
    pub total: f64,
    pub contrib_a1: f64,
    pub contrib_a2: f64,
    pub contrib_a3: f64,
}

/// a⁽¹⁾_ijkl. `n_modes` is the number of detector modes; the particle count
/// `N` in the formula is one more (the electron).
pub fn coeff_a1(indices: [usize; 4], n_modes: usize, params: &FunctionalParams, geometry: &ExperimentGeometry) -> f64 {
    let [_, _, k, l] = indices;
    let particles = (n_modes + 1) as f64;
    let lengths = geometry.epoch_lengths();
    let mut a = params.zero_point_factor() * particles + params.order_one_floor;
    if k != l {
        a += 8.0 * (lengths.l3 / lengths.total) * params.dx2_phi * params.energy_gap.powi(2);
    }
    a
}

/// a⁽²⁾_ijkl(t), the in-flight separation term. This is the bare formula;
/// it only contributes on `[t_a, t_b]`.
pub fn coeff_a2(
    t: f64,
    indices: [usize; 4],
    params: &FunctionalParams,
    geometry: &ExperimentGeometry,
    detector: &DetectorModel,
) -> f64 {
    let [i, j, k, l] = indices;
    let epochs = geometry.epochs();
    let b = detector.labels_at(t);
    let flight = epochs.t_b - epochs.t_a;
    let sum: f64 = TRANSVERSE
        .iter()
        .map(|&q| (b[i][q] - b[j][q]).powi(2) * (b[k][q] - b[l][q]).powi(2))
        .sum();
    params.electron_mass.powi(2) * (t - epochs.t_a).powi(2) / flight.powi(4) * sum
}

/// a⁽³⁾_ij, the post-screen separation term, using the labels in force
/// after the screen is reached.
pub fn coeff_a3(i: usize, j: usize, params: &FunctionalParams, detector: &DetectorModel) -> f64 {
    let b = detector.mode_labels();
    let sum: f64 = TRANSVERSE.iter().map(|&q| (b[i][q] - b[j][q]).powi(2)).sum();
    2.0 * params.dp2_xi * sum
}

/// Per-node quadrature weights and coefficient prefactors for one grid,
/// geometry and detector.
#[derive(Debug, Clone)]
pub struct ActionFunctional<'a> {
    grid: TimeGrid,
    n_modes: usize,
    epsilon: f64,
    /// (3 + 4δx²δE²) N plus the optional floor.
    zero_point: f64,
    /// 8 (L3/L) δx² (E1 − E0)².
    gap: f64,
    /// 2 δp²_ξ.
    post_screen: f64,
    /// Trapezoid weights over [t_i, t_f], [t_a, t_b] and [t_b, t_f].
    w_all: Vec<f64>,
    w_flight: Vec<f64>,
    w_after: Vec<f64>,
    /// m² (t − t_a)² / (t_b − t_a)⁴ at each node.
    flight_factor: Vec<f64>,
    labels: Vec<&'a [Vec3]>,
    post_labels: &'a [Vec3],
}

fn trapezoid_weights(len: usize, from: usize, to: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; len];
    if to > from {
        for (m, wm) in w.iter_mut().enumerate().take(to + 1).skip(from) {
            *wm = if m == from || m == to { 0.5 * h } else { h };
        }
    }
    w
}

/// Weighted moments of one time slice along the transverse axes.
struct SliceMoments {
    s: f64,
    q: f64,
    m1: [f64; 2],
    m2: [f64; 2],
    p: [f64; 2],
}

fn moments(w: &[f64], labels: &[Vec3]) -> SliceMoments {
    let mut s = 0.0;
    let mut q = 0.0;
    let mut m1 = [0.0; 2];
    let mut m2 = [0.0; 2];
    for (wk, b) in w.iter().zip(labels) {
        s += wk;
        q += wk * wk;
        for (a, &axis) in TRANSVERSE.iter().enumerate() {
            m1[a] += wk * b[axis];
            m2[a] += wk * b[axis] * b[axis];
        }
    }
    let p = [2.0 * (s * m2[0] - m1[0] * m1[0]), 2.0 * (s * m2[1] - m1[1] * m1[1])];
    SliceMoments { s, q, m1, m2, p }
}

impl<'a> ActionFunctional<'a> {
    pub fn new(
        grid: &TimeGrid,
        n_modes: usize,
        params: &FunctionalParams,
        geometry: &ExperimentGeometry,
        detector: &'a DetectorModel,
    ) -> Result<Self> {
        params.validate()?;
        if n_modes != detector.mode_count() {
            return Err(Error::InvalidDetector(format!(
                "trajectory has {n_modes} modes but the detector has {}",
                detector.mode_count()
            )));
        }
        let epochs = geometry.epochs();
        let (ia, ib) = grid.epoch_nodes(epochs)?;
        let len = grid.len();
        let h = grid.step();
        let lengths = geometry.epoch_lengths();
        let flight = lengths.l2;
        let mass2 = params.electron_mass.powi(2);
        let flight_factor = grid
            .nodes()
            .map(|t| mass2 * (t - epochs.t_a).powi(2) / flight.powi(4))
            .collect();
        let labels = grid.nodes().map(|t| detector.labels_at(t)).collect();
        Ok(ActionFunctional {
            grid: *grid,
            n_modes,
            epsilon: params.epsilon,
            zero_point: params.zero_point_factor() * (n_modes + 1) as f64 + params.order_one_floor,
            gap: 8.0 * (lengths.l3 / lengths.total) * params.dx2_phi * params.energy_gap.powi(2),
            post_screen: 2.0 * params.dp2_xi,
            w_all: trapezoid_weights(len, 0, len - 1, h),
            w_flight: trapezoid_weights(len, ia, ib, h),
            w_after: trapezoid_weights(len, ib, len - 1, h),
            flight_factor,
            labels,
            post_labels: detector.mode_labels(),
        })
    }

    pub fn for_trajectory(
        traj: &CoefficientTrajectory,
        params: &FunctionalParams,
        geometry: &ExperimentGeometry,
        detector: &'a DetectorModel,
    ) -> Result<Self> {
        Self::new(traj.grid(), traj.n_modes(), params, geometry, detector)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `ε (3 + 4δx²δE²) N L`: the value of `ε A2` on any one-hot
    /// trajectory, and a lower bound of the objective.
    pub fn objective_floor(&self) -> f64 {
        self.epsilon * self.zero_point * (self.grid.end() - self.grid.start())
    }

    fn check_shape(&self, c: &ArrayView2<'_, Complex64>) -> Result<()> {
        if c.dim() != (self.n_modes, self.grid.len()) {
            return Err(Error::Grid(format!(
                "coefficient matrix has shape {:?}, expected ({}, {})",
                c.dim(),
                self.n_modes,
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// Normalized weights of slice `m` into `w`; returns Λ.
    fn slice_weights(c: &ArrayView2<'_, Complex64>, m: usize, w: &mut [f64]) -> Result<f64> {
        let mut lambda = 0.0;
        for (n, wn) in w.iter_mut().enumerate() {
            *wn = c[[n, m]].norm_sqr();
            lambda += *wn;
        }
        if !(lambda > 1e-300) {
            return Err(Error::ZeroNorm { node: m });
        }
        w.iter_mut().for_each(|x| *x /= lambda);
        Ok(lambda)
    }

    /// Contributions of slice `m` to the three families, quadrature weights
    /// included.
    fn slice_terms(&self, m: usize, w: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        let post = moments(w, self.post_labels);
        let s2 = post.s * post.s;
        out[0] = self.w_all[m] * (self.zero_point * s2 * s2 + self.gap * s2 * (s2 - post.q));
        if self.w_flight[m] != 0.0 {
            let flight = if std::ptr::eq(self.labels[m], self.post_labels) {
                post.p
            } else {
                moments(w, self.labels[m]).p
            };
            out[1] = self.w_flight[m] * self.flight_factor[m] * (flight[0] * flight[0] + flight[1] * flight[1]);
        }
        if self.w_after[m] != 0.0 {
            out[2] = self.w_after[m] * self.post_screen * s2 * (post.p[0] + post.p[1]);
        }
        out
    }

    /// ∂(slice terms)/∂w_k for every k, written into `g`.
    fn slice_weight_gradient(&self, m: usize, w: &[f64], g: &mut [f64]) {
        let post = moments(w, self.post_labels);
        let s = post.s;
        let s2 = s * s;
        let wa = self.w_all[m];
        let base = wa * (4.0 * self.zero_point * s2 * s + self.gap * (4.0 * s2 * s - 2.0 * s * post.q));
        for (gk, wk) in g.iter_mut().zip(w) {
            *gk = base - wa * self.gap * 2.0 * s2 * wk;
        }
        let dp = |mom: &SliceMoments, b: &Vec3, a: usize| {
            let x = b[TRANSVERSE[a]];
            2.0 * (mom.m2[a] + mom.s * x * x - 2.0 * mom.m1[a] * x)
        };
        if self.w_flight[m] != 0.0 {
            let labels = self.labels[m];
            let mom = moments(w, labels);
            let scale = self.w_flight[m] * self.flight_factor[m];
            for (gk, b) in g.iter_mut().zip(labels) {
                *gk += scale * (2.0 * mom.p[0] * dp(&mom, b, 0) + 2.0 * mom.p[1] * dp(&mom, b, 1));
            }
        }
        if self.w_after[m] != 0.0 {
            let scale = self.w_after[m] * self.post_screen;
            let psum = post.p[0] + post.p[1];
            for (gk, b) in g.iter_mut().zip(self.post_labels) {
                *gk += scale * (2.0 * s * psum + s2 * (dp(&post, b, 0) + dp(&post, b, 1)));
            }
        }
    }

    pub fn a2_breakdown(&self, c: ArrayView2<'_, Complex64>) -> Result<A2Breakdown> {
        self.check_shape(&c)?;
        let mut w = vec![0.0; self.n_modes];
        let mut sums = [0.0; 3];
        for m in 0..self.grid.len() {
            Self::slice_weights(&c, m, &mut w)?;
            let terms = self.slice_terms(m, &w);
            for (acc, x) in sums.iter_mut().zip(terms) {
                *acc += x;
            }
        }
        Ok(A2Breakdown {
            total: sums[0] + sums[1] + sums[2],
            contrib_a1: sums[0],
            contrib_a2: sums[1],
            contrib_a3: sums[2],
        })
    }

    pub fn a1(&self, c: ArrayView2<'_, Complex64>) -> f64 {
        velocity_penalty(c, self.grid.step())
    }

    pub fn value(&self, c: ArrayView2<'_, Complex64>) -> Result<f64> {
        let a2 = self.a2_breakdown(c)?;
        Ok(self.a1(c) + self.epsilon * a2.total)
    }

    /// Objective and its gradient. The gradient is returned as
    /// `∂O/∂Re C + i ∂O/∂Im C` per entry.
    pub fn value_and_gradient(&self, c: ArrayView2<'_, Complex64>) -> Result<(f64, Array2<Complex64>)> {
        self.check_shape(&c)?;
        let h = self.grid.step();
        let mut grad = velocity_penalty_gradient(c, h);
        let mut value = velocity_penalty(c, h);
        let mut w = vec![0.0; self.n_modes];
        let mut g = vec![0.0; self.n_modes];
        for m in 0..self.grid.len() {
            let lambda = Self::slice_weights(&c, m, &mut w)?;
            let terms = self.slice_terms(m, &w);
            value += self.epsilon * (terms[0] + terms[1] + terms[2]);
            self.slice_weight_gradient(m, &w, &mut g);
            let mean: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
            for n in 0..self.n_modes {
                grad[[n, m]] += c[[n, m]] * (2.0 * self.epsilon * (g[n] - mean) / lambda);
            }
        }
        Ok((value, grad))
    }
}

/// `Σ_n Σ_m |C_n(t_{m+1}) − C_n(t_m)|² / h`: the integral of `Σ|Ċ|²` with
/// the derivative taken as a central difference at each interval midpoint.
pub(crate) fn velocity_penalty(c: ArrayView2<'_, Complex64>, h: f64) -> f64 {
    let mut sum = 0.0;
    for row in c.rows() {
        for pair in row.windows(2) {
            sum += (pair[1] - pair[0]).norm_sqr();
        }
    }
    sum / h
}

pub(crate) fn velocity_penalty_gradient(c: ArrayView2<'_, Complex64>, h: f64) -> Array2<Complex64> {
    let (modes, nodes) = c.dim();
    let mut g = Array2::zeros((modes, nodes));
    for n in 0..modes {
        for m in 0..nodes - 1 {
            let d = (c[[n, m + 1]] - c[[n, m]]) * (2.0 / h);
            g[[n, m + 1]] += d;
            g[[n, m]] -= d;
        }
    }
    g
}

/// Time-integrated A2 and its split over the coefficient families.
pub fn evaluate_a2(
    traj: &CoefficientTrajectory,
    params: &FunctionalParams,
    geometry: &ExperimentGeometry,
    detector: &DetectorModel,
) -> Result<A2Breakdown> {
    ActionFunctional::for_trajectory(traj, params, geometry, detector)?.a2_breakdown(traj.coefficients())
}

/// The smoothness stand-in for A1, `∫ Σ_n |dC_n/dt|² dt`.
pub fn evaluate_a1_surrogate(traj: &CoefficientTrajectory) -> f64 {
    velocity_penalty(traj.coefficients(), traj.grid().step())
}

/// `A1 + ε A2`.
pub fn objective(
    traj: &CoefficientTrajectory,
    params: &FunctionalParams,
    geometry: &ExperimentGeometry,
    detector: &DetectorModel,
) -> Result<f64> {
    ActionFunctional::for_trajectory(traj, params, geometry, detector)?.value(traj.coefficients())
}

/// Gradient of the objective with respect to the real and imaginary parts
/// of every coefficient, packed as `∂/∂Re + i ∂/∂Im`.
pub fn gradient_objective(
    traj: &CoefficientTrajectory,
    params: &FunctionalParams,
    geometry: &ExperimentGeometry,
    detector: &DetectorModel,
) -> Result<Array2<Complex64>> {
    let f = ActionFunctional::for_trajectory(traj, params, geometry, detector)?;
    Ok(f.value_and_gradient(traj.coefficients())?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Epochs, ExperimentGeometry};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (ExperimentGeometry, DetectorModel, TimeGrid) {
        let epochs = Epochs::new(0.0, 1.0, 2.0, 4.0).unwrap();
        let g = ExperimentGeometry::uniform_screen(n, -2.0, 2.0, 10.0, 1.0, 0.2, epochs).unwrap();
        let det = DetectorModel::position(&g);
        let grid = TimeGrid::for_epochs(&epochs, 16).unwrap();
        (g, det, grid)
    }

    fn random_trajectory(grid: TimeGrid, n: usize, rng: &mut ChaCha8Rng) -> CoefficientTrajectory {
        let c = Array2::from_shape_fn((n, grid.len()), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        CoefficientTrajectory::new(grid, c).unwrap()
    }

    #[test]
    fn one_hot_gives_zero_point_floor() {
        let (g, det, grid) = setup(5);
        let params = FunctionalParams::with_epsilon(1.0);
        let mut c0 = vec![Complex64::new(0.0, 0.0); 5];
        c0[2] = Complex64::new(0.6, 0.8);
        let traj = CoefficientTrajectory::constant(grid, &c0).unwrap();
        let a2 = evaluate_a2(&traj, &params, &g, &det).unwrap();
        let expected = params.zero_point_factor() * 6.0 * 4.0;
        assert!((a2.total - expected).abs() <= 1e-12 * expected);
        assert_eq!(a2.contrib_a2, 0.0);
        assert_eq!(a2.contrib_a3, 0.0);
        assert_eq!(evaluate_a1_surrogate(&traj), 0.0);
    }

    #[test]
    fn factorized_sum_matches_quartic_sum() {
        let n = 4;
        let (g, det, grid) = setup(n);
        let params = FunctionalParams::with_epsilon(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traj = random_trajectory(grid, n, &mut rng);
        let w = traj.weights().unwrap();
        let epochs = g.epochs();
        let (ia, ib) = grid.epoch_nodes(epochs).unwrap();
        let h = grid.step();
        let trap = |m: usize, a: usize, b: usize| {
            if m < a || m > b {
                0.0
            } else if m == a || m == b {
                0.5 * h
            } else {
                h
            }
        };
        let last = grid.len() - 1;
        let mut sums = [0.0; 3];
        for m in 0..grid.len() {
            let t = grid.node(m);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let ww = w[[i, m]] * w[[j, m]] * w[[k, m]] * w[[l, m]];
                            sums[0] += trap(m, 0, last) * ww * coeff_a1([i, j, k, l], n, &params, &g);
                            sums[1] += trap(m, ia, ib) * ww * coeff_a2(t, [i, j, k, l], &params, &g, &det);
                            sums[2] += trap(m, ib, last) * ww * coeff_a3(i, j, &params, &det);
                        }
                    }
                }
            }
        }
        let a2 = evaluate_a2(&traj, &params, &g, &det).unwrap();
        for (direct, fast) in sums.iter().zip([a2.contrib_a1, a2.contrib_a2, a2.contrib_a3]) {
            assert!(
                (direct - fast).abs() <= 1e-12 * direct.abs().max(1.0),
                "{direct} vs {fast}"
            );
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let n = 3;
        let (g, det, grid) = setup(n);
        let params = FunctionalParams::with_epsilon(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let traj = random_trajectory(grid, n, &mut rng);
        let grad = gradient_objective(&traj, &params, &g, &det).unwrap();
        let f = ActionFunctional::for_trajectory(&traj, &params, &g, &det).unwrap();
        let base = traj.coefficients().to_owned();
        let eps = 1e-6;
        for idx in [[0, 0], [1, 5], [2, 16], [0, 9]] {
            for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[idx] += dir * eps;
                minus[idx] -= dir * eps;
                let fd = (f.value(plus.view()).unwrap() - f.value(minus.view()).unwrap()) / (2.0 * eps);
                let analytic = if dir.re == 1.0 { grad[idx].re } else { grad[idx].im };
                assert!(
                    (fd - analytic).abs() < 1e-6 * fd.abs().max(1.0),
                    "{idx:?}: {fd} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn shape_and_mode_mismatches_are_rejected() {
        let (g, det, grid) = setup(4);
        let params = FunctionalParams::default();
        let traj = CoefficientTrajectory::constant(grid, &[Complex64::new(1.0, 0.0); 3]).unwrap();
        assert!(matches!(
            objective(&traj, &params, &g, &det),
            Err(Error::InvalidDetector(_))
        ));
    }

    #[test]
    fn zero_slice_is_reported() {
        let (g, det, grid) = setup(2);
        let params = FunctionalParams::default();
        let mut c = Array2::from_elem((2, grid.len()), Complex64::new(0.5, 0.0));
        c[[0, 3]] = Complex64::new(0.0, 0.0);
        c[[1, 3]] = Complex64::new(0.0, 0.0);
        let traj = CoefficientTrajectory::new(grid, c).unwrap();
        assert!(matches!(
            objective(&traj, &params, &g, &det),
            Err(Error::ZeroNorm { node: 3 })
        ));
    }
}
