use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::CoefficientTrajectory;
use crate::oracle::modes::{AtomStates, SpatialGrid, SyntheticModeSet};
use crate::oracle::surrogate::SurrogateF4;

/// Largest node count the oracle accepts along any one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeBudget {
    pub per_coordinate: usize,
}

impl Default for NodeBudget {
    fn default() -> Self {
        NodeBudget { per_coordinate: 32 }
    }
}

impl NodeBudget {
    pub fn check(&self, what: &'static str, requested: usize) -> Result<()> {
        if requested > self.per_coordinate {
            return Err(Error::Resource {
                what,
                requested,
                budget: self.per_coordinate,
            });
        }
        Ok(())
    }
}

/// Midpoint rule over `cells` equal cells of `[start, end]` for the time
/// of the first point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeQuadrature {
    pub start: f64,
    pub end: f64,
    pub cells: usize,
}

impl TimeQuadrature {
    pub fn step(&self) -> f64 {
        (self.end - self.start) / self.cells as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.cells).map(move |c| self.start + (c as f64 + 0.5) * h)
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

pub(crate) trait Scalar:
    Copy + Add<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
    fn zero() -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

/// Brute-force evaluation of
/// `∫dt₁ Σ_{o₂,o₃,o₄} δ³ Σ_{y₁..y₄} h⁴ f₄ Π_k g_{a_k}(t₁ + o_k δ, y_k)`
/// for every tuple of factor types `(a₁, a₂, a₃, a₄)` at once.
struct Engine<'a> {
    times: TimeQuadrature,
    grid: &'a SpatialGrid,
    f: &'a SurrogateF4,
}

impl<'a> Engine<'a> {
    fn new(times: TimeQuadrature, grid: &'a SpatialGrid, f: &'a SurrogateF4, budget: NodeBudget) -> Result<Self> {
        budget.check("time nodes", times.cells)?;
        budget.check("spatial nodes", grid.len())?;
        if !(times.end > times.start) || times.cells == 0 {
            return Err(Error::Grid(
                "time quadrature needs a positive range and at least one cell".into(),
            ));
        }
        if f.tau() >= 0.5 * times.step() {
            return Err(Error::InvalidParams(format!(
                "window half-width {} must stay below half a time cell ({})",
                f.tau(),
                0.5 * times.step()
            )));
        }
        Ok(Engine { times, grid, f })
    }

    /// `eval(t, out)` fills `out[y * types + a]` with `g_a(t, y)`. Result
    /// entry `((a₁ T + a₂) T + a₃) T + a₄` holds the integral for that
    /// tuple.
    fn integrate<T: Scalar>(&self, types: usize, mut eval: impl FnMut(f64, &mut [T])) -> Vec<T> {
        let ny = self.grid.len();
        let n = self.f.n_tau() as i64;
        let levels = (2 * n + 1) as usize;
        let delta = self.f.delta();
        let y = self.grid.nodes();
        let cap: Vec<Vec<i64>> = y
            .iter()
            .map(|a| y.iter().map(|b| self.f.cap(a - b) as i64).collect())
            .collect();
        let base = self.times.step() * self.grid.spacing().powi(4);

        let t2 = types * types;
        let t3 = t2 * types;
        let mut acc = vec![T::zero(); t3 * types];
        let mut table = vec![T::zero(); levels * ny * types];
        let mut p12 = vec![T::zero(); t2];
        let mut p123 = vec![T::zero(); t3];
        let mut s4 = vec![T::zero(); types];

        for t1 in self.times.nodes() {
            for lvl in 0..levels {
                let t = t1 + (lvl as i64 - n) as f64 * delta;
                eval(t, &mut table[lvl * ny * types..(lvl + 1) * ny * types]);
            }
            let at = |o: i64, iy: usize| {
                let start = ((o + n) as usize * ny + iy) * types;
                start..start + types
            };
            for y1 in 0..ny {
                let v1 = &table[at(0, y1)];
                for y2 in 0..ny {
                    let c12 = cap[y1][y2];
                    for o2 in -c12..=c12 {
                        let v2 = &table[at(o2, y2)];
                        for a in 0..types {
                            for b in 0..types {
                                p12[a * types + b] = v1[a] * v2[b];
                            }
                        }
                        for y3 in 0..ny {
                            let (c13, c23) = (cap[y1][y3], cap[y2][y3]);
                            for o3 in (-c13).max(o2 - c23)..=c13.min(o2 + c23) {
                                let v3 = &table[at(o3, y3)];
                                for ab in 0..t2 {
                                    for c in 0..types {
                                        p123[ab * types + c] = p12[ab] * v3[c];
                                    }
                                }
                                for y4 in 0..ny {
                                    let (c14, c24, c34) = (cap[y1][y4], cap[y2][y4], cap[y3][y4]);
                                    let lo = (-c14).max(o2 - c24).max(o3 - c34);
                                    let hi = c14.min(o2 + c24).min(o3 + c34);
                                    if lo > hi {
                                        continue;
                                    }
                                    s4.iter_mut().for_each(|s| *s = T::zero());
                                    for o4 in lo..=hi {
                                        for (s, v) in s4.iter_mut().zip(&table[at(o4, y4)]) {
                                            *s += *v;
                                        }
                                    }
                                    let caps = [c12, c13, c14, c23, c24, c34].map(|c| c as usize);
                                    let w = base / self.f.count(&caps) as f64;
                                    for abc in 0..t3 {
                                        let p = p123[abc] * w;
                                        let row = &mut acc[abc * types..(abc + 1) * types];
                                        for (r, s) in row.iter_mut().zip(&s4) {
                                            *r += p * *s;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        acc
    }
}

fn tuple_index(types: usize, a: [usize; 4]) -> usize {
    ((a[0] * types + a[1]) * types + a[2]) * types + a[3]
}

/// Direct values of `D_{i₁..i₄ j₁..j₄}` for every index octuple.
#[derive(Debug, Clone)]
pub struct DTensor {
    n_modes: usize,
    values: Vec<Complex64>,
}

impl DTensor {
    pub fn get(&self, i: [usize; 4], j: [usize; 4]) -> Complex64 {
        let types = self.n_modes * self.n_modes;
        let a = [0, 1, 2, 3].map(|k| i[k] * self.n_modes + j[k]);
        self.values[tuple_index(types, a)]
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
}

fn check_modes(modes: &SyntheticModeSet, traj: &CoefficientTrajectory) -> Result<()> {
    if modes.n_modes() != traj.n_modes() {
        return Err(Error::InvalidParams(format!(
            "{} packets but {} coefficient rows",
            modes.n_modes(),
            traj.n_modes()
        )));
    }
    Ok(())
}

/// All of `D` by direct quadrature. The integrand at each point is
/// `C*_i C_j ξ_i ξ_j` with packets and coefficients taken at that point's
/// own time.
pub fn d_tensor_all(
    modes: &SyntheticModeSet,
    traj: &CoefficientTrajectory,
    f: &SurrogateF4,
    times: TimeQuadrature,
    budget: NodeBudget,
) -> Result<DTensor> {
    check_modes(modes, traj)?;
    let n = modes.n_modes();
    let engine = Engine::new(times, modes.grid(), f, budget)?;
    let types = n * n;
    let values = engine.integrate::<Complex64>(types, |t, out| {
        let c = traj.interpolate(t);
        let xi = modes.packets(t);
        for iy in 0..modes.grid().len() {
            for i in 0..n {
                for j in 0..n {
                    out[iy * types + i * n + j] = c[i].conj() * c[j] * (xi[i][iy] * xi[j][iy]);
                }
            }
        }
    });
    Ok(DTensor { n_modes: n, values })
}

/// One entry of `D` by direct quadrature.
pub fn d_tensor_direct(
    modes: &SyntheticModeSet,
    traj: &CoefficientTrajectory,
    f: &SurrogateF4,
    times: TimeQuadrature,
    i: [usize; 4],
    j: [usize; 4],
    budget: NodeBudget,
) -> Result<Complex64> {
    check_modes(modes, traj)?;
    let n = modes.n_modes();
    if i.iter().chain(&j).any(|&m| m >= n) {
        return Err(Error::InvalidParams(format!("mode index out of range for {n} modes")));
    }
    let engine = Engine::new(times, modes.grid(), f, budget)?;
    let values = engine.integrate::<Complex64>(4, |t, out| {
        let c = traj.interpolate(t);
        let xi = modes.packets(t);
        for iy in 0..modes.grid().len() {
            for k in 0..4 {
                out[iy * 4 + k] = c[i[k]].conj() * c[j[k]] * (xi[i[k]][iy] * xi[j[k]][iy]);
            }
        }
    });
    Ok(values[tuple_index(4, [0, 1, 2, 3])])
}

/// Subsamples per trajectory interval in the closed-form time integrals.
const CLOSED_FORM_SUBSAMPLES: usize = 64;

/// `∫ g(t) dt` over the trajectory's span with a fine midpoint rule on
/// its interpolant.
fn integrate_trajectory(traj: &CoefficientTrajectory, mut g: impl FnMut(&[Complex64]) -> f64) -> f64 {
    let grid = traj.grid();
    let samples = grid.intervals() * CLOSED_FORM_SUBSAMPLES;
    let dt = (grid.end() - grid.start()) / samples as f64;
    (0..samples)
        .map(|s| g(&traj.interpolate(grid.start() + (s as f64 + 0.5) * dt)))
        .sum::<f64>()
        * dt
}

/// Factorized `D = δ_{ij} ∫ Π_k |C_{i_k}(t)|² dt`.
pub fn d_closed_form(traj: &CoefficientTrajectory, i: [usize; 4], j: [usize; 4]) -> f64 {
    if i != j {
        return 0.0;
    }
    integrate_trajectory(traj, |c| i.iter().map(|&m| c[m].norm_sqr()).product())
}

/// Closed form of the four-point normalization integral,
/// `L^{N_modes} ∫ Λ(t)⁴ dt`.
pub fn i4_closed_form(traj: &CoefficientTrajectory) -> f64 {
    let grid = traj.grid();
    let l = grid.end() - grid.start();
    l.powi(traj.n_modes() as i32) * integrate_trajectory(traj, |c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().powi(4))
}

/// Per-point atom factor for atom `n`: which of the two indices at that
/// point equal `n`. Index `2 [i == n] + [j == n]`.
fn pattern(n: usize, i: usize, j: usize) -> usize {
    2 * usize::from(i == n) + usize::from(j == n)
}

/// Direct values of `E_n` for every pattern tuple. Each point contributes
/// `α_i α_j` with `α = η` for the excited atom's own index and `φ`
/// otherwise, where `η` switches from `φ` to `θ` at `switch_time`.
#[derive(Debug, Clone)]
pub struct ETensor {
    values: Vec<f64>,
}

impl ETensor {
    pub fn get(&self, n: usize, i: [usize; 4], j: [usize; 4]) -> f64 {
        let a = [0, 1, 2, 3].map(|k| pattern(n, i[k], j[k]));
        self.values[tuple_index(4, a)]
    }
}

pub fn e_tensor_all(
    atoms: &AtomStates,
    switch_time: f64,
    f: &SurrogateF4,
    times: TimeQuadrature,
    budget: NodeBudget,
) -> Result<ETensor> {
    let engine = Engine::new(times, atoms.grid(), f, budget)?;
    let (phi, theta) = atoms.sampled();
    let values = engine.integrate::<f64>(4, |t, out| {
        let eta = if t < switch_time { &phi } else { &theta };
        for iy in 0..phi.len() {
            let (p, e) = (phi[iy], eta[iy]);
            out[iy * 4] = p * p;
            out[iy * 4 + 1] = p * e;
            out[iy * 4 + 2] = e * p;
            out[iy * 4 + 3] = e * e;
        }
    });
    Ok(ETensor { values })
}

/// One entry of `E_n` by direct quadrature.
#[allow(clippy::too_many_arguments)]
pub fn e_tensor_direct(
    atoms: &AtomStates,
    switch_time: f64,
    f: &SurrogateF4,
    times: TimeQuadrature,
    n: usize,
    i: [usize; 4],
    j: [usize; 4],
    budget: NodeBudget,
) -> Result<f64> {
    Ok(e_tensor_all(atoms, switch_time, f, times, budget)?.get(n, i, j))
}

/// `Σ_{i,j} D_{ij} Π_n E_{n,ij}` over all index octuples.
pub fn i4_identity_direct(d: &DTensor, e: &ETensor) -> f64 {
    let n = d.n_modes();
    let mut total = Complex64::new(0.0, 0.0);
    let count = n.pow(8);
    for code in 0..count {
        let mut rest = code;
        let mut idx = [0usize; 8];
        for slot in idx.iter_mut() {
            *slot = rest % n;
            rest /= n;
        }
        let i = [idx[0], idx[1], idx[2], idx[3]];
        let j = [idx[4], idx[5], idx[6], idx[7]];
        let atoms: f64 = (0..n).map(|a| e.get(a, i, j)).product();
        total += d.get(i, j) * atoms;
    }
    total.re
}

/// Before or after the atoms' switch time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Epoch {
    BeforeSwitch,
    AfterSwitch,
}

/// Position and momentum pair integrals `S_{nij}`, `U_{nij}` of atom `n`
/// along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairIntegrals {
    pub s: f64,
    pub u: f64,
}

type StateFn = fn(&AtomStates, f64) -> f64;

fn state_for(n: usize, i: usize, epoch: Epoch) -> (StateFn, StateFn) {
    if i == n && epoch == Epoch::AfterSwitch {
        (AtomStates::theta_at, AtomStates::dtheta_at)
    } else {
        (AtomStates::phi_at, AtomStates::dphi_at)
    }
}

/// `S = ∫∫ |α_i(y)|² |α_j(z)|² (y − z)²` and
/// `U = ∫∫ |(∂_y − ∂_z) α_i(y) α_j(z)|²` on the atom grid.
pub fn su_tensors_direct(
    atoms: &AtomStates,
    n: usize,
    i: usize,
    j: usize,
    epoch: Epoch,
    budget: NodeBudget,
) -> Result<PairIntegrals> {
    budget.check("spatial nodes", atoms.grid().len())?;
    let (ai, dai) = state_for(n, i, epoch);
    let (aj, daj) = state_for(n, j, epoch);
    let y = atoms.grid().nodes();
    let h2 = atoms.grid().spacing().powi(2);
    let (mut s, mut u) = (0.0, 0.0);
    for &a in y {
        let (va, da) = (ai(atoms, a), dai(atoms, a));
        for &b in y {
            let (vb, db) = (aj(atoms, b), daj(atoms, b));
            s += (va * vb).powi(2) * (a - b).powi(2);
            u += (da * vb - va * db).powi(2);
        }
    }
    Ok(PairIntegrals { s: s * h2, u: u * h2 })
}

/// Closed-form values `2 δx²`, `2 δp²` for the same pair.
pub fn su_closed_form(atoms: &AtomStates, n: usize, i: usize, j: usize, epoch: Epoch) -> PairIntegrals {
    let v = atoms.variances();
    let excited = |m: usize| m == n && epoch == Epoch::AfterSwitch;
    let (dx2, dp2) = match (excited(i), excited(j)) {
        (false, false) => (v.dx2_phi, v.dp2_phi),
        (true, true) => (v.dx2_theta, v.dp2_theta),
        _ => (v.dx2_phi_theta, v.dp2_phi_theta),
    };
    PairIntegrals {
        s: 2.0 * dx2,
        u: 2.0 * dp2,
    }
}

/// Off-diagonal components in two dimensions for a product state
/// `a(y¹) φ(y²)` on atom `n`. Returns `(S¹², U¹², S¹¹, U¹¹)`.
pub fn su_offdiagonal_2d(
    atoms: &AtomStates,
    n: usize,
    i: usize,
    j: usize,
    epoch: Epoch,
    budget: NodeBudget,
) -> Result<[f64; 4]> {
    budget.check("spatial nodes", atoms.grid().len())?;
    let (ai, dai) = state_for(n, i, epoch);
    let (aj, daj) = state_for(n, j, epoch);
    let y = atoms.grid().nodes();
    let sample = |f: StateFn| -> Vec<f64> { y.iter().map(|&v| f(atoms, v)).collect() };
    let (pi, dpi, pj, dpj) = (sample(ai), sample(dai), sample(aj), sample(daj));
    let (g, dg) = (sample(AtomStates::phi_at), sample(AtomStates::dphi_at));
    let h4 = atoms.grid().spacing().powi(4);
    let mut out = [0.0; 4];
    for (&yv1, (&a1, &da1)) in y.iter().zip(pi.iter().zip(&dpi)) {
        for (y2, &yv2) in y.iter().enumerate() {
            let (b2, db2) = (g[y2], dg[y2]);
            for (z1, &zv1) in y.iter().enumerate() {
                let (c1, dc1) = (pj[z1], dpj[z1]);
                for (z2, &zv2) in y.iter().enumerate() {
                    let (e2, de2) = (g[z2], dg[z2]);
                    // Φ = α_i(y¹, y²) α_j(z¹, z²), real.
                    let phi = a1 * b2 * c1 * e2;
                    let d1 = da1 * b2 * c1 * e2 - a1 * b2 * dc1 * e2;
                    let d2 = a1 * db2 * c1 * e2 - a1 * b2 * c1 * de2;
                    let rho = phi * phi;
                    out[0] += rho * (yv1 - zv1) * (yv2 - zv2);
                    out[1] += d1 * d2;
                    out[2] += rho * (yv1 - zv1).powi(2);
                    out[3] += d1 * d1;
                }
            }
        }
    }
    Ok(out.map(|x| x * h4))
}
