use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{CoefficientTrajectory, TimeGrid};
use crate::oracle::modes::{AtomStates, SpatialGrid, SyntheticModeSet};
use crate::oracle::surrogate::SurrogateF4;
use crate::oracle::tensors::{
    d_closed_form, d_tensor_all, e_tensor_all, i4_closed_form, i4_identity_direct, su_closed_form, su_offdiagonal_2d,
    su_tensors_direct, DTensor, Epoch, NodeBudget, TimeQuadrature,
};

/// Relative tolerance for the factorized closed forms.
pub const FACTORIZATION_TOLERANCE: f64 = 0.05;
/// Deviation beyond which a factorized form counts as broken.
pub const FACTORIZATION_FAILURE: f64 = 0.15;
/// Tolerance for the one-hot and diagonal cases.
pub const DIAGONAL_TOLERANCE: f64 = 0.02;
/// Tolerance for the Gaussian pair integrals.
pub const VARIANCE_TOLERANCE: f64 = 0.01;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Sizes and window of the oracle suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub budget: NodeBudget,
    pub tau: f64,
    pub n_tau: usize,
    pub time_cells: usize,
    /// Electron and atom grid nodes in the four-point integrals.
    pub spatial_nodes: usize,
    /// Atom grid nodes in the pair integrals.
    pub pair_nodes: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            budget: NodeBudget::default(),
            tau: 0.1,
            n_tau: 1,
            time_cells: 16,
            spatial_nodes: 16,
            pair_nodes: 32,
        }
    }
}

/// One direct-versus-closed-form comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub name: String,
    pub direct: f64,
    pub closed_form: f64,
    /// Scale the deviation is measured against; the closed form unless
    /// that is zero.
    pub reference: f64,
    pub rel_deviation: f64,
    pub tolerance: f64,
    pub failure_threshold: f64,
    pub pass: bool,
}

impl OracleEntry {
    fn new(name: &str, direct: f64, closed_form: f64, reference: f64, tolerance: f64) -> Self {
        let rel_deviation = (direct - closed_form).abs() / reference.abs();
        OracleEntry {
            name: name.to_string(),
            direct,
            closed_form,
            reference,
            rel_deviation,
            tolerance,
            failure_threshold: tolerance.max(if tolerance >= FACTORIZATION_TOLERANCE {
                FACTORIZATION_FAILURE
            } else {
                tolerance
            }),
            pass: rel_deviation <= tolerance,
        }
    }

    fn relative(name: &str, direct: f64, closed_form: f64, tolerance: f64) -> Self {
        Self::new(name, direct, closed_form, closed_form, tolerance)
    }

    /// Fails outright only above the failure threshold.
    pub fn broken(&self) -> bool {
        self.rel_deviation > self.failure_threshold
    }
}

/// Diagonal `E` deviation from `L` as the window half-width shrinks, with
/// the switch time placed inside a time cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSweep {
    pub switch_time: f64,
    pub taus: Vec<f64>,
    pub rel_deviations: Vec<f64>,
    pub monotone: bool,
}

/// Time marginal of the surrogate weight near the edge of the time range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDegradation {
    pub distance_from_edge: Vec<f64>,
    pub marginal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub tau: f64,
    pub time_cells: usize,
    pub spatial_nodes: usize,
    pub entries: Vec<OracleEntry>,
    pub tau_sweep: TauSweep,
    pub edge: EdgeDegradation,
    /// Every entry within tolerance and the sweep monotone.
    pub pass: bool,
}

impl OracleReport {
    pub fn entry(&self, name: &str) -> Option<&OracleEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

const T_START: f64 = 0.0;
const T_END: f64 = 4.0;
const SWITCH: f64 = 2.0;
const TRAJECTORY_INTERVALS: usize = 256;

fn trajectory(c: impl Fn(f64) -> [Complex64; 2]) -> Result<CoefficientTrajectory> {
    let grid = TimeGrid::new(T_START, T_END, TRAJECTORY_INTERVALS)?;
    let mut coeffs = Array2::zeros((2, grid.len()));
    for (m, t) in grid.nodes().enumerate() {
        let v = c(t);
        coeffs[[0, m]] = v[0];
        coeffs[[1, m]] = v[1];
    }
    CoefficientTrajectory::new(grid, coeffs)
}

/// Coefficients with time bandwidth below `0.1 / τ` for `τ ≤ 0.1`, and
/// `Λ ≡ 1`.
fn slow(t: f64) -> [Complex64; 2] {
    [
        Complex64::from_polar((0.3 * t).cos(), 0.2 * t),
        Complex64::from_polar((0.3 * t).sin(), -0.5 * t),
    ]
}

fn mode_set(cfg: &SuiteConfig, times: TimeQuadrature) -> Result<SyntheticModeSet> {
    let grid = SpatialGrid::new(-5.5, 5.5, cfg.spatial_nodes)?;
    let delta = cfg.tau;
    let samples = (0..=4 * cfg.time_cells)
        .map(|k| times.start - delta + k as f64 * (times.length() + 2.0 * delta) / (4 * cfg.time_cells) as f64);
    SyntheticModeSet::new(vec![(-2.5, -0.2), (2.5, 0.2)], T_START, 0.5, grid, samples)
}

fn i4_entry(name: &str, d: &DTensor, e: &crate::oracle::tensors::ETensor, traj: &CoefficientTrajectory) -> OracleEntry {
    OracleEntry::relative(
        name,
        i4_identity_direct(d, e),
        i4_closed_form(traj),
        FACTORIZATION_TOLERANCE,
    )
}

/// Run every oracle comparison.
pub fn run_suite(cfg: &SuiteConfig) -> Result<OracleReport> {
    for (what, n) in [
        ("time nodes", cfg.time_cells),
        ("spatial nodes", cfg.spatial_nodes),
        ("spatial nodes", cfg.pair_nodes),
    ] {
        cfg.budget.check(what, n)?;
    }
    let times = TimeQuadrature {
        start: T_START,
        end: T_END,
        cells: cfg.time_cells,
    };
    let l = times.length();
    let f = SurrogateF4::new(cfg.tau, cfg.n_tau)?;
    let modes = mode_set(cfg, times)?;
    let atoms = AtomStates::new(1.0, SpatialGrid::new(-6.0, 6.0, cfg.spatial_nodes)?)?;
    let mut entries = Vec::new();

    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let half = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let one_hot = trajectory(|_| [one, zero])?;
    let equal = trajectory(|_| [half, half])?;
    let slowly = trajectory(slow)?;

    let d_hot = d_tensor_all(&modes, &one_hot, &f, times, cfg.budget)?;
    let d_equal = d_tensor_all(&modes, &equal, &f, times, cfg.budget)?;
    let d_slow = d_tensor_all(&modes, &slowly, &f, times, cfg.budget)?;
    let e = e_tensor_all(&atoms, SWITCH, &f, times, cfg.budget)?;

    let hot = [0; 4];
    entries.push(OracleEntry::relative(
        "D one-hot diagonal",
        d_hot.get(hot, hot).re,
        l,
        DIAGONAL_TOLERANCE,
    ));
    for (name, i) in [
        ("D slow diagonal 0000", [0, 0, 0, 0]),
        ("D slow diagonal 0101", [0, 1, 0, 1]),
        ("D slow diagonal 1111", [1, 1, 1, 1]),
    ] {
        entries.push(OracleEntry::relative(
            name,
            d_slow.get(i, i).re,
            d_closed_form(&slowly, i, i),
            FACTORIZATION_TOLERANCE,
        ));
    }
    let diag = d_equal.get([0, 1, 0, 1], [0, 1, 0, 1]).re;
    let cross = d_equal.get([0, 1, 0, 1], [1, 1, 0, 1]).norm();
    entries.push(OracleEntry::new("D off-diagonal", cross, 0.0, diag, 1e-6));

    for (name, n, i) in [
        ("E diagonal excited", 0, [0, 0, 0, 0]),
        ("E diagonal ground", 0, [1, 1, 1, 1]),
        ("E diagonal mixed", 1, [0, 1, 1, 0]),
    ] {
        entries.push(OracleEntry::relative(name, e.get(n, i, i), l, DIAGONAL_TOLERANCE));
    }

    entries.push(i4_entry("I4 one-hot", &d_hot, &e, &one_hot));
    entries.push(i4_entry("I4 equal weights", &d_equal, &e, &equal));
    entries.push(i4_entry("I4 slow", &d_slow, &e, &slowly));

    // Scaling C by c scales every D by c⁸; the closed form only holds for Λ = 1.
    let c = 2.0;
    let small = SuiteConfig {
        spatial_nodes: 8,
        time_cells: 8,
        ..*cfg
    };
    let small_times = TimeQuadrature {
        cells: small.time_cells,
        ..times
    };
    let small_modes = mode_set(&small, small_times)?;
    let small_atoms = AtomStates::new(1.0, SpatialGrid::new(-6.0, 6.0, small.spatial_nodes)?)?;
    let small_e = e_tensor_all(&small_atoms, SWITCH, &f, small_times, cfg.budget)?;
    let base = i4_identity_direct(
        &d_tensor_all(&small_modes, &slowly, &f, small_times, cfg.budget)?,
        &small_e,
    );
    let scaled_traj = trajectory(|t| slow(t).map(|z| z * c))?;
    let scaled = i4_identity_direct(
        &d_tensor_all(&small_modes, &scaled_traj, &f, small_times, cfg.budget)?,
        &small_e,
    );
    entries.push(OracleEntry::relative(
        "I4 scaling ratio",
        scaled / base,
        c.powi(8),
        1e-9,
    ));

    let pair_atoms = AtomStates::new(1.0, SpatialGrid::new(-7.0, 7.0, cfg.pair_nodes)?)?;
    entries.push(OracleEntry::new(
        "phi theta overlap",
        pair_atoms.overlap().abs(),
        0.0,
        1.0,
        1e-10,
    ));
    for (name, epoch, n, i, j) in [
        ("S/U before switch", Epoch::BeforeSwitch, 0, 0, 0),
        ("S/U after switch excited", Epoch::AfterSwitch, 0, 0, 0),
        ("S/U after switch mixed", Epoch::AfterSwitch, 0, 0, 1),
        ("S/U after switch ground", Epoch::AfterSwitch, 0, 1, 1),
    ] {
        let direct = su_tensors_direct(&pair_atoms, n, i, j, epoch, cfg.budget)?;
        let closed = su_closed_form(&pair_atoms, n, i, j, epoch);
        entries.push(OracleEntry::relative(
            &format!("{name} S"),
            direct.s,
            closed.s,
            VARIANCE_TOLERANCE,
        ));
        entries.push(OracleEntry::relative(
            &format!("{name} U"),
            direct.u,
            closed.u,
            VARIANCE_TOLERANCE,
        ));
    }
    let [s12, u12, s11, u11] = su_offdiagonal_2d(&atoms_2d(cfg)?, 0, 0, 1, Epoch::AfterSwitch, cfg.budget)?;
    entries.push(OracleEntry::new("S off-diagonal 2-D", s12, 0.0, s11, 1e-10));
    entries.push(OracleEntry::new("U off-diagonal 2-D", u12, 0.0, u11, 1e-10));

    let interior = f.marginal(SWITCH, &[0.0, 0.3, -0.7, 1.9], (T_START, T_END));
    entries.push(OracleEntry::relative(
        "f4 interior normalization",
        interior,
        1.0,
        NORMALIZATION_TOLERANCE,
    ));

    let tau_sweep = sweep(cfg)?;
    let edge = edge_degradation(&f);
    let pass = entries.iter().all(|e| e.pass) && tau_sweep.monotone;
    Ok(OracleReport {
        tau: cfg.tau,
        time_cells: cfg.time_cells,
        spatial_nodes: cfg.spatial_nodes,
        entries,
        tau_sweep,
        edge,
        pass,
    })
}

fn atoms_2d(cfg: &SuiteConfig) -> Result<AtomStates> {
    AtomStates::new(1.0, SpatialGrid::new(-6.0, 6.0, cfg.spatial_nodes)?)
}

/// Switch time for the sweep, just below a cell midpoint so that negative
/// offsets of the wider windows reach across it.
const SWEEP_SWITCH: f64 = 2.09;

fn sweep(cfg: &SuiteConfig) -> Result<TauSweep> {
    let times = TimeQuadrature {
        start: T_START,
        end: T_END,
        cells: cfg.time_cells,
    };
    let atoms = AtomStates::new(1.0, SpatialGrid::new(-6.0, 6.0, cfg.spatial_nodes)?)?;
    let h = times.step();
    let taus: Vec<f64> = [0.4, 0.2, 0.1].iter().map(|r| r * h).collect();
    let mut rel_deviations = Vec::new();
    for &tau in &taus {
        let f = SurrogateF4::new(tau, 2)?;
        let e = e_tensor_all(&atoms, SWEEP_SWITCH, &f, times, cfg.budget)?;
        let diag = [0; 4];
        rel_deviations.push((e.get(0, diag, diag) - times.length()).abs() / times.length());
    }
    let monotone = rel_deviations.windows(2).all(|w| w[1] < w[0]);
    Ok(TauSweep {
        switch_time: SWEEP_SWITCH,
        taus,
        rel_deviations,
        monotone,
    })
}

fn edge_degradation(f: &SurrogateF4) -> EdgeDegradation {
    let y = [0.0, 0.3, -0.7, 1.9];
    let distance_from_edge: Vec<f64> = (0..=4).map(|k| k as f64 * 0.25 * f.tau()).collect();
    let marginal = distance_from_edge
        .iter()
        .map(|&d| f.marginal(T_START + d, &y, (T_START, T_END)))
        .collect();
    EdgeDegradation {
        distance_from_edge,
        marginal,
    }
}
