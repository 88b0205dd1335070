use ndarray::{Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::geometry::Epochs;

/// Default number of grid intervals.
pub const DEFAULT_INTERVALS: usize = 256;

/// Uniform grid of `intervals + 1` nodes spanning `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    end: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::Grid("a time grid needs at least one interval".into()));
        }
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::Grid(format!("invalid time span [{start}, {end}]")));
        }
        Ok(TimeGrid { start, end, intervals })
    }

    /// Grid over `[t_i, t_f]` on which `t_a` and `t_b` are nodes.
    pub fn for_epochs(epochs: &Epochs, intervals: usize) -> Result<Self> {
        let grid = Self::new(epochs.t_i, epochs.t_f, intervals)?;
        grid.epoch_nodes(epochs)?;
        Ok(grid)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / self.intervals as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        if m == self.intervals {
            self.end
        } else {
            self.start + self.step() * m as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |m| self.node(m))
    }

    /// Index of the node at `t`, if `t` is a node to within a tiny fraction
    /// of the step.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let x = (t - self.start) / self.step();
        let m = x.round();
        if m < 0.0 || m > self.intervals as f64 || (x - m).abs() > 1e-9 {
            return None;
        }
        Some(m as usize)
    }

    /// Node indices of `t_a` and `t_b`. Fails unless the grid spans exactly
    /// `[t_i, t_f]` and both inner epochs fall on nodes.
    pub fn epoch_nodes(&self, epochs: &Epochs) -> Result<(usize, usize)> {
        let span_tol = 1e-12 * (self.end - self.start).abs().max(1.0);
        if (self.start - epochs.t_i).abs() > span_tol || (self.end - epochs.t_f).abs() > span_tol {
            return Err(Error::Grid(format!(
                "grid spans [{}, {}] but the epochs span [{}, {}]",
                self.start, self.end, epochs.t_i, epochs.t_f
            )));
        }
        let ia = self.node_index(epochs.t_a).ok_or_else(|| {
            Error::Grid(format!(
                "t_a = {} is not a node of a {}-interval grid",
                epochs.t_a, self.intervals
            ))
        })?;
        let ib = self.node_index(epochs.t_b).ok_or_else(|| {
            Error::Grid(format!(
                "t_b = {} is not a node of a {}-interval grid",
                epochs.t_b, self.intervals
            ))
        })?;
        Ok((ia, ib))
    }
}

/// Complex mode coefficients `C[n][m] = C_n(t_m)` on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTrajectory {
    grid: TimeGrid,
    coefficients: Array2<Complex64>,
}

impl CoefficientTrajectory {
    /// `coefficients` has one row per mode and one column per grid node.
    pub fn new(grid: TimeGrid, coefficients: Array2<Complex64>) -> Result<Self> {
        let (modes, nodes) = coefficients.dim();
        if modes == 0 {
            return Err(Error::Grid("a trajectory needs at least one mode".into()));
        }
        if nodes != grid.len() {
            return Err(Error::Grid(format!(
                "trajectory has {nodes} columns but the grid has {} nodes",
                grid.len()
            )));
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Grid("trajectory contains non-finite coefficients".into()));
        }
        Ok(CoefficientTrajectory { grid, coefficients })
    }

    /// Holds `initial` fixed over the whole grid.
    pub fn constant(grid: TimeGrid, initial: &[Complex64]) -> Result<Self> {
        let coefficients = Array2::from_shape_fn((initial.len(), grid.len()), |(n, _)| initial[n]);
        Self::new(grid, coefficients)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn coefficients(&self) -> ArrayView2<'_, Complex64> {
        self.coefficients.view()
    }

    pub fn into_coefficients(self) -> Array2<Complex64> {
        self.coefficients
    }

    /// Coefficients of every mode at node `m`.
    pub fn slice(&self, m: usize) -> ArrayView1<'_, Complex64> {
        self.coefficients.column(m)
    }

    pub fn initial(&self) -> Vec<Complex64> {
        self.slice(0).to_vec()
    }

    /// Λ(t_m) = Σ_n |C_n(t_m)|² at every node.
    pub fn norms(&self) -> Vec<f64> {
        self.coefficients
            .columns()
            .into_iter()
            .map(|col| col.iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }

    pub fn weights(&self) -> Result<Array2<f64>> {
        weights_from_coefficients(self)
    }

    /// Coefficients at an arbitrary time by linear interpolation between
    /// nodes. Times outside the grid clamp to the end slices.
    pub fn interpolate(&self, t: f64) -> Vec<Complex64> {
        let x = ((t - self.grid.start) / self.grid.step()).clamp(0.0, self.grid.intervals as f64);
        let m = (x.floor() as usize).min(self.grid.intervals - 1);
        let frac = x - m as f64;
        (0..self.n_modes())
            .map(|n| {
                let a = self.coefficients[[n, m]];
                let b = self.coefficients[[n, m + 1]];
                a + (b - a) * frac
            })
            .collect()
    }
}

/// Weights `w_n(t_m) = |C_n(t_m)|² / Λ(t_m)`, one row per mode.
pub fn weights_from_coefficients(traj: &CoefficientTrajectory) -> Result<Array2<f64>> {
    let c = traj.coefficients();
    let mut w = c.mapv(|z| z.norm_sqr());
    for (m, mut col) in w.columns_mut().into_iter().enumerate() {
        let lambda: f64 = col.sum();
        if !(lambda > 1e-300) {
            return Err(Error::ZeroNorm { node: m });
        }
        col.mapv_inplace(|x| x / lambda);
    }
    Ok(w)
}
