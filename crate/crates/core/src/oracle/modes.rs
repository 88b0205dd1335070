use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest discrete overlap allowed between packets of different modes.
pub const MAX_PACKET_OVERLAP: f64 = 1e-8;

/// Uniform 1-D spatial grid for trapezoid-free sums (`Σ h g(y_j)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    nodes: Vec<f64>,
    spacing: f64,
}

impl SpatialGrid {
    /// `count` nodes from `start` to `end` inclusive.
    pub fn new(start: f64, end: f64, count: usize) -> Result<Self> {
        if count < 2 || !(end > start) {
            return Err(Error::Grid(format!(
                "spatial grid needs two or more nodes over a positive range, got {count} over [{start}, {end}]"
            )));
        }
        let spacing = (end - start) / (count - 1) as f64;
        let last = (count - 1) as f64;
        let nodes = (0..count)
            .map(|j| {
                let x = j as f64;
                // Symmetric ranges give exactly mirrored nodes.
                0.5 * (start + end) + 0.5 * (end - start) * (2.0 * x - last) / last
            })
            .collect();
        Ok(SpatialGrid { nodes, spacing })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// Gaussian electron packets `ξ_n(t, y) ∝ exp(−(y − c_n(t))² / 2σ²)` with
/// linearly moving centres, normalized on the grid at every time.
#[derive(Debug, Clone)]
pub struct SyntheticModeSet {
    /// `(c_n(t_0), velocity)` for each mode.
    centers: Vec<(f64, f64)>,
    t0: f64,
    sigma: f64,
    grid: SpatialGrid,
}

impl SyntheticModeSet {
    /// Fails if modes overlap by more than [`MAX_PACKET_OVERLAP`] anywhere
    /// in `times`.
    pub fn new(
        centers: Vec<(f64, f64)>,
        t0: f64,
        sigma: f64,
        grid: SpatialGrid,
        times: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        if centers.is_empty() || centers.len() > 4 {
            return Err(Error::InvalidParams(format!(
                "synthetic mode sets hold 1 to 4 modes, got {}",
                centers.len()
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "packet width must be positive, got {sigma}"
            )));
        }
        let set = SyntheticModeSet {
            centers,
            t0,
            sigma,
            grid,
        };
        for t in times {
            let packets = set.packets(t);
            for m in 0..packets.len() {
                for n in 0..m {
                    let overlap: f64 =
                        packets[m].iter().zip(&packets[n]).map(|(a, b)| a * b).sum::<f64>() * set.grid.spacing;
                    if overlap.abs() > MAX_PACKET_OVERLAP {
                        return Err(Error::InvalidParams(format!(
                            "packets {n} and {m} overlap by {overlap:e} at t = {t}"
                        )));
                    }
                }
            }
        }
        Ok(set)
    }

    pub fn n_modes(&self) -> usize {
        self.centers.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn center(&self, n: usize, t: f64) -> f64 {
        let (c, v) = self.centers[n];
        c + v * (t - self.t0)
    }

    /// `ξ_n(t, y_j)` for every mode and node.
    pub fn packets(&self, t: f64) -> Vec<Vec<f64>> {
        (0..self.n_modes())
            .map(|n| {
                let c = self.center(n, t);
                let raw: Vec<f64> = self
                    .grid
                    .nodes
                    .iter()
                    .map(|y| (-(y - c).powi(2) / (2.0 * self.sigma * self.sigma)).exp())
                    .collect();
                let norm = (raw.iter().map(|x| x * x).sum::<f64>() * self.grid.spacing).sqrt();
                raw.into_iter().map(|x| x / norm).collect()
            })
            .collect()
    }
}

/// Ground state `φ` and first excited state `θ` of a 1-D oscillator of
/// length scale `s`, sampled with their derivatives.
#[derive(Debug, Clone)]
pub struct AtomStates {
    s: f64,
    grid: SpatialGrid,
}

/// Closed-form variances of the two states, in the doubled pair-integral
/// convention halved back to single-state values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomVariances {
    pub dx2_phi: f64,
    pub dx2_theta: f64,
    pub dx2_phi_theta: f64,
    pub dp2_phi: f64,
    pub dp2_theta: f64,
    pub dp2_phi_theta: f64,
}

impl AtomStates {
    pub fn new(s: f64, grid: SpatialGrid) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParams(format!(
                "atom length scale must be positive, got {s}"
            )));
        }
        Ok(AtomStates { s, grid })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn phi_at(&self, y: f64) -> f64 {
        (PI * self.s * self.s).powf(-0.25) * (-y * y / (2.0 * self.s * self.s)).exp()
    }

    pub fn theta_at(&self, y: f64) -> f64 {
        self.phi_at(y) * std::f64::consts::SQRT_2 * y / self.s
    }

    pub fn dphi_at(&self, y: f64) -> f64 {
        -y / (self.s * self.s) * self.phi_at(y)
    }

    pub fn dtheta_at(&self, y: f64) -> f64 {
        let s2 = self.s * self.s;
        std::f64::consts::SQRT_2 / self.s * self.phi_at(y) * (1.0 - y * y / s2)
    }

    /// `(φ, θ)` on the grid.
    pub fn sampled(&self) -> (Vec<f64>, Vec<f64>) {
        let phi = self.grid.nodes.iter().map(|&y| self.phi_at(y)).collect();
        let theta = self.grid.nodes.iter().map(|&y| self.theta_at(y)).collect();
        (phi, theta)
    }

    pub fn variances(&self) -> AtomVariances {
        let s2 = self.s * self.s;
        AtomVariances {
            dx2_phi: 0.5 * s2,
            dx2_theta: 1.5 * s2,
            dx2_phi_theta: s2,
            dp2_phi: 0.5 / s2,
            dp2_theta: 1.5 / s2,
            dp2_phi_theta: 1.0 / s2,
        }
    }

    /// `⟨φ|θ⟩` on the grid.
    pub fn overlap(&self) -> f64 {
        let (phi, theta) = self.sampled();
        phi.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>() * self.grid.spacing
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_states_are_orthonormal_on_a_symmetric_grid() {
        let atoms = AtomStates::new(1.0, SpatialGrid::new(-7.0, 7.0, 29).unwrap()).unwrap();
        let (phi, theta) = atoms.sampled();
        let h = atoms.grid().spacing();
        let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() * h;
        assert!((n(&phi) - 1.0).abs() < 1e-10);
        assert!((n(&theta) - 1.0).abs() < 1e-10);
        assert!(atoms.overlap().abs() < 1e-10);
    }

    #[test]
    fn derivatives_match_differences() {
        let atoms = AtomStates::new(0.8, SpatialGrid::new(-1.0, 1.0, 3).unwrap()).unwrap();
        let e = 1e-6;
        for y in [-1.3, 0.2, 0.9] {
            let fd = (atoms.phi_at(y + e) - atoms.phi_at(y - e)) / (2.0 * e);
            assert!((fd - atoms.dphi_at(y)).abs() < 1e-8);
            let fd = (atoms.theta_at(y + e) - atoms.theta_at(y - e)) / (2.0 * e);
            assert!((fd - atoms.dtheta_at(y)).abs() < 1e-8);
        }
    }

    #[test]
    fn close_packets_are_rejected() {
        let grid = SpatialGrid::new(-10.0, 10.0, 41).unwrap();
        let close = SyntheticModeSet::new(vec![(-3.0, 0.0), (3.0, 0.0)], 0.0, 1.0, grid.clone(), [0.0]);
        assert!(close.is_err());
        let far = SyntheticModeSet::new(vec![(-5.0, 0.0), (5.0, 0.0)], 0.0, 1.0, grid, [0.0]);
        assert!(far.is_ok());
    }
}
