use crate::error::{Error, Result};

/// A point in the lab frame, `[x¹, x², x³]`. The slit barrier is the plane
/// `x¹ = 0` and the screen is the plane `x¹ = X`.
pub type Vec3 = [f64; 3];

/// The four epoch times of one run: launch, slit passage, arrival at the
/// screen and the end of the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epochs {
    pub t_i: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub t_f: f64,
}

impl Epochs {
    pub fn new(t_i: f64, t_a: f64, t_b: f64, t_f: f64) -> Result<Self> {
        let epochs = Epochs { t_i, t_a, t_b, t_f };
        epochs.validate()?;
        Ok(epochs)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.t_i, self.t_a, self.t_b, self.t_f];
        if all.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGeometry("epoch times must be finite".into()));
        }
        if !(self.t_i < self.t_a && self.t_a < self.t_b && self.t_b < self.t_f) {
            return Err(Error::InvalidGeometry(format!(
                "epochs must satisfy t_i < t_a < t_b < t_f, got ({}, {}, {}, {})",
                self.t_i, self.t_a, self.t_b, self.t_f
            )));
        }
        Ok(())
    }

    pub fn lengths(&self) -> EpochLengths {
        let l1 = self.t_a - self.t_i;
        let l2 = self.t_b - self.t_a;
        let l3 = self.t_f - self.t_b;
        EpochLengths {
            l1,
            l2,
            l3,
            total: self.t_f - self.t_i,
        }
    }
}

/// Durations of the three regions: before the slits, in flight, after the
/// screen. `total` is `t_f - t_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLengths {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub total: f64,
}

/// Slit and screen layout together with the detector atoms' equilibrium
/// positions.
///
/// Atoms are indexed from zero. Atom `n` here is atom `n + 2` in the
/// one-based numbering that reserves index 1 for the electron.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGeometry {
    atom_positions: Vec<Vec3>,
    screen_distance: f64,
    slit_separation: f64,
    slit_width: f64,
    epochs: Epochs,
}

impl ExperimentGeometry {
    pub fn new(
        atom_positions: Vec<Vec3>,
        screen_distance: f64,
        slit_separation: f64,
        slit_width: f64,
        epochs: Epochs,
    ) -> Result<Self> {
        epochs.validate()?;
        if !(screen_distance.is_finite() && screen_distance > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "screen distance must be positive, got {screen_distance}"
            )));
        }
        if !(slit_separation.is_finite() && slit_separation > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "slit separation must be positive, got {slit_separation}"
            )));
        }
        if !(slit_width.is_finite() && slit_width >= 0.0 && slit_width < slit_separation) {
            return Err(Error::InvalidGeometry(format!(
                "slit width must lie in [0, d), got {slit_width}"
            )));
        }
        if atom_positions.len() < 2 {
            return Err(Error::InvalidGeometry(format!(
                "at least two atoms are required, got {}",
                atom_positions.len()
            )));
        }
        let plane_tol = 1e-12 * screen_distance.abs().max(1.0);
        for (n, b) in atom_positions.iter().enumerate() {
            if b.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidGeometry(format!("atom {n} has a non-finite coordinate")));
            }
            if (b[0] - screen_distance).abs() > plane_tol {
                return Err(Error::InvalidGeometry(format!(
                    "atom {n} lies at x¹ = {} but the screen is at x¹ = {screen_distance}",
                    b[0]
                )));
            }
        }
        for i in 0..atom_positions.len() {
            for j in (i + 1)..atom_positions.len() {
                if atom_positions[i] == atom_positions[j] {
                    return Err(Error::InvalidGeometry(format!(
                        "atoms {i} and {j} share the position {:?}",
                        atom_positions[i]
                    )));
                }
            }
        }
        Ok(ExperimentGeometry {
            atom_positions,
            screen_distance,
            slit_separation,
            slit_width,
            epochs,
        })
    }

    /// `count` atoms equally spaced along x² between `y_min` and `y_max`
    /// (inclusive) in the screen plane.
    pub fn uniform_screen(
        count: usize,
        y_min: f64,
        y_max: f64,
        screen_distance: f64,
        slit_separation: f64,
        slit_width: f64,
        epochs: Epochs,
    ) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidGeometry(
                "a uniform screen needs at least two atoms".into(),
            ));
        }
        if !(y_max > y_min) {
            return Err(Error::InvalidGeometry(format!(
                "screen extent must satisfy y_min < y_max, got [{y_min}, {y_max}]"
            )));
        }
        // Written about the centre so that a symmetric extent gives an exactly
        // mirror-symmetric layout.
        let centre = 0.5 * (y_min + y_max);
        let half = 0.5 * (y_max - y_min);
        let last = (count - 1) as f64;
        let atoms = (0..count)
            .map(|n| [screen_distance, centre + half * ((2 * n) as f64 - last) / last, 0.0])
            .collect();
        Self::new(atoms, screen_distance, slit_separation, slit_width, epochs)
    }

    pub fn atom_positions(&self) -> &[Vec3] {
        &self.atom_positions
    }

    pub fn atom_count(&self) -> usize {
        self.atom_positions.len()
    }

    pub fn screen_distance(&self) -> f64 {
        self.screen_distance
    }

    pub fn slit_separation(&self) -> f64 {
        self.slit_separation
    }

    pub fn slit_width(&self) -> f64 {
        self.slit_width
    }

    pub fn epochs(&self) -> &Epochs {
        &self.epochs
    }

    pub fn epoch_lengths(&self) -> EpochLengths {
        self.epochs.lengths()
    }
}

/// Durations `(L1, L2, L3, L)` of the three regions and their sum.
pub fn epoch_lengths(geometry: &ExperimentGeometry) -> EpochLengths {
    geometry.epoch_lengths()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atoms(epochs: Epochs) -> Result<ExperimentGeometry> {
        ExperimentGeometry::new(vec![[5.0, -1.0, 0.0], [5.0, 1.0, 0.0]], 5.0, 1.0, 0.1, epochs)
    }

    #[test]
    fn epoch_lengths_unit_steps() {
        let g = two_atoms(Epochs::new(0.0, 1.0, 2.0, 3.0).unwrap()).unwrap();
        let l = epoch_lengths(&g);
        assert_eq!((l.l1, l.l2, l.l3, l.total), (1.0, 1.0, 1.0, 3.0));
    }

    #[test]
    fn epoch_lengths_uneven() {
        let g = two_atoms(Epochs::new(0.0, 0.5, 2.5, 3.0).unwrap()).unwrap();
        let l = epoch_lengths(&g);
        assert_eq!((l.l1, l.l2, l.l3, l.total), (0.5, 2.0, 0.5, 3.0));
    }

    #[test]
    fn degenerate_epochs_rejected() {
        assert!(matches!(
            Epochs::new(0.0, 0.0, 1.0, 2.0),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(Epochs::new(0.0, 2.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn atoms_must_sit_on_the_screen() {
        let epochs = Epochs::new(0.0, 1.0, 2.0, 3.0).unwrap();
        let err = ExperimentGeometry::new(vec![[5.0, 0.0, 0.0], [4.0, 1.0, 0.0]], 5.0, 1.0, 0.1, epochs);
        assert!(err.is_err());
    }

    #[test]
    fn duplicate_and_too_few_atoms_rejected() {
        let epochs = Epochs::new(0.0, 1.0, 2.0, 3.0).unwrap();
        assert!(ExperimentGeometry::new(vec![[5.0, 0.0, 0.0]], 5.0, 1.0, 0.1, epochs).is_err());
        assert!(ExperimentGeometry::new(vec![[5.0, 0.0, 0.0], [5.0, 0.0, 0.0]], 5.0, 1.0, 0.1, epochs).is_err());
    }

    #[test]
    fn uniform_screen_is_symmetric() {
        let epochs = Epochs::new(0.0, 1.0, 2.0, 4.0).unwrap();
        let g = ExperimentGeometry::uniform_screen(5, -2.0, 2.0, 10.0, 1.0, 0.2, epochs).unwrap();
        let ys: Vec<f64> = g.atom_positions().iter().map(|b| b[1]).collect();
        assert_eq!(ys, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }
}
