use crate::error::{Error, Result};
use crate::model::geometry::{Epochs, ExperimentGeometry, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Position,
    Wavelength,
    DelayedChoice,
}

/// One fixed detector configuration: a label vector per mode. The labels
/// are the "b" vectors whose transverse differences enter a⁽²⁾ and a⁽³⁾.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorStage {
    kind: DetectorKind,
    labels: Vec<Vec3>,
    wavenumbers: Option<Vec<f64>>,
}

impl DetectorStage {
    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn labels(&self) -> &[Vec3] {
        &self.labels
    }

    /// Transverse wavenumbers, for wavelength stages.
    pub fn wavenumbers(&self) -> Option<&[f64]> {
        self.wavenumbers.as_deref()
    }

    /// The coordinate reported for each mode: x² position, or κ for
    /// wavelength modes.
    pub fn mode_coordinates(&self) -> Vec<f64> {
        match &self.wavenumbers {
            Some(k) => k.clone(),
            None => self.labels.iter().map(|b| b[1]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Fixed(DetectorStage),
    Switched {
        pre: DetectorStage,
        post: DetectorStage,
        switch_time: f64,
    },
}

/// Detector description: position-sensitive atoms, transverse-wavenumber
/// modes, or a delayed-choice schedule that swaps one for another while
/// the electron is in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    layout: Layout,
}

fn check_labels(labels: &[Vec3]) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::InvalidDetector(format!(
            "a detector needs at least two modes, got {}",
            labels.len()
        )));
    }
    if labels.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidDetector("mode labels must be finite".into()));
    }
    Ok(())
}

impl DetectorModel {
    /// Position detector whose modes are the geometry's atoms.
    pub fn position(geometry: &ExperimentGeometry) -> Self {
        DetectorModel {
            layout: Layout::Fixed(DetectorStage {
                kind: DetectorKind::Position,
                labels: geometry.atom_positions().to_vec(),
                wavenumbers: None,
            }),
        }
    }

    /// Position-type detector with explicit labels, e.g. which-slit
    /// telescopes whose labels sit at the slits.
    pub fn position_with_labels(labels: Vec<Vec3>) -> Result<Self> {
        check_labels(&labels)?;
        Ok(DetectorModel {
            layout: Layout::Fixed(DetectorStage {
                kind: DetectorKind::Position,
                labels,
                wavenumbers: None,
            }),
        })
    }

    /// Wavelength detector with transverse wavenumbers `κ_n` along x². Mode
    /// labels are `(0, κ_n s, 0)` with `s` the characteristic length.
    pub fn wavelength(wavenumbers: Vec<f64>, length_scale: f64) -> Result<Self> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::InvalidDetector(format!(
                "length scale must be positive, got {length_scale}"
            )));
        }
        let labels: Vec<Vec3> = wavenumbers.iter().map(|k| [0.0, k * length_scale, 0.0]).collect();
        check_labels(&labels)?;
        Ok(DetectorModel {
            layout: Layout::Fixed(DetectorStage {
                kind: DetectorKind::Wavelength,
                labels,
                wavenumbers: Some(wavenumbers),
            }),
        })
    }

    /// Evenly spaced wavenumbers `2π j / W` for `j = -K/2 .. K/2 - 1`, the
    /// Fourier modes of a screen of width `W`.
    pub fn screen_wavenumbers(modes: usize, screen_width: f64) -> Vec<f64> {
        let half = (modes / 2) as i64;
        (0..modes as i64)
            .map(|j| 2.0 * std::f64::consts::PI * (j - half) as f64 / screen_width)
            .collect()
    }

    /// `pre` is active before `switch_time` and `post` from then on. The
    /// switch must happen strictly while the electron is in flight.
    pub fn delayed_choice(pre: DetectorModel, post: DetectorModel, switch_time: f64, epochs: &Epochs) -> Result<Self> {
        let (Layout::Fixed(pre), Layout::Fixed(post)) = (pre.layout, post.layout) else {
            return Err(Error::InvalidDetector(
                "delayed-choice sub-models cannot themselves be delayed".into(),
            ));
        };
        if !(switch_time > epochs.t_a && switch_time < epochs.t_b) {
            return Err(Error::InvalidDetector(format!(
                "switch time {switch_time} must lie strictly inside ({}, {})",
                epochs.t_a, epochs.t_b
            )));
        }
        if pre.labels.len() != post.labels.len() {
            return Err(Error::InvalidDetector(format!(
                "pre-switch model has {} modes, post-switch model has {}",
                pre.labels.len(),
                post.labels.len()
            )));
        }
        Ok(DetectorModel {
            layout: Layout::Switched { pre, post, switch_time },
        })
    }

    pub fn kind(&self) -> DetectorKind {
        match &self.layout {
            Layout::Fixed(stage) => stage.kind,
            Layout::Switched { .. } => DetectorKind::DelayedChoice,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.post().labels.len()
    }

    /// The configuration in place when the electron reaches the screen.
    pub fn post(&self) -> &DetectorStage {
        match &self.layout {
            Layout::Fixed(stage) => stage,
            Layout::Switched { post, .. } => post,
        }
    }

    pub fn pre(&self) -> &DetectorStage {
        match &self.layout {
            Layout::Fixed(stage) => stage,
            Layout::Switched { pre, .. } => pre,
        }
    }

    pub fn switch_time(&self) -> Option<f64> {
        match &self.layout {
            Layout::Fixed(_) => None,
            Layout::Switched { switch_time, .. } => Some(*switch_time),
        }
    }

    /// Labels in force at time `t`.
    pub fn labels_at(&self, t: f64) -> &[Vec3] {
        match &self.layout {
            Layout::Fixed(stage) => &stage.labels,
            Layout::Switched { pre, post, switch_time } => {
                if t < *switch_time {
                    &pre.labels
                } else {
                    &post.labels
                }
            }
        }
    }

    /// Labels after the screen is reached.
    pub fn mode_labels(&self) -> &[Vec3] {
        &self.post().labels
    }
}
