use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initializer::{self, PhaseStrategy, SlitSpec};
use crate::model::{
    AtomCrossStats, DetectorModel, Epochs, ExperimentGeometry, FunctionalParams, TimeGrid, Vec3, DEFAULT_INTERVALS,
};
use crate::optimizer::OptimizerConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// The published JSON schema of [`RunConfig`].
pub const RUN_CONFIG_SCHEMA: &str = include_str!("../../schema/run_config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochSpec {
    pub t_i: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub t_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AtomLayout {
    /// `count` atoms evenly spaced along x² from `y_min` to `y_max`.
    Uniform { count: usize, y_min: f64, y_max: f64 },
    /// Explicit positions; every x¹ must equal the screen distance.
    Positions(Vec<Vec3>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub screen_distance: f64,
    pub slit_separation: f64,
    pub slit_width: f64,
    pub epochs: EpochSpec,
    pub atoms: AtomLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    /// De Broglie wavelength of the electron.
    pub wavelength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSpec {
    pub epsilon: f64,
    pub electron_mass: f64,
    pub dx2_phi: f64,
    pub de2_phi: f64,
    pub energy_gap: f64,
    pub dp2_xi: f64,
    pub order_one_floor: f64,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        let p = FunctionalParams::default();
        ParamsSpec {
            epsilon: p.epsilon,
            electron_mass: p.electron_mass,
            dx2_phi: p.dx2_phi,
            de2_phi: p.de2_phi,
            energy_gap: p.energy_gap,
            dp2_xi: p.dp2_xi,
            order_one_floor: p.order_one_floor,
        }
    }
}

impl ParamsSpec {
    pub fn build(&self) -> Result<FunctionalParams> {
        let p = FunctionalParams {
            epsilon: self.epsilon,
            electron_mass: self.electron_mass,
            dx2_phi: self.dx2_phi,
            de2_phi: self.de2_phi,
            energy_gap: self.energy_gap,
            dp2_xi: self.dp2_xi,
            cross: AtomCrossStats::minimal_uncertainty(self.dx2_phi, self.de2_phi, self.energy_gap),
            order_one_floor: self.order_one_floor,
        };
        p.validate()?;
        Ok(p)
    }
}

/// One fixed detector arrangement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StageSpec {
    /// The screen atoms, labelled by their positions.
    Position,
    /// Which-slit telescopes: each atom's label moves to the slit on its
    /// side of the axis, `(0, ±d/2, 0)`.
    WhichSlit,
    /// Transverse-wavenumber modes `2π j / screen_width`, labelled
    /// `(0, κ length_scale, 0)`.
    Wavelength {
        modes: usize,
        screen_width: f64,
        length_scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorSpec {
    Position,
    WhichSlit,
    Wavelength {
        modes: usize,
        screen_width: f64,
        length_scale: f64,
    },
    /// `pre` until `switch_time`, `post` afterwards. The switch time
    /// defaults to the middle of the flight.
    DelayedChoice {
        pre: StageSpec,
        post: StageSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        switch_time: Option<f64>,
    },
}

impl DetectorSpec {
    /// The arrangement in place when the electron arrives.
    pub fn final_stage(&self) -> StageSpec {
        match self {
            DetectorSpec::Position => StageSpec::Position,
            DetectorSpec::WhichSlit => StageSpec::WhichSlit,
            DetectorSpec::Wavelength {
                modes,
                screen_width,
                length_scale,
            } => StageSpec::Wavelength {
                modes: *modes,
                screen_width: *screen_width,
                length_scale: *length_scale,
            },
            DetectorSpec::DelayedChoice { post, .. } => post.clone(),
        }
    }
}

fn build_stage(stage: &StageSpec, geometry: &ExperimentGeometry) -> Result<DetectorModel> {
    match stage {
        StageSpec::Position => Ok(DetectorModel::position(geometry)),
        StageSpec::WhichSlit => {
            let half = 0.5 * geometry.slit_separation();
            let labels = geometry
                .atom_positions()
                .iter()
                .map(|p| [0.0, half * p[1].signum() * f64::from(p[1] != 0.0), 0.0])
                .collect();
            DetectorModel::position_with_labels(labels)
        }
        StageSpec::Wavelength {
            modes,
            screen_width,
            length_scale,
        } => {
            if !(screen_width.is_finite() && *screen_width > 0.0) {
                return Err(Error::InvalidDetector(format!(
                    "screen_width must be positive, got {screen_width}"
                )));
            }
            DetectorModel::wavelength(DetectorModel::screen_wavenumbers(*modes, *screen_width), *length_scale)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub intervals: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            intervals: DEFAULT_INTERVALS,
        }
    }
}

fn default_significance() -> f64 {
    0.001
}

/// Everything needed to reproduce an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub geometry: GeometrySpec,
    pub slits: SourceSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    pub detector: DetectorSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub phases: PhaseStrategy,
    pub ensemble_size: usize,
    pub base_seed: u64,
    /// Worker threads; `VPCOLLAPSE_WORKERS` overrides, and the default is
    /// one per core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_trajectories: bool,
    /// Threshold on chi-square p-values below which a statistical check
    /// counts as failed.
    #[serde(default = "default_significance")]
    pub significance: f64,
}

/// A config resolved into model objects.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub geometry: ExperimentGeometry,
    pub slits: SlitSpec,
    pub params: FunctionalParams,
    pub detector: DetectorModel,
    pub grid: TimeGrid,
    pub optimizer: OptimizerConfig,
    /// Boundary amplitudes before phases, `Σ |C_n|² = 1`.
    pub amplitudes: Vec<num_complex::Complex64>,
}

impl Experiment {
    /// Born probabilities `|C_n(t_i)|²`.
    pub fn expected(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }
}

impl RunConfig {
    /// Parse JSON, reporting the path of the offending field and its line
    /// and column.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            // serde_json's message already ends with the line and column.
            Error::Config(format!("at `{}`: {}", e.path(), e.inner()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    /// Checks that do not need the model objects.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::Config(format!(
                "significance must lie in (0, 1), got {}",
                self.significance
            )));
        }
        self.optimizer.validate()
    }

    pub fn build(&self) -> Result<Experiment> {
        self.validate()?;
        let g = &self.geometry;
        let e = &g.epochs;
        let epochs = Epochs::new(e.t_i, e.t_a, e.t_b, e.t_f)?;
        let geometry = match &g.atoms {
            AtomLayout::Uniform { count, y_min, y_max } => ExperimentGeometry::uniform_screen(
                *count,
                *y_min,
                *y_max,
                g.screen_distance,
                g.slit_separation,
                g.slit_width,
                epochs,
            )?,
            AtomLayout::Positions(p) => {
                ExperimentGeometry::new(p.clone(), g.screen_distance, g.slit_separation, g.slit_width, epochs)?
            }
        };
        let slits = SlitSpec {
            wavelength: self.slits.wavelength,
            slit_separation: g.slit_separation,
            slit_width: g.slit_width,
            screen_distance: g.screen_distance,
        };
        let detector = match &self.detector {
            DetectorSpec::DelayedChoice { pre, post, switch_time } => {
                let t_c = switch_time.unwrap_or(0.5 * (epochs.t_a + epochs.t_b));
                DetectorModel::delayed_choice(
                    build_stage(pre, &geometry)?,
                    build_stage(post, &geometry)?,
                    t_c,
                    &epochs,
                )?
            }
            other => build_stage(&other.final_stage(), &geometry)?,
        };
        let amplitudes = match self.detector.final_stage() {
            StageSpec::Wavelength { .. } => initializer::mode_amplitudes_wavelength(&slits, &detector)?,
            _ => initializer::two_slit_amplitudes(&slits, &detector)?,
        };
        let grid = TimeGrid::for_epochs(&epochs, self.grid.intervals)?;
        grid.epoch_nodes(&epochs)?;
        Ok(Experiment {
            geometry,
            slits,
            params: self.params.build()?,
            detector,
            grid,
            optimizer: self.optimizer,
            amplitudes,
        })
    }

    /// Worker count after applying `VPCOLLAPSE_WORKERS`.
    pub fn resolved_workers(&self) -> Result<usize> {
        if let Ok(v) = std::env::var("VPCOLLAPSE_WORKERS") {
            return match v.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(Error::Config(format!(
                    "VPCOLLAPSE_WORKERS must be a positive integer, got {v:?}"
                ))),
            };
        }
        Ok(self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
    }
}
