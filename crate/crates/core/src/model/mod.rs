//! Shared domain types: geometry, functional parameters, coefficient
//! trajectories and detector models.

mod detector;
mod geometry;
mod params;
mod trajectory;

pub use detector::{DetectorKind, DetectorModel, DetectorStage};
pub use geometry::{epoch_lengths, EpochLengths, Epochs, ExperimentGeometry, Vec3};
pub use params::{AtomCrossStats, FunctionalParams};
pub use trajectory::{weights_from_coefficients, CoefficientTrajectory, TimeGrid, DEFAULT_INTERVALS};
