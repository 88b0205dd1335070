//! Brute-force checks of the factorized multi-point integrals on small
//! 1+1-dimensional instances.
//!
//! Every point carries one space and one time coordinate. The time of the
//! first point runs over midpoint nodes; the other three sit on the offset
//! lattice of [`SurrogateF4`], so the four-point integral is an 8-fold sum
//! evaluated without any of the approximations the closed forms rely on.

pub mod modes;
pub mod report;
pub mod surrogate;
pub mod tensors;

pub use modes::{AtomStates, AtomVariances, SpatialGrid, SyntheticModeSet, MAX_PACKET_OVERLAP};
pub use report::{run_suite, EdgeDegradation, OracleEntry, OracleReport, SuiteConfig, TauSweep};
pub use surrogate::SurrogateF4;
pub use tensors::{
    d_closed_form, d_tensor_all, d_tensor_direct, e_tensor_all, e_tensor_direct, i4_closed_form, i4_identity_direct,
    su_closed_form, su_offdiagonal_2d, su_tensors_direct, DTensor, ETensor, Epoch, NodeBudget, PairIntegrals,
    TimeQuadrature,
};
