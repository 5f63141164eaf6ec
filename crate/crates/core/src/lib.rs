//! Simulation of a linear-optics entangled-state analyzer for time-bin
//! qudits.
//!
//! The analyzer interferes two input photons with `d - 2` entangled
//! auxiliary photons on a spatial-mode QFT and post-selects on every photon
//! being detected in a distinct time-bin. This crate builds the auxiliary
//! states, evaluates every detection pattern, applies the pattern-dependent
//! corrections, and simulates the emitter protocol that prepares the
//! auxiliary state.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod applications;
pub mod emitter;
pub mod error;
pub mod esa;
pub mod fock;
pub mod interferometer;
mod linalg;
pub mod scalar;

pub use error::{Error, Result};
pub use fock::{
    drop_modes, fidelity, inner_product, partial_project, schmidt_rank, ModeIndex,
    OccupationConfig, QuditVector, Sectors,
};
pub use interferometer::{apply_netlist, apply_spatial, decompose, qft_matrix, Element};
pub use scalar::Scalar;
pub use esa::{AuxFamily, AuxSpec, DetectionPattern, EnumerationMode};

pub type Complex64 = num_complex::Complex<f64>;

pub type FockState = fock::FockState<f64>;
pub type FockStateF32 = fock::FockState<f32>;
pub type Qudit = fock::QuditVector<f64>;
pub type ModeUnitary = interferometer::ModeUnitary<f64>;
pub type ModeUnitaryF32 = interferometer::ModeUnitary<f32>;
pub type BSNetlist = interferometer::BSNetlist<f64>;
pub type ProjectionBra = esa::ProjectionBra<f64>;
pub type ProtocolResult = esa::ProtocolResult<f64>;
pub type SwapResult = applications::SwapResult<f64>;
pub type TeleportResult = applications::TeleportResult<f64>;
