//! The entangled-state analyzer.
//!
//! Ports into the QFT are ordered `(a, b, x_0, …, x_{d-3})`: the two input
//! photons on ports 0 and 1, the auxiliary photons from port 2 on. Detector
//! `k` sits on output port `k`.

pub mod aux;
pub mod enumerate;
pub mod pattern;
pub mod projection;

pub use aux::{build_aux, AuxBranch, AuxFamily, AuxSpec};
pub use enumerate::{
    enumerate_success, Analyzer, EnumerationMode, EnumerationOptions, PatternOutcome, PatternRecord,
    ProtocolResult, Recovery,
};
pub use pattern::DetectionPattern;
pub use projection::{
    correction_from_projection, correction_unitary, project_ab, project_ab_generic, projection_bra,
    ProjectionBra,
};

pub const A_PORT: usize = 0;
pub const B_PORT: usize = 1;
/// Port of auxiliary mode `x_0`.
pub const AUX_OFFSET: usize = 2;
