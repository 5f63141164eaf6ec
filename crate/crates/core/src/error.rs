use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("spatial mode {mode} appears in both tensor factors")]
    OverlappingModes { mode: usize },

    #[error("mode ({spatial}, {timebin}) out of range for {spatial_count} spatial modes and dimension {dim}")]
    ModeOutOfRange {
        spatial: usize,
        timebin: usize,
        spatial_count: usize,
        dim: usize,
    },

    #[error("bra touches spatial mode {mode} outside the projected subset")]
    BraOutsideSubset { mode: usize },

    #[error("photon number {found} differs from the state's fixed sector {expected}")]
    MixedPhotonNumber { expected: usize, found: usize },

    #[error("invalid bipartition: {0}")]
    Partition(String),

    #[error("unsupported dimension {d}: {reason}")]
    UnsupportedDimension { d: usize, reason: String },

    #[error("auxiliary-state constraint violated: {0}")]
    Constraint(String),

    #[error("matrix is not unitary (max |U†U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("detection pattern invalid: {0}")]
    Pattern(String),

    #[error("input state invalid for the analyzer: {0}")]
    Input(String),

    #[error(
        "pattern probabilities are not uniform: pattern {pattern:?} has {found:e}, reference {reference:e}"
    )]
    NonUniformPatterns {
        pattern: Vec<usize>,
        found: f64,
        reference: f64,
    },

    #[error("dimension {d} exceeds the configured maximum {max} ({patterns} detection patterns)")]
    TooLarge { d: usize, max: usize, patterns: u128 },

    #[error("emitter schedule: {0}")]
    Schedule(String),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;
