//! Error types for the simulator.

use thiserror::Error;

/// Errors produced by model evaluation, detection, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A geometry invariant was violated. The message names the bound.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A material description was rejected at construction or lookup time.
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    /// An evaluation fell outside the model's validity region.
    #[error("model validity: {0}")]
    ModelValidity(String),

    /// No absorption dip was found inside the requested band.
    #[error("no resonance inside {lo_hz:.6e}..{hi_hz:.6e} Hz")]
    NoResonance { lo_hz: f64, hi_hz: f64 },

    /// A detection stage found no usable tag signature.
    #[error("no tag detected: {0}")]
    NoTagDetected(String),

    /// Two spectra that must share a frequency grid do not.
    #[error("frequency-grid mismatch: {0}")]
    GridMismatch(String),

    /// A scene description was rejected.
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    /// A link-budget inversion has no positive solution.
    #[error("link infeasible: {0}")]
    LinkInfeasible(String),

    /// Estimator preconditions were not met.
    #[error("estimator input: {0}")]
    EstimatorInput(String),

    /// Configuration parsing or validation failed; all violations are listed.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    InvalidConfig(Vec<String>),

    /// Every candidate in a search was rejected.
    #[error("all candidates invalid; first diagnostics:\n{}", .0.join("\n"))]
    AllCandidatesInvalid(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable kind tag for structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_) => "invalid_geometry",
            Error::InvalidMaterial(_) => "invalid_material",
            Error::ModelValidity(_) => "model_validity",
            Error::NoResonance { .. } => "no_resonance",
            Error::NoTagDetected(_) => "no_tag_detected",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::InvalidScene(_) => "invalid_scene",
            Error::LinkInfeasible(_) => "link_infeasible",
            Error::EstimatorInput(_) => "estimator_input",
            Error::InvalidConfig(_) => "invalid_config",
            Error::AllCandidatesInvalid(_) => "all_candidates_invalid",
            Error::Io(_) => "io",
        }
    }
}
