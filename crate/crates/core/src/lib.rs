//! Equivalent-circuit simulator and design toolkit for metamaterial
//! backscatter sensing tags.
//!
//! The crate models split-ring-resonator (SRR) absorber tags through a lumped
//! equivalent circuit, evaluates candidate tag geometries against sensing and
//! transmission metrics, simulates the backscatter radio link including
//! multi-tag and ambient interference, and recovers the sensed environmental
//! state (relative humidity) from noisy swept-frequency measurements.
//!
//! Modules follow the processing chain:
//!
//! * [`geometry`] — tag geometry and sensitive-material descriptions
//! * [`circuit`] — equivalent circuit, scattering coefficient, resonance
//! * [`design`] — design metrics, Pareto front, design-space search
//! * [`link`] — backscatter link budget, interference, synthetic measurements
//! * [`detect`] — background subtraction, dip fitting, matrix pencil, humidity
//!   classification
//! * [`experiment`] — component sweeps, humidity-grid experiment, range study
//! * [`config`] — run configuration files and unit parsing
//! * [`io`] — CSV/manifest output helpers

pub mod circuit;
pub mod config;
pub mod consts;
pub mod design;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod link;

pub use circuit::{
    scattering_coefficient, substrate_impedance, srr_impedance, tag_impedance, CanonicalResonance,
    CircuitParameters, ScatteringSpectrum, TagModel,
};
pub use design::{pareto_front, search, DesignMetrics, DesignSpace, ParetoSet};
pub use detect::{
    background_subtract, classify_humidity, matrix_pencil, peak_fit, poles_to_resonance,
    CalibratedSpectrum, CalibrationCurve, DetectionResult, PoleSet,
};
pub use error::Error;
pub use geometry::{MaterialProperties, SensitivityCurve, SrrGeometry};
pub use link::{
    backscatter_tone, interference_power, max_range, received_power, snr, synth_measurement,
    ModulatedTone, NoiseModel, NoiseSpec, ReceivedSpectrum, Scene, TagInstance,
};

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
