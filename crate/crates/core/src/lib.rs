//! Fourier-optics simulation of a mode sorter for orbital angular momentum
//! (OAM) and angular (ANG) modes: log-polar unwrapping, fan-out copying,
//! phase correction and focal-plane detection, plus crosstalk metrics.

pub mod error;
pub mod export;
pub mod fanout;
pub mod field;
pub mod fourier;
pub mod grid;
pub mod logpolar;
pub mod metrics;
pub mod modes;
pub mod optimize;
pub mod profile;
pub mod sorter;

pub use error::{ConfigDiagnostic, Error, Result};
pub use fanout::{FanoutDesign, FanoutSearch, FanoutSolution, OrderSpectrum};
pub use field::{ComplexField, PhaseScreen, SamplingWarning};
pub use grid::{Axis, GridSpec};
pub use logpolar::{TransformOptics, UnwrapStage};
pub use modes::{EnvelopeSpec, ModeKind, ModeSpec};
pub use profile::LineProfile;
pub use sorter::{BinLayout, CrosstalkMatrix, FocalProfiles, PipelineOutput, Sorter, SorterConfig};
pub use rustfft::num_complex::Complex64;
