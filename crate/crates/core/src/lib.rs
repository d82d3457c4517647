//! Scaling-law toolkit for auto-predictive coding acoustic models.
//!
//! * [`arch`] counts context-module parameters and per-frame multiplications.
//! * [`laws`] evaluates the one-resource, Kaplan joint and generalized joint laws.
//! * [`fitter`] estimates law parameters by multi-start Nelder–Mead least squares.
//! * [`frontier`] accounts training compute and extracts the compute-efficient frontier.
//! * [`planner`] turns fitted laws into resource-planning answers.
//! * [`synth`] generates ground-truth data from known laws.
//! * [`records`] reads and writes the CSV and JSON file formats.

pub mod arch;
pub mod fitter;
pub mod frontier;
pub mod laws;
pub mod planner;
pub mod records;
pub mod reference;
pub mod synth;

pub use arch::{ArchSpec, ComplexityReport, LstmTotal, Variant};
pub use fitter::{FitConfig, FitResult, JointPoint, Point1D, ResidualSpace};
pub use frontier::{Checkpoint, FrontierFit, TrainingCurve};
pub use laws::{GeneralJoint, KaplanJoint, LawParams, PowerLaw1D};

/// Frames of acoustic features per second of audio.
pub const FRAMES_PER_SECOND: f64 = 100.0;

/// Frames of acoustic features per hour of audio.
pub const FRAMES_PER_HOUR: f64 = FRAMES_PER_SECOND * 3600.0;
