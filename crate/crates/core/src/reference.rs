//! Published constants for APC acoustic models trained on a 23,000-hour
//! far-field English voice corpus.

use crate::laws::{GeneralJoint, PowerLaw1D};

/// Irreducible loss shared by the one-resource and joint converged-model laws.
pub const L_INF_CONVERGED: f64 = 0.316;
/// Critical data size, hours.
pub const D_C: f64 = 7.350e-23;
pub const ALPHA_D: f64 = 0.01946;
/// Critical context-module parameter count.
pub const N_C: f64 = 9.410e-25;
pub const ALPHA_N: f64 = 0.01601;
/// Outer exponent of the joint law.
pub const ALPHA: f64 = 0.01363;

/// Irreducible loss of the compute-efficient frontier, shared by LSTM and
/// Transformer families.
pub const L_INF_COMPUTE: f64 = 0.306;
pub const ALPHA_C_LSTM: f64 = 0.167;
pub const ALPHA_C_TRANSFORMER: f64 = 0.197;

/// Layer counts of the converged-model experiments.
pub const LAYER_COUNTS: [u64; 5] = [2, 3, 5, 7, 11];

/// Size of the full training corpus, hours.
pub const CORPUS_HOURS: f64 = 23_000.0;

pub fn data_law() -> PowerLaw1D {
    PowerLaw1D::new(L_INF_CONVERGED, D_C, ALPHA_D).expect("valid constants")
}

pub fn model_law() -> PowerLaw1D {
    PowerLaw1D::new(L_INF_CONVERGED, N_C, ALPHA_N).expect("valid constants")
}

pub fn converged_joint() -> GeneralJoint {
    GeneralJoint::new(L_INF_CONVERGED, N_C, ALPHA_N, D_C, ALPHA_D, ALPHA).expect("valid constants")
}
