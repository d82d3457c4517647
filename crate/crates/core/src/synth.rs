//! Ground-truth data drawn from known laws.
//!
//! Noise for the `i`-th generated point comes from a ChaCha stream keyed by
//! `(seed, i)`, so output does not depend on generation order.

use crate::arch::{context_module_counts, scale_model, ArchError, ArchSpec, Variant};
use crate::fitter::JointPoint;
use crate::frontier::{compute_from_mults, Checkpoint, TrainingCurve, DEFAULT_STEPS_PER_CHECKPOINT};
use crate::laws::{GeneralJoint, LawError, PowerLaw1D};
use crate::records::run_id_for;
use crate::FRAMES_PER_HOUR;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthesis spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Arch(#[from] ArchError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// Smallest loss a noisy sample is clamped to.
pub const MIN_LOSS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub law: GeneralJoint,
    pub model_sizes: Vec<f64>,
    /// Training-set sizes in hours.
    pub data_sizes: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(SynthError::Invalid(format!("noise sigma must be >= 0, got {sigma}")))
    }
}

/// Additive Gaussian noise for point `index`, clamped to keep losses positive.
fn noisy(loss: f64, sigma: f64, seed: u64, index: u64) -> f64 {
    if sigma == 0.0 {
        return loss;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    // sigma was validated as finite and positive
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    (loss + normal.sample(&mut rng)).max(MIN_LOSS)
}

/// One converged run per `(model size, data size)` pair, model-major order.
pub fn gen_converged_grid(spec: &SynthSpec) -> Result<Vec<JointPoint>> {
    check_sigma(spec.noise_sigma)?;
    for &v in spec.model_sizes.iter().chain(&spec.data_sizes) {
        if !(v.is_finite() && v > 0.0) {
            return Err(SynthError::Invalid(format!("resource sizes must be positive, got {v}")));
        }
    }
    let pairs: Vec<(f64, f64)> = spec
        .model_sizes
        .iter()
        .flat_map(|&n| spec.data_sizes.iter().map(move |&d| (n, d)))
        .collect();
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(n, d))| {
            let clean = spec.law.eval(n, d)?;
            Ok(JointPoint {
                n,
                d,
                loss: noisy(clean, spec.noise_sigma, spec.seed, i as u64),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub law: GeneralJoint,
    pub archs: Vec<ArchSpec>,
    pub n_checkpoints: usize,
    pub frames_per_checkpoint: u64,
    pub steps_per_checkpoint: u64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl CurveSpec {
    pub fn new(law: GeneralJoint, archs: Vec<ArchSpec>, n_checkpoints: usize, frames_per_checkpoint: u64) -> Self {
        CurveSpec {
            law,
            archs,
            n_checkpoints,
            frames_per_checkpoint,
            steps_per_checkpoint: DEFAULT_STEPS_PER_CHECKPOINT,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Training-set sizes, in hours, of the default converged-run grid:
/// roughly log-spaced from 134 hours to the full 23,000-hour corpus.
pub const DEFAULT_DATA_HOURS: [f64; 5] = [134.0, 500.0, 1_800.0, 6_400.0, 23_000.0];

/// Checkpoints per curve in [`frontier_family`].
pub const FAMILY_CHECKPOINTS: usize = 240;
/// Frames between checkpoints in [`frontier_family`] (about 556 hours).
pub const FAMILY_FRAMES_PER_CHECKPOINT: u64 = 200_000_000;
/// Attention context of the Transformer members of [`frontier_family`].
pub const FAMILY_N_CTX: u64 = 500;

/// Joint law behind [`frontier_family`]: additive model and data terms
/// (`alpha = 1`) over an irreducible loss of 0.306. With context parameters
/// proportional to per-frame multiplications, its compute-efficient frontier
/// decays with exponent `a·b/(a+b) = 0.197`.
pub fn frontier_family_law() -> GeneralJoint {
    GeneralJoint::new(0.306, 1e3, 0.34, 3.0, 0.47, 1.0).expect("valid constants")
}

/// Noise-free training curves for five models of `variant` with 2, 3, 5, 7
/// and 11 layers at the variant's aspect ratio. Every model's loss-optimal
/// data budget falls inside its curve, so each run touches the frontier.
pub fn frontier_family(variant: Variant) -> Result<Vec<TrainingCurve>> {
    let n_ctx = (variant == Variant::Transformer).then_some(FAMILY_N_CTX);
    let archs = [2, 3, 5, 7, 11]
        .iter()
        .map(|&l| scale_model(variant, l, n_ctx))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    gen_training_curves(&CurveSpec::new(
        frontier_family_law(),
        archs,
        FAMILY_CHECKPOINTS,
        FAMILY_FRAMES_PER_CHECKPOINT,
    ))
}

/// Training curves whose loss at each checkpoint is the joint law evaluated
/// at the model's context parameters and the hours of audio seen so far.
pub fn gen_training_curves(spec: &CurveSpec) -> Result<Vec<TrainingCurve>> {
    check_sigma(spec.noise_sigma)?;
    if spec.n_checkpoints == 0 {
        return Err(SynthError::Invalid("n_checkpoints must be at least 1".into()));
    }
    if spec.frames_per_checkpoint == 0 || spec.steps_per_checkpoint == 0 {
        return Err(SynthError::Invalid("checkpoint cadence must be positive".into()));
    }
    let k = spec.n_checkpoints as u64;
    spec.archs
        .iter()
        .enumerate()
        .map(|(a, arch)| {
            let report = context_module_counts(arch)?;
            let n = report.context_params as f64;
            let checkpoints = (1..=k)
                .map(|j| {
                    let frames = j * spec.frames_per_checkpoint;
                    let clean = spec.law.eval(n, frames as f64 / FRAMES_PER_HOUR)?;
                    let index = a as u64 * k + (j - 1);
                    Ok(Checkpoint {
                        step: j * spec.steps_per_checkpoint,
                        frames,
                        loss: noisy(clean, spec.noise_sigma, spec.seed, index),
                        compute: Some(compute_from_mults(report.context_mults_per_frame, frames)),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TrainingCurve {
                run_id: run_id_for(arch),
                arch: *arch,
                checkpoints,
            })
        })
        .collect()
}

/// A single curve whose loss lies exactly on `law` as a function of compute.
pub fn gen_compute_curve(
    law: &PowerLaw1D,
    arch: &ArchSpec,
    n_checkpoints: usize,
    frames_per_checkpoint: u64,
) -> Result<TrainingCurve> {
    if n_checkpoints == 0 || frames_per_checkpoint == 0 {
        return Err(SynthError::Invalid("checkpoint count and cadence must be positive".into()));
    }
    let m = context_module_counts(arch)?.context_mults_per_frame;
    let checkpoints = (1..=n_checkpoints as u64)
        .map(|j| {
            let frames = j * frames_per_checkpoint;
            let compute = compute_from_mults(m, frames);
            Ok(Checkpoint {
                step: j * DEFAULT_STEPS_PER_CHECKPOINT,
                frames,
                loss: law.eval(compute)?,
                compute: Some(compute),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainingCurve {
        run_id: run_id_for(arch),
        arch: *arch,
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    fn spec(sigma: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            law: reference::converged_joint(),
            model_sizes: vec![4e5, 2e6, 6.5e7],
            data_sizes: vec![134.0, 1000.0, 23_000.0],
            noise_sigma: sigma,
            seed,
        }
    }

    #[test]
    fn noise_free_points_lie_on_the_law() {
        let s = spec(0.0, 1);
        for p in gen_converged_grid(&s).unwrap() {
            assert_eq!(p.loss, s.law.eval(p.n, p.d).unwrap());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_converged_grid(&spec(0.01, 5)).unwrap();
        assert_eq!(a, gen_converged_grid(&spec(0.01, 5)).unwrap());
        assert_ne!(a, gen_converged_grid(&spec(0.01, 6)).unwrap());
    }

    #[test]
    fn losses_stay_positive_under_heavy_noise() {
        let pts = gen_converged_grid(&spec(10.0, 3)).unwrap();
        assert!(pts.iter().all(|p| p.loss >= MIN_LOSS));
    }

    #[test]
    fn rejects_negative_sigma() {
        assert!(gen_converged_grid(&spec(-1.0, 0)).is_err());
    }

    #[test]
    fn larger_models_learn_faster() {
        let law = reference::converged_joint();
        let archs: Vec<_> = [2, 5, 11]
            .iter()
            .map(|&l| scale_model(Variant::Transformer, l, Some(500)).unwrap())
            .collect();
        let curves = gen_training_curves(&CurveSpec::new(law, archs, 12, 1_600_000_000)).unwrap();
        for j in 0..12 {
            let losses: Vec<f64> = curves.iter().map(|c| c.checkpoints[j].loss).collect();
            assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
        }
        for c in &curves {
            let pts = c.points().unwrap();
            assert!(pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1));
            assert_eq!(c.run_id, run_id_for(&c.arch));
        }
    }

    #[test]
    fn family_shapes() {
        let curves = frontier_family(Variant::Lstm).unwrap();
        assert_eq!(curves.len(), 5);
        assert_eq!(curves[4].run_id, "lstm-L11-u2816");
        assert!(curves.iter().all(|c| c.checkpoints.len() == FAMILY_CHECKPOINTS));
    }

    #[test]
    fn compute_curve_is_on_the_law() {
        let law = PowerLaw1D::new(0.306, 1e10, 0.197).unwrap();
        let arch = scale_model(Variant::Lstm, 2, None).unwrap();
        let c = gen_compute_curve(&law, &arch, 6, 1_000_000).unwrap();
        for (op, loss) in c.points().unwrap() {
            assert_eq!(loss, law.eval(op).unwrap());
        }
    }
}
