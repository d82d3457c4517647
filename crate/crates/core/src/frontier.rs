//! Training-compute accounting and the compute-efficient frontier.

use crate::arch::{context_module_counts, ArchError, ArchSpec};
use crate::fitter::{fit_power_law_1d, FitConfig, FitError, FitResult, Point1D, ResidualSpace};
use crate::laws::{LawParams, PowerLaw1D};
use crate::FRAMES_PER_HOUR;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Operations charged per multiplication per training frame: one multiply
/// and one add, times forward plus a backward pass costing twice the forward.
pub const OPS_PER_MULT: u64 = 6;

/// Optimizer steps between development-set evaluations.
pub const DEFAULT_STEPS_PER_CHECKPOINT: u64 = 25_000;

/// Examples per optimizer step.
pub const DEFAULT_BATCH_SIZE: u64 = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrontierError {
    #[error("invalid training curve `{run_id}`: {reason}")]
    InvalidCurve { run_id: String, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

pub type Result<T> = std::result::Result<T, FrontierError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    /// Cumulative feature frames consumed by training.
    pub frames: u64,
    pub loss: f64,
    /// Overrides the compute derived from the architecture when present.
    pub compute: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub run_id: String,
    pub arch: ArchSpec,
    pub checkpoints: Vec<Checkpoint>,
}

impl TrainingCurve {
    pub fn new(run_id: impl Into<String>, arch: ArchSpec, checkpoints: Vec<Checkpoint>) -> Result<Self> {
        let curve = TrainingCurve {
            run_id: run_id.into(),
            arch,
            checkpoints,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| FrontierError::InvalidCurve {
            run_id: self.run_id.clone(),
            reason,
        };
        self.arch.validate()?;
        if self.checkpoints.is_empty() {
            return Err(bad("no checkpoints".into()));
        }
        for w in self.checkpoints.windows(2) {
            if w[1].step <= w[0].step {
                return Err(bad(format!("step {} does not follow step {}", w[1].step, w[0].step)));
            }
            if w[1].frames < w[0].frames {
                return Err(bad(format!("frames decrease at step {}", w[1].step)));
            }
        }
        for c in &self.checkpoints {
            if !(c.loss.is_finite() && c.loss > 0.0) {
                return Err(bad(format!("loss {} at step {} is not positive", c.loss, c.step)));
            }
            if let Some(op) = c.compute {
                if !(op.is_finite() && op >= 0.0) {
                    return Err(bad(format!("compute {op} at step {} is negative", c.step)));
                }
            }
        }
        Ok(())
    }

    /// `(compute, loss)` for every checkpoint.
    pub fn points(&self) -> Result<Vec<(f64, f64)>> {
        let m = context_module_counts(&self.arch)?.context_mults_per_frame;
        Ok(self
            .checkpoints
            .iter()
            .map(|c| {
                let op = c.compute.unwrap_or_else(|| compute_from_mults(m, c.frames));
                (op, c.loss)
            })
            .collect())
    }
}

/// `6 · M · frames`, evaluated exactly in 128-bit integers before rounding.
pub fn compute_from_mults(mults_per_frame: u64, frames: u64) -> f64 {
    (OPS_PER_MULT as u128 * mults_per_frame as u128 * frames as u128) as f64
}

/// Training operations spent by `arch` after consuming `frames` frames.
pub fn training_compute(arch: &ArchSpec, frames: u64) -> Result<f64> {
    let m = context_module_counts(arch)?.context_mults_per_frame;
    Ok(compute_from_mults(m, frames))
}

pub fn hours_to_frames(hours: f64) -> Result<f64> {
    if !(hours.is_finite() && hours >= 0.0) {
        return Err(FrontierError::InvalidInput(format!(
            "hours must be finite and non-negative, got {hours}"
        )));
    }
    Ok(hours * FRAMES_PER_HOUR)
}

pub fn frames_to_hours(frames: f64) -> f64 {
    frames / FRAMES_PER_HOUR
}

/// Frames consumed after `steps` optimizer steps when frame counts were not
/// logged. The mean example length has no default and must come from the
/// caller.
pub fn frames_from_steps(steps: u64, batch_size: u64, mean_frames_per_example: f64) -> Result<f64> {
    if !(mean_frames_per_example.is_finite() && mean_frames_per_example > 0.0) {
        return Err(FrontierError::InvalidInput(
            "mean frames per example must be positive".into(),
        ));
    }
    Ok(steps as f64 * batch_size as f64 * mean_frames_per_example)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub compute: f64,
    pub loss: f64,
    pub run_id: String,
    pub step: u64,
}

/// Indices of the Pareto-minimal `(compute, loss)` points, ordered by compute.
///
/// A point is kept iff no other point has compute and loss both less than or
/// equal with at least one strictly less. Exact duplicates keep their first
/// occurrence.
pub fn pareto_minimal(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[a].1.total_cmp(&points[b].1))
            .then(a.cmp(&b))
    });
    let mut best = f64::INFINITY;
    order
        .into_iter()
        .filter(|&i| {
            let keep = points[i].1 < best;
            if keep {
                best = points[i].1;
            }
            keep
        })
        .collect()
}

/// The Pareto-minimal checkpoints across all curves, sorted by compute.
pub fn lower_envelope(curves: &[TrainingCurve]) -> Result<Vec<EnvelopePoint>> {
    if curves.is_empty() {
        return Err(FrontierError::InvalidInput("no training curves".into()));
    }
    let mut all = Vec::new();
    let mut origin = Vec::new();
    for curve in curves {
        curve.validate()?;
        for (p, c) in curve.points()?.into_iter().zip(&curve.checkpoints) {
            all.push(p);
            origin.push((curve.run_id.as_str(), c.step));
        }
    }
    Ok(pareto_minimal(&all)
        .into_iter()
        .map(|i| EnvelopePoint {
            compute: all[i].0,
            loss: all[i].1,
            run_id: origin[i].0.to_string(),
            step: origin[i].1,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierFit {
    pub envelope: Vec<EnvelopePoint>,
    /// Indices into `envelope` of the points the final fit was made on.
    pub support: Vec<usize>,
    pub law: PowerLaw1D,
    pub fit: FitResult,
}

impl FrontierFit {
    /// Shortfall of `loss` below the fitted frontier at `compute`, as a
    /// fraction of the frontier's reducible loss there. Positive values lie
    /// below the frontier.
    pub fn shortfall(&self, compute: f64, loss: f64) -> f64 {
        let reducible = self.law.log_reducible(compute).map(f64::exp).unwrap_or(f64::NAN);
        (self.law.l_inf() + reducible - loss) / reducible
    }
}

/// Upper bound on support-selection rounds in [`fit_frontier`].
pub const MAX_SUPPORT_ROUNDS: usize = 50;

fn fit_points(envelope: &[EnvelopePoint], idx: &[usize], config: &FitConfig) -> Result<(PowerLaw1D, FitResult)> {
    let points: Vec<Point1D> = idx
        .iter()
        .map(|&i| Point1D {
            x: envelope[i].compute,
            loss: envelope[i].loss,
        })
        .collect();
    let fit = fit_power_law_1d(&points, config)?;
    let LawParams::PowerLaw1D(law) = fit.params else {
        unreachable!("one-resource fit returns a one-resource law")
    };
    Ok((law, fit))
}

/// For every run, the envelope point lying lowest relative to `law` in
/// log-excess terms. Sorted by envelope index.
fn support_points(envelope: &[EnvelopePoint], law: &PowerLaw1D) -> Vec<usize> {
    let mut lowest: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (i, e) in envelope.iter().enumerate() {
        let excess = (e.loss - law.l_inf()).max(f64::MIN_POSITIVE).ln();
        let gap = excess - law.log_reducible(e.compute).unwrap_or(f64::NAN);
        let slot = lowest.entry(e.run_id.as_str()).or_insert((f64::INFINITY, i));
        if gap < slot.0 {
            *slot = (gap, i);
        }
    }
    let mut idx: Vec<usize> = lowest.into_values().map(|(_, i)| i).collect();
    idx.sort_unstable();
    idx
}

/// Fits `L(C) = L∞ + (C_c / C)^α_C` to the compute-efficient frontier.
///
/// Each training curve touches the frontier near a single checkpoint and
/// lies above it elsewhere, so the Pareto envelope of a handful of model
/// sizes is a sawtooth above the frontier. When at least four runs reach the
/// envelope, the fit alternates between picking each run's lowest point
/// relative to the current curve and refitting on those points alone, until
/// the chosen set repeats. With fewer runs every envelope point is used.
/// All fits are least squares in log-excess space.
pub fn fit_frontier(envelope: &[EnvelopePoint], config: &FitConfig) -> Result<FrontierFit> {
    if envelope.len() < 4 {
        return Err(FrontierError::Fit(FitError::UnderDetermined(format!(
            "a frontier fit needs at least 4 envelope points, got {}",
            envelope.len()
        ))));
    }
    let config = FitConfig {
        residual_space: ResidualSpace::LogExcessLoss,
        ..config.clone()
    };
    let all: Vec<usize> = (0..envelope.len()).collect();
    let (mut law, mut fit) = fit_points(envelope, &all, &config)?;
    let mut support = all;

    let runs: BTreeSet<&str> = envelope.iter().map(|e| e.run_id.as_str()).collect();
    if runs.len() >= 4 {
        for _ in 0..MAX_SUPPORT_ROUNDS {
            let next = support_points(envelope, &law);
            if next == support {
                break;
            }
            match fit_points(envelope, &next, &config) {
                Ok((l, f)) => {
                    law = l;
                    fit = f;
                    support = next;
                }
                // coincident compute values among the support; keep the last fit
                Err(FrontierError::Fit(FitError::UnderDetermined(_))) => break,
                Err(e) => return Err(e),
            }
        }
    }

    Ok(FrontierFit {
        envelope: envelope.to_vec(),
        support,
        law,
        fit,
    })
}
