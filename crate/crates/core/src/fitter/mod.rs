//! Least-squares estimation of scaling-law parameters.
//!
//! Each fit runs a deterministic set of Nelder–Mead starts in an
//! unconstrained coordinate system and keeps the lowest objective (ties go
//! to the lowest start index). The coordinates are chosen so that every
//! point of the search space decodes to a valid law:
//!
//! * `l_inf` maps through a logistic onto `[lo, hi]`;
//! * each exponent maps through a logistic onto `[ln lo, ln hi]`;
//! * each critical constant is carried as the log of its reducible term at a
//!   reference resource value (the geometric mean of the data), which keeps
//!   the search well conditioned when the constants sit near 1e-23. A
//!   decoded constant outside the `log10` bounds scores `+inf`.

pub mod nelder_mead;

use crate::laws::{log_sum_exp, GeneralJoint, KaplanJoint, LawError, LawParams, PowerLaw1D};
use nelder_mead::{minimize, NelderMeadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("under-determined fit: {0}")]
    UnderDetermined(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Law(#[from] LawError),
}

pub type Result<T> = std::result::Result<T, FitError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualSpace {
    /// `predicted - observed`.
    #[default]
    RawLoss,
    /// `ln(predicted - l_inf) - ln(observed - l_inf)`.
    LogExcessLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    /// Range of `l_inf`. `None` means `[0, min observed loss]`.
    pub l_inf: Option<(f64, f64)>,
    pub exponent: (f64, f64),
    pub log10_critical: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            l_inf: None,
            exponent: (1e-4, 10.0),
            log10_critical: (-60.0, 60.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_starts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub residual_space: ResidualSpace,
    pub bounds: FitBounds,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_starts: 32,
            seed: 0,
            max_iters: 20_000,
            rel_tol: 1e-12,
            residual_space: ResidualSpace::RawLoss,
            bounds: FitBounds::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(FitError::InvalidConfig("n_starts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(FitError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(FitError::InvalidConfig("rel_tol must be positive".into()));
        }
        let (elo, ehi) = self.bounds.exponent;
        if !(elo > 0.0 && ehi > elo && ehi.is_finite()) {
            return Err(FitError::InvalidConfig("exponent bounds must satisfy 0 < lo < hi".into()));
        }
        let (clo, chi) = self.bounds.log10_critical;
        if !(chi > clo) {
            return Err(FitError::InvalidConfig("log10_critical bounds must satisfy lo < hi".into()));
        }
        if let Some((lo, hi)) = self.bounds.l_inf {
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return Err(FitError::InvalidConfig("l_inf bounds must satisfy 0 <= lo < hi".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: LawParams,
    /// Mean squared residual.
    pub objective: f64,
    pub residuals: Vec<f64>,
    pub residual_space: ResidualSpace,
    pub n_evals: usize,
    pub start_index: usize,
    pub converged: bool,
}

/// A single observation for a one-resource law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point1D {
    pub x: f64,
    pub loss: f64,
}

/// A converged run: parameters, data hours and loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointPoint {
    pub n: f64,
    pub d: f64,
    pub loss: f64,
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn decode(&self, z: f64) -> f64 {
        self.lo + (self.hi - self.lo) * logistic(z)
    }
    fn encode(&self, v: f64) -> f64 {
        logit((v - self.lo) / (self.hi - self.lo))
    }
}

/// Exponent mapped log-uniformly onto its bounds.
#[derive(Debug, Clone, Copy)]
struct ExpMap(Interval);

impl ExpMap {
    fn new((lo, hi): (f64, f64)) -> Self {
        ExpMap(Interval { lo: lo.ln(), hi: hi.ln() })
    }
    fn decode(&self, z: f64) -> f64 {
        self.0.decode(z).exp()
    }
    fn encode(&self, v: f64) -> f64 {
        self.0.encode(v.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Power1D,
    Kaplan,
    General,
}

/// Observations normalized to `(x, d, loss)`; `d` is unused for 1D laws.
struct Problem {
    shape: Shape,
    xs: Vec<f64>,
    ds: Vec<f64>,
    ys: Vec<f64>,
    ln_x_ref: f64,
    ln_d_ref: f64,
    l_inf: Interval,
    exponent: ExpMap,
    log10_critical: (f64, f64),
    space: ResidualSpace,
}

impl Problem {
    fn dim(&self) -> usize {
        match self.shape {
            Shape::Power1D => 3,
            Shape::Kaplan => 4,
            Shape::General => 6,
        }
    }

    fn critical(&self, ln_ref: f64, amplitude: f64, exponent: f64) -> Option<f64> {
        let ln_c = ln_ref + amplitude / exponent;
        let log10 = ln_c / LN_10;
        if log10 < self.log10_critical.0 || log10 > self.log10_critical.1 {
            return None;
        }
        let c = ln_c.exp();
        (c > 0.0 && c.is_finite()).then_some(c)
    }

    fn decode(&self, z: &[f64]) -> Option<LawParams> {
        match self.shape {
            Shape::Power1D => {
                let l_inf = self.l_inf.decode(z[0]);
                let e = self.exponent.decode(z[2]);
                let c = self.critical(self.ln_x_ref, z[1], e)?;
                PowerLaw1D::new(l_inf, c, e).ok().map(LawParams::PowerLaw1D)
            }
            Shape::Kaplan => {
                let an = self.exponent.decode(z[1]);
                let ad = self.exponent.decode(z[3]);
                let nc = self.critical(self.ln_x_ref, z[0], an)?;
                let dc = self.critical(self.ln_d_ref, z[2], ad)?;
                KaplanJoint::new(nc, an, dc, ad).ok().map(LawParams::KaplanJoint)
            }
            Shape::General => {
                let l_inf = self.l_inf.decode(z[0]);
                let an = self.exponent.decode(z[2]);
                let ad = self.exponent.decode(z[4]);
                let a = self.exponent.decode(z[5]);
                let nc = self.critical(self.ln_x_ref, z[1], an)?;
                let dc = self.critical(self.ln_d_ref, z[3], ad)?;
                GeneralJoint::new(l_inf, nc, an, dc, ad, a).ok().map(LawParams::GeneralJoint)
            }
        }
    }

    #[cfg(test)]
    fn encode(&self, params: &LawParams) -> Vec<f64> {
        match params {
            LawParams::PowerLaw1D(l) => vec![
                self.l_inf.encode(l.l_inf()),
                l.exponent() * (l.critical().ln() - self.ln_x_ref),
                self.exponent.encode(l.exponent()),
            ],
            LawParams::KaplanJoint(l) => vec![
                l.alpha_n() * (l.n_c().ln() - self.ln_x_ref),
                self.exponent.encode(l.alpha_n()),
                l.alpha_d() * (l.d_c().ln() - self.ln_d_ref),
                self.exponent.encode(l.alpha_d()),
            ],
            LawParams::GeneralJoint(l) => vec![
                self.l_inf.encode(l.l_inf()),
                l.alpha_n() * (l.n_c().ln() - self.ln_x_ref),
                self.exponent.encode(l.alpha_n()),
                l.alpha_d() * (l.d_c().ln() - self.ln_d_ref),
                self.exponent.encode(l.alpha_d()),
                self.exponent.encode(l.alpha()),
            ],
        }
    }

    fn l_inf_of(params: &LawParams) -> f64 {
        match params {
            LawParams::PowerLaw1D(l) => l.l_inf(),
            LawParams::KaplanJoint(_) => 0.0,
            LawParams::GeneralJoint(l) => l.l_inf(),
        }
    }

    /// Log of `predicted - l_inf`, computed without cancellation where the
    /// law's structure allows it.
    fn log_reducible(params: &LawParams, x: f64, d: f64) -> f64 {
        match params {
            LawParams::PowerLaw1D(l) => l.log_reducible(x).unwrap_or(f64::NAN),
            LawParams::KaplanJoint(l) => l.eval(x, d).map(f64::ln).unwrap_or(f64::NAN),
            LawParams::GeneralJoint(l) => {
                // L - L∞ = L∞ · expm1(α·(ln B - ln q)) with B the bracket sum
                let Ok(t) = l.bracket_terms(x, d) else {
                    return f64::NAN;
                };
                if l.l_inf() == 0.0 {
                    return l.alpha() * t.log_total();
                }
                let excess = log_sum_exp(&[t.model, t.data]) - t.irreducible;
                let rel = (l.alpha() * log_sum_exp(&[0.0, excess])).exp_m1();
                l.l_inf().ln() + rel.ln()
            }
        }
    }

    fn residuals(&self, params: &LawParams) -> Vec<f64> {
        let l_inf = Self::l_inf_of(params);
        self.xs
            .iter()
            .zip(&self.ds)
            .zip(&self.ys)
            .map(|((&x, &d), &y)| match self.space {
                ResidualSpace::RawLoss => params.eval(x, d).map(|p| p - y).unwrap_or(f64::NAN),
                ResidualSpace::LogExcessLoss => {
                    if y <= l_inf {
                        return f64::INFINITY;
                    }
                    Self::log_reducible(params, x, d) - (y - l_inf).ln()
                }
            })
            .collect()
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let Some(params) = self.decode(z) else {
            return f64::INFINITY;
        };
        mean_square(&self.residuals(&params))
    }

    /// Deterministic start points: heuristic centres perturbed along a
    /// seed-rotated Halton sequence.
    fn starts(&self, n_starts: usize, seed: u64) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let y_min = self.ys.iter().copied().fold(f64::INFINITY, f64::min);
        let fractions = [0.5, 0.8, 0.95, 0.99];

        (0..n_starts)
            .map(|i| {
                let u: Vec<f64> = (0..dim)
                    .map(|k| {
                        if i == 0 {
                            0.5
                        } else {
                            (halton(i as u64, PRIMES[k]) + shift[k]).fract()
                        }
                    })
                    .collect();
                let frac = fractions[i % fractions.len()];
                let l_guess = (y_min * frac).clamp(self.l_inf.lo, self.l_inf.hi);
                let centred = |c: f64, w: f64, u: f64| c + (u - 0.5) * w;
                match self.shape {
                    Shape::Power1D => {
                        let (e0, amp0) = self.power_heuristic(l_guess);
                        let e = (e0.ln() + (u[2] - 0.5) * 2.0 * LN_10).exp();
                        let e = e.clamp(self.exponent.0.lo.exp() * 1.01, self.exponent.0.hi.exp() * 0.99);
                        vec![
                            self.l_inf.encode(l_guess),
                            centred(amp0, 3.0, u[1]),
                            self.exponent.encode(e),
                        ]
                    }
                    Shape::Kaplan | Shape::General => {
                        let log_exp = |u: f64| {
                            let e = (1e-3f64.ln() + u * (1e3f64).ln()).exp();
                            self.exponent.encode(e.clamp(self.exponent.0.lo.exp() * 1.01, self.exponent.0.hi.exp() * 0.99))
                        };
                        let amp = |u: f64| -4.0 + 5.0 * u;
                        if self.shape == Shape::Kaplan {
                            vec![amp(u[0]), log_exp(u[1]), amp(u[2]), log_exp(u[3])]
                        } else {
                            vec![
                                self.l_inf.encode(l_guess),
                                amp(u[1]),
                                log_exp(u[2]),
                                amp(u[3]),
                                log_exp(u[4]),
                                log_exp(u[5]),
                            ]
                        }
                    }
                }
            })
            .collect()
    }

    /// Exponent from the log-log slope of the two extreme points and the
    /// amplitude that puts the median point on the curve.
    fn power_heuristic(&self, l_guess: f64) -> (f64, f64) {
        let mut order: Vec<usize> = (0..self.xs.len()).collect();
        order.sort_by(|&a, &b| self.xs[a].total_cmp(&self.xs[b]));
        let (first, last) = (order[0], order[order.len() - 1]);
        let excess = |i: usize| (self.ys[i] - l_guess).max(1e-12).ln();
        let slope = (excess(first) - excess(last)) / (self.xs[last].ln() - self.xs[first].ln());
        let (lo, hi) = (self.exponent.0.lo.exp(), self.exponent.0.hi.exp());
        let e = if slope.is_finite() && slope > lo { slope.min(hi) } else { lo.max(1e-2).min(hi) };
        let mid = order[order.len() / 2];
        let amp = excess(mid) + e * (self.xs[mid].ln() - self.ln_x_ref);
        (e, amp)
    }
}

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Radical inverse of `index` in the given base.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn mean_square(r: &[f64]) -> f64 {
    let s: f64 = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

fn check_finite_positive(values: impl Iterator<Item = (f64, &'static str)>) -> Result<()> {
    for (v, name) in values {
        if !v.is_finite() || v <= 0.0 {
            return Err(FitError::InvalidInput(format!("{name} must be finite and positive, got {v}")));
        }
    }
    Ok(())
}

fn distinct(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

fn mean_ln(values: &[f64]) -> f64 {
    values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64
}

impl Problem {
    fn new(shape: Shape, xs: Vec<f64>, ds: Vec<f64>, ys: Vec<f64>, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        let y_min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let (lo, hi) = config.bounds.l_inf.unwrap_or((0.0, y_min));
        if !(hi > lo) {
            return Err(FitError::InvalidConfig(format!("empty l_inf range [{lo}, {hi}]")));
        }
        Ok(Problem {
            shape,
            ln_x_ref: mean_ln(&xs),
            ln_d_ref: mean_ln(&ds),
            xs,
            ds,
            ys,
            l_inf: Interval { lo, hi },
            exponent: ExpMap::new(config.bounds.exponent),
            log10_critical: config.bounds.log10_critical,
            space: config.residual_space,
        })
    }

    fn solve(&self, config: &FitConfig) -> Result<FitResult> {
        let opts = NelderMeadOptions {
            max_iters: config.max_iters,
            rel_tol: config.rel_tol,
            ..Default::default()
        };
        let starts = self.starts(config.n_starts, config.seed);
        let runs: Vec<_> = starts
            .par_iter()
            .map(|z0| minimize(|z| self.objective(z), z0, &opts))
            .collect();

        let mut best = 0;
        for (i, r) in runs.iter().enumerate() {
            if r.f < runs[best].f {
                best = i;
            }
        }
        let winner = &runs[best];
        let params = self.decode(&winner.x).ok_or_else(|| {
            FitError::InvalidInput("no start reached a finite objective".into())
        })?;
        let residuals = self.residuals(&params);
        let objective = mean_square(&residuals);
        if !objective.is_finite() {
            return Err(FitError::InvalidInput("no start reached a finite objective".into()));
        }
        Ok(FitResult {
            params,
            objective,
            residuals,
            residual_space: self.space,
            n_evals: runs.iter().map(|r| r.n_evals).sum(),
            start_index: best,
            converged: winner.converged,
        })
    }
}

/// Fits `l_inf + (critical / x)^exponent` to `(x, loss)` points.
pub fn fit_power_law_1d(points: &[Point1D], config: &FitConfig) -> Result<FitResult> {
    check_finite_positive(points.iter().flat_map(|p| [(p.x, "x"), (p.loss, "loss")]))?;
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let n_distinct = distinct(&xs);
    if n_distinct < 4 {
        return Err(FitError::UnderDetermined(format!(
            "a 3-parameter law needs at least 4 distinct x values, got {n_distinct}"
        )));
    }
    let ys = points.iter().map(|p| p.loss).collect();
    let ds = vec![1.0; xs.len()];
    Problem::new(Shape::Power1D, xs, ds, ys, config)?.solve(config)
}

fn joint_inputs(points: &[JointPoint], n_params: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_finite_positive(
        points
            .iter()
            .flat_map(|p| [(p.n, "n"), (p.d, "d"), (p.loss, "loss")]),
    )?;
    if points.len() < n_params + 1 {
        return Err(FitError::UnderDetermined(format!(
            "a {n_params}-parameter law needs at least {} points, got {}",
            n_params + 1,
            points.len()
        )));
    }
    let ns: Vec<f64> = points.iter().map(|p| p.n).collect();
    let ds: Vec<f64> = points.iter().map(|p| p.d).collect();
    if distinct(&ns) < 2 {
        return Err(FitError::UnderDetermined("all points share one model size".into()));
    }
    if distinct(&ds) < 2 {
        return Err(FitError::UnderDetermined("all points share one data size".into()));
    }
    Ok((ns, ds, points.iter().map(|p| p.loss).collect()))
}

/// Fits the joint law with irreducible loss (six parameters).
pub fn fit_general_joint(points: &[JointPoint], config: &FitConfig) -> Result<FitResult> {
    let (ns, ds, ys) = joint_inputs(points, 6)?;
    Problem::new(Shape::General, ns, ds, ys, config)?.solve(config)
}

/// Fits the joint law without irreducible loss (four parameters).
pub fn fit_kaplan_joint(points: &[JointPoint], config: &FitConfig) -> Result<FitResult> {
    let (ns, ds, ys) = joint_inputs(points, 4)?;
    Problem::new(Shape::Kaplan, ns, ds, ys, config)?.solve(config)
}

/// Objective of `params` on `points` in the given residual space, using the
/// same evaluation path as the fitter.
pub fn objective_1d(params: &PowerLaw1D, points: &[Point1D], space: ResidualSpace) -> f64 {
    let problem = Problem {
        shape: Shape::Power1D,
        xs: points.iter().map(|p| p.x).collect(),
        ds: vec![1.0; points.len()],
        ys: points.iter().map(|p| p.loss).collect(),
        ln_x_ref: 0.0,
        ln_d_ref: 0.0,
        l_inf: Interval { lo: 0.0, hi: 1.0 },
        exponent: ExpMap::new((1e-4, 10.0)),
        log10_critical: (f64::NEG_INFINITY, f64::INFINITY),
        space,
    };
    mean_square(&problem.residuals(&LawParams::PowerLaw1D(*params)))
}

/// Objective of a joint law on `points` in the given residual space.
pub fn objective_joint(params: &LawParams, points: &[JointPoint], space: ResidualSpace) -> f64 {
    let problem = Problem {
        shape: Shape::General,
        xs: points.iter().map(|p| p.n).collect(),
        ds: points.iter().map(|p| p.d).collect(),
        ys: points.iter().map(|p| p.loss).collect(),
        ln_x_ref: 0.0,
        ln_d_ref: 0.0,
        l_inf: Interval { lo: 0.0, hi: 1.0 },
        exponent: ExpMap::new((1e-4, 10.0)),
        log10_critical: (f64::NEG_INFINITY, f64::INFINITY),
        space,
    };
    mean_square(&problem.residuals(params))
}
