//! Parametric scaling laws.
//!
//! Three shapes are supported:
//!
//! * [`PowerLaw1D`]: `L(x) = L∞ + (x_c / x)^α`, used for loss against data,
//!   parameters, or training compute.
//! * [`KaplanJoint`]: `L(N, D) = [(N_c/N)^(α_N/α_D) + D_c/D]^α_D`.
//! * [`GeneralJoint`]: `L(N, D) = [L∞^(1/α) + (N_c/N)^(α_N/α) + (D_c/D)^(α_D/α)]^α`.
//!
//! The joint laws are evaluated with every bracket term held as a logarithm
//! and combined by log-sum-exp. With realistic constants (critical values
//! near 1e-23, α near 0.014) the individual bracket terms sit around 1e-37
//! and can leave the range of `f64` entirely, while their logarithms are
//! ordinary numbers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LawError {
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    InvalidParam {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("resource `{name}` must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
}

pub type Result<T> = std::result::Result<T, LawError>;

/// `ln(Σ exp(t))`, exact for `-inf` entries.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(LawError::InvalidParam {
            name,
            requirement: "finite and > 0",
            value,
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(LawError::InvalidParam {
            name,
            requirement: "finite and >= 0",
            value,
        })
    }
}

/// Resource arguments may be `+inf` (the asymptotic limit) but never ≤ 0 or NaN.
fn resource(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(LawError::NonPositiveInput { name, value })
    }
}

/// Power law plus constant: `l_inf + (critical / x)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PowerLaw1DRecord")]
pub struct PowerLaw1D {
    l_inf: f64,
    critical: f64,
    exponent: f64,
}

#[derive(Deserialize)]
struct PowerLaw1DRecord {
    l_inf: f64,
    critical: f64,
    exponent: f64,
}

impl TryFrom<PowerLaw1DRecord> for PowerLaw1D {
    type Error = LawError;
    fn try_from(r: PowerLaw1DRecord) -> Result<Self> {
        PowerLaw1D::new(r.l_inf, r.critical, r.exponent)
    }
}

impl PowerLaw1D {
    pub fn new(l_inf: f64, critical: f64, exponent: f64) -> Result<Self> {
        Ok(PowerLaw1D {
            l_inf: non_negative("l_inf", l_inf)?,
            critical: positive("critical", critical)?,
            exponent: positive("exponent", exponent)?,
        })
    }

    pub fn l_inf(&self) -> f64 {
        self.l_inf
    }

    pub fn critical(&self) -> f64 {
        self.critical
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `ln((critical / x)^exponent)`, the log of the reducible term.
    pub fn log_reducible(&self, x: f64) -> Result<f64> {
        let x = resource("x", x)?;
        Ok(self.exponent * (self.critical.ln() - x.ln()))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.l_inf + self.log_reducible(x)?.exp())
    }
}

/// Joint law without an irreducible term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KaplanJointRecord")]
pub struct KaplanJoint {
    n_c: f64,
    alpha_n: f64,
    d_c: f64,
    alpha_d: f64,
}

#[derive(Deserialize)]
struct KaplanJointRecord {
    n_c: f64,
    alpha_n: f64,
    d_c: f64,
    alpha_d: f64,
}

impl TryFrom<KaplanJointRecord> for KaplanJoint {
    type Error = LawError;
    fn try_from(r: KaplanJointRecord) -> Result<Self> {
        KaplanJoint::new(r.n_c, r.alpha_n, r.d_c, r.alpha_d)
    }
}

impl KaplanJoint {
    pub fn new(n_c: f64, alpha_n: f64, d_c: f64, alpha_d: f64) -> Result<Self> {
        Ok(KaplanJoint {
            n_c: positive("n_c", n_c)?,
            alpha_n: positive("alpha_n", alpha_n)?,
            d_c: positive("d_c", d_c)?,
            alpha_d: positive("alpha_d", alpha_d)?,
        })
    }

    pub fn n_c(&self) -> f64 {
        self.n_c
    }
    pub fn alpha_n(&self) -> f64 {
        self.alpha_n
    }
    pub fn d_c(&self) -> f64 {
        self.d_c
    }
    pub fn alpha_d(&self) -> f64 {
        self.alpha_d
    }

    pub fn eval(&self, n: f64, d: f64) -> Result<f64> {
        let n = resource("n", n)?;
        let d = resource("d", d)?;
        let model = (self.alpha_n / self.alpha_d) * (self.n_c.ln() - n.ln());
        let data = self.d_c.ln() - d.ln();
        Ok((self.alpha_d * log_sum_exp(&[model, data])).exp())
    }
}

/// Joint law with an irreducible-loss term and an outer exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneralJointRecord")]
pub struct GeneralJoint {
    l_inf: f64,
    n_c: f64,
    alpha_n: f64,
    d_c: f64,
    alpha_d: f64,
    alpha: f64,
}

#[derive(Deserialize)]
struct GeneralJointRecord {
    l_inf: f64,
    n_c: f64,
    alpha_n: f64,
    d_c: f64,
    alpha_d: f64,
    alpha: f64,
}

impl TryFrom<GeneralJointRecord> for GeneralJoint {
    type Error = LawError;
    fn try_from(r: GeneralJointRecord) -> Result<Self> {
        GeneralJoint::new(r.l_inf, r.n_c, r.alpha_n, r.d_c, r.alpha_d, r.alpha)
    }
}

/// Logarithms of the three bracket terms of [`GeneralJoint`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketTerms {
    pub irreducible: f64,
    pub model: f64,
    pub data: f64,
}

impl BracketTerms {
    pub fn log_total(&self) -> f64 {
        log_sum_exp(&[self.irreducible, self.model, self.data])
    }
}

impl GeneralJoint {
    pub fn new(l_inf: f64, n_c: f64, alpha_n: f64, d_c: f64, alpha_d: f64, alpha: f64) -> Result<Self> {
        Ok(GeneralJoint {
            l_inf: non_negative("l_inf", l_inf)?,
            n_c: positive("n_c", n_c)?,
            alpha_n: positive("alpha_n", alpha_n)?,
            d_c: positive("d_c", d_c)?,
            alpha_d: positive("alpha_d", alpha_d)?,
            alpha: positive("alpha", alpha)?,
        })
    }

    /// Builds the law from the in-bracket irreducible term `q = L∞^(1/α)`.
    pub fn from_q(q: f64, n_c: f64, alpha_n: f64, d_c: f64, alpha_d: f64, alpha: f64) -> Result<Self> {
        let q = non_negative("q", q)?;
        let alpha = positive("alpha", alpha)?;
        GeneralJoint::new(q.powf(alpha), n_c, alpha_n, d_c, alpha_d, alpha)
    }

    pub fn l_inf(&self) -> f64 {
        self.l_inf
    }
    pub fn n_c(&self) -> f64 {
        self.n_c
    }
    pub fn alpha_n(&self) -> f64 {
        self.alpha_n
    }
    pub fn d_c(&self) -> f64 {
        self.d_c
    }
    pub fn alpha_d(&self) -> f64 {
        self.alpha_d
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ln q = ln(L∞) / α`; `-inf` when `L∞ = 0`.
    pub fn log_q(&self) -> f64 {
        self.l_inf.ln() / self.alpha
    }

    /// `q = L∞^(1/α)`. May underflow to zero for tiny `α`; prefer [`Self::log_q`].
    pub fn q(&self) -> f64 {
        self.log_q().exp()
    }

    pub fn bracket_terms(&self, n: f64, d: f64) -> Result<BracketTerms> {
        let n = resource("n", n)?;
        let d = resource("d", d)?;
        Ok(BracketTerms {
            irreducible: self.log_q(),
            model: (self.alpha_n / self.alpha) * (self.n_c.ln() - n.ln()),
            data: (self.alpha_d / self.alpha) * (self.d_c.ln() - d.ln()),
        })
    }

    pub fn eval(&self, n: f64, d: f64) -> Result<f64> {
        let t = self.bracket_terms(n, d)?;
        if self.l_inf > 0.0 {
            // L∞ · (1 + model/q + data/q)^α keeps the result at or above L∞ after rounding
            let excess = log_sum_exp(&[0.0, t.model - t.irreducible, t.data - t.irreducible]);
            Ok(self.l_inf * (self.alpha * excess).exp())
        } else {
            Ok((self.alpha * t.log_total()).exp())
        }
    }

    /// Loss reachable with unlimited parameters at `d` hours of data.
    pub fn data_frontier(&self, d: f64) -> Result<f64> {
        self.eval(f64::INFINITY, d)
    }

    /// Loss reachable with unlimited data at `n` parameters.
    pub fn model_frontier(&self, n: f64) -> Result<f64> {
        self.eval(n, f64::INFINITY)
    }
}

/// A fitted or user-supplied law of any supported shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law_kind", content = "params", rename_all = "snake_case")]
pub enum LawParams {
    #[serde(rename = "power_law_1d")]
    PowerLaw1D(PowerLaw1D),
    KaplanJoint(KaplanJoint),
    GeneralJoint(GeneralJoint),
}

impl LawParams {
    pub fn kind(&self) -> &'static str {
        match self {
            LawParams::PowerLaw1D(_) => "power_law_1d",
            LawParams::KaplanJoint(_) => "kaplan_joint",
            LawParams::GeneralJoint(_) => "general_joint",
        }
    }

    /// Evaluates the law. One-dimensional laws use `x` and ignore `d`.
    pub fn eval(&self, x: f64, d: f64) -> Result<f64> {
        match self {
            LawParams::PowerLaw1D(l) => l.eval(x),
            LawParams::KaplanJoint(l) => l.eval(x, d),
            LawParams::GeneralJoint(l) => l.eval(x, d),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            LawParams::PowerLaw1D(_) => 3,
            LawParams::KaplanJoint(_) => 4,
            LawParams::GeneralJoint(_) => 6,
        }
    }
}
