//! Resource-planning answers derived in closed form from fitted laws.

use crate::laws::{BracketTerms, GeneralJoint, LawError, LawParams};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("invalid planner input: {0}")]
    Invalid(String),
    #[error("question `{question}` needs a {needs} law, got {got}")]
    WrongLaw {
        question: Question,
        needs: &'static str,
        got: &'static str,
    },
    #[error(transparent)]
    Law(#[from] LawError),
}

pub type Result<T> = std::result::Result<T, PlanError>;

/// Ratio of the model bracket term to the data bracket term used by
/// [`min_data_for_model`] unless the caller picks another.
pub const DEFAULT_HEADROOM: f64 = 10.0;

/// Reduction of the reducible loss in the paper's "five percent" questions.
pub const FIVE_PERCENT: f64 = 0.05;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(PlanError::Invalid(format!("{name} must be finite and positive, got {v}")))
    }
}

fn representable(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PlanError::Invalid(format!("{what} overflows a double")))
    }
}

/// Factor by which a resource must grow to shrink a power-law term with the
/// given exponent by `reduction`: `(1 - reduction)^(-1/exponent)`.
pub fn fold_increase_for_reduction(exponent: f64, reduction: f64) -> Result<f64> {
    positive("exponent", exponent)?;
    if !(reduction > 0.0 && reduction < 1.0) {
        return Err(PlanError::Invalid(format!("reduction must lie in (0, 1), got {reduction}")));
    }
    representable("fold increase", (-(-reduction).ln_1p() / exponent).exp())
}

/// Growth of the data set that keeps pace with one doubling of the model:
/// `2^(alpha_n / alpha_d)`.
pub fn data_growth_per_model_doubling(alpha_n: f64, alpha_d: f64) -> Result<f64> {
    positive("alpha_n", alpha_n)?;
    positive("alpha_d", alpha_d)?;
    representable("data growth", (alpha_n / alpha_d).exp2())
}

/// Exponent of `N` in the minimum-data rule, `alpha_n / alpha_d`.
pub fn min_data_exponent(law: &GeneralJoint) -> f64 {
    law.alpha_n() / law.alpha_d()
}

/// Coefficient `k` of the minimum-data rule `D = k · N^(alpha_n/alpha_d)`:
/// `D_C · headroom^(alpha/alpha_d) · N_C^(-alpha_n/alpha_d)`.
pub fn min_data_coefficient(law: &GeneralJoint, headroom: f64) -> Result<f64> {
    check_headroom(headroom)?;
    representable("min-data coefficient", log_min_data(law, 0.0, headroom).exp())
}

fn check_headroom(headroom: f64) -> Result<()> {
    if headroom.is_finite() && headroom >= 1.0 {
        Ok(())
    } else {
        Err(PlanError::Invalid(format!("headroom must be finite and at least 1, got {headroom}")))
    }
}

fn log_min_data(law: &GeneralJoint, ln_n: f64, headroom: f64) -> f64 {
    law.d_c().ln() + headroom.ln() * law.alpha() / law.alpha_d() + (ln_n - law.n_c().ln()) * min_data_exponent(law)
}

/// Hours of data at which the data bracket term of the joint law is
/// `1/headroom` of the model bracket term for a model with `n` parameters.
/// With `headroom = 1` the two terms balance.
pub fn min_data_for_model(law: &GeneralJoint, n: f64, headroom: f64) -> Result<f64> {
    positive("n", n)?;
    check_headroom(headroom)?;
    representable("min data", log_min_data(law, n.ln(), headroom).exp())
}

/// Fractional drop of the reducible loss per doubling of compute,
/// `1 - 2^(-alpha_c)`.
pub fn compute_doubling_gain(alpha_c: f64) -> Result<f64> {
    positive("alpha_c", alpha_c)?;
    Ok(-(-alpha_c * std::f64::consts::LN_2).exp_m1())
}

/// Compute growth that halves the reducible loss, `2^(1/alpha_c)`.
pub fn compute_for_halving(alpha_c: f64) -> Result<f64> {
    positive("alpha_c", alpha_c)?;
    representable("compute growth", (1.0 / alpha_c).exp2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bottleneck {
    DataLimited,
    ModelLimited,
    IrreducibleLimited,
}

impl fmt::Display for Bottleneck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bottleneck::DataLimited => "data_limited",
            Bottleneck::ModelLimited => "model_limited",
            Bottleneck::IrreducibleLimited => "irreducible_limited",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BottleneckReport {
    pub bottleneck: Bottleneck,
    /// Natural logarithms of the three bracket terms.
    pub log_terms: BracketTerms,
}

/// Which bracket term of the joint law is largest at `(n, d)`. Ties go to
/// data, then model.
pub fn dominant_bottleneck(law: &GeneralJoint, n: f64, d: f64) -> Result<BottleneckReport> {
    let t = law.bracket_terms(n, d)?;
    let bottleneck = if t.data >= t.model && t.data >= t.irreducible {
        Bottleneck::DataLimited
    } else if t.model >= t.irreducible {
        Bottleneck::ModelLimited
    } else {
        Bottleneck::IrreducibleLimited
    };
    Ok(BottleneckReport { bottleneck, log_terms: t })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Question {
    LossAt,
    MinData,
    Bottleneck,
    DoubleCompute,
    HalveLoss,
    FoldIncrease,
    DataPerDoubling,
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Question::LossAt => "loss_at",
            Question::MinData => "min_data",
            Question::Bottleneck => "bottleneck",
            Question::DoubleCompute => "double_compute",
            Question::HalveLoss => "halve_loss",
            Question::FoldIncrease => "fold_increase",
            Question::DataPerDoubling => "data_per_doubling",
        })
    }
}

/// Which resource a fold-increase question is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    Data,
    Model,
    Compute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanInput {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub question: Question,
    pub inputs: Vec<PlanInput>,
    pub answer: f64,
    pub unit: String,
    pub formula: String,
    /// Categorical answer, set for bottleneck questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl PlanReport {
    fn new(question: Question, inputs: &[(&str, f64)], answer: f64, unit: &str, formula: &str) -> Self {
        PlanReport {
            question,
            inputs: inputs
                .iter()
                .map(|&(name, value)| PlanInput {
                    name: name.to_string(),
                    value,
                })
                .collect(),
            answer,
            unit: unit.to_string(),
            formula: formula.to_string(),
            label: None,
        }
    }
}

impl fmt::Display for PlanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inputs: Vec<String> = self.inputs.iter().map(|i| format!("{}={}", i.name, i.value)).collect();
        write!(f, "{}({})", self.question, inputs.join(", "))?;
        match &self.label {
            Some(label) => write!(f, " = {label}")?,
            None => write!(f, " = {:.6} {}", self.answer, self.unit)?,
        }
        write!(f, "  [{}]", self.formula)
    }
}

fn wrong(question: Question, needs: &'static str, law: &LawParams) -> PlanError {
    PlanError::WrongLaw {
        question,
        needs,
        got: law.kind(),
    }
}

fn general(question: Question, law: &LawParams) -> Result<&GeneralJoint> {
    match law {
        LawParams::GeneralJoint(g) => Ok(g),
        other => Err(wrong(question, "general_joint", other)),
    }
}

/// Exponent of the one-resource law, used for compute questions.
fn one_resource_exponent(question: Question, law: &LawParams) -> Result<f64> {
    match law {
        LawParams::PowerLaw1D(p) => Ok(p.exponent()),
        other => Err(wrong(question, "power_law_1d", other)),
    }
}

/// `(alpha_n, alpha_d)` of either joint law.
fn joint_exponents(question: Question, law: &LawParams) -> Result<(f64, f64)> {
    match law {
        LawParams::GeneralJoint(g) => Ok((g.alpha_n(), g.alpha_d())),
        LawParams::KaplanJoint(k) => Ok((k.alpha_n(), k.alpha_d())),
        other => Err(wrong(question, "joint", other)),
    }
}

pub fn plan_loss_at(law: &LawParams, x: f64, d: f64) -> Result<PlanReport> {
    let loss = law.eval(x, d)?;
    let inputs: &[(&str, f64)] = match law {
        LawParams::PowerLaw1D(_) => &[("x", x)],
        _ => &[("n", x), ("d", d)],
    };
    let formula = match law {
        LawParams::PowerLaw1D(_) => "L = L_inf + (X_c/X)^a",
        LawParams::KaplanJoint(_) => "L = [(N_c/N)^(a_N/a_D) + D_c/D]^a_D",
        LawParams::GeneralJoint(_) => "L = [L_inf^(1/a) + (N_c/N)^(a_N/a) + (D_c/D)^(a_D/a)]^a",
    };
    Ok(PlanReport::new(Question::LossAt, inputs, loss, "loss", formula))
}

pub fn plan_min_data(law: &LawParams, n: f64, headroom: f64) -> Result<PlanReport> {
    let g = general(Question::MinData, law)?;
    let d = min_data_for_model(g, n, headroom)?;
    Ok(PlanReport::new(
        Question::MinData,
        &[
            ("n", n),
            ("headroom", headroom),
            ("coefficient", min_data_coefficient(g, headroom)?),
            ("exponent", min_data_exponent(g)),
        ],
        d,
        "hours",
        "D = D_C * headroom^(a/a_D) * (N/N_C)^(a_N/a_D)",
    ))
}

pub fn plan_bottleneck(law: &LawParams, n: f64, d: f64) -> Result<PlanReport> {
    let g = general(Question::Bottleneck, law)?;
    let b = dominant_bottleneck(g, n, d)?;
    let mut r = PlanReport::new(
        Question::Bottleneck,
        &[
            ("n", n),
            ("d", d),
            ("log_irreducible", b.log_terms.irreducible),
            ("log_model", b.log_terms.model),
            ("log_data", b.log_terms.data),
        ],
        b.log_terms.irreducible.max(b.log_terms.model).max(b.log_terms.data),
        "log bracket term",
        "argmax{L_inf^(1/a), (N_c/N)^(a_N/a), (D_c/D)^(a_D/a)}",
    );
    r.label = Some(b.bottleneck.to_string());
    Ok(r)
}

pub fn plan_double_compute(law: &LawParams) -> Result<PlanReport> {
    let a = one_resource_exponent(Question::DoubleCompute, law)?;
    Ok(PlanReport::new(
        Question::DoubleCompute,
        &[("alpha_c", a)],
        compute_doubling_gain(a)?,
        "fraction of reducible loss",
        "1 - 2^(-a_C)",
    ))
}

pub fn plan_halve_loss(law: &LawParams) -> Result<PlanReport> {
    let a = one_resource_exponent(Question::HalveLoss, law)?;
    Ok(PlanReport::new(
        Question::HalveLoss,
        &[("alpha_c", a)],
        compute_for_halving(a)?,
        "fold increase in compute",
        "2^(1/a_C)",
    ))
}

pub fn plan_fold_increase(law: &LawParams, resource: Resource, reduction: f64) -> Result<PlanReport> {
    let q = Question::FoldIncrease;
    let exponent = match resource {
        Resource::Data => joint_exponents(q, law)?.1,
        Resource::Model => joint_exponents(q, law)?.0,
        Resource::Compute => one_resource_exponent(q, law)?,
    };
    Ok(PlanReport::new(
        q,
        &[("exponent", exponent), ("reduction", reduction)],
        fold_increase_for_reduction(exponent, reduction)?,
        "fold increase",
        "(1 - r)^(-1/a)",
    ))
}

pub fn plan_data_per_doubling(law: &LawParams) -> Result<PlanReport> {
    let (an, ad) = joint_exponents(Question::DataPerDoubling, law)?;
    Ok(PlanReport::new(
        Question::DataPerDoubling,
        &[("alpha_n", an), ("alpha_d", ad)],
        data_growth_per_model_doubling(an, ad)?,
        "fold increase in data",
        "2^(a_N/a_D)",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::*;

    #[test]
    fn five_percent_examples() {
        assert!((fold_increase_for_reduction(ALPHA_D, 0.05).unwrap() - 14.0).abs() < 0.1);
        assert!((fold_increase_for_reduction(ALPHA_N, 0.05).unwrap() - 24.6).abs() < 0.1);
        assert!((fold_increase_for_reduction(0.3, 1e-12).unwrap() - 1.0).abs() < 1e-10);
        assert!(fold_increase_for_reduction(0.3, 0.0).is_err());
        assert!(fold_increase_for_reduction(0.3, 1.0).is_err());
        assert!(fold_increase_for_reduction(0.0, 0.5).is_err());
    }

    #[test]
    fn doubling_examples() {
        assert!((data_growth_per_model_doubling(ALPHA_N, ALPHA_D).unwrap() - 1.77).abs() < 0.005);
        assert_eq!(data_growth_per_model_doubling(0.2, 0.2).unwrap(), 2.0);
        assert!(data_growth_per_model_doubling(ALPHA_N, ALPHA_D).unwrap() < 2.0);
    }

    #[test]
    fn min_data_examples() {
        let law = converged_joint();
        assert!((min_data_exponent(&law) - 0.8230).abs() < 0.0005);
        let k = min_data_coefficient(&law, DEFAULT_HEADROOM).unwrap();
        assert!((k - 0.0217).abs() < 0.0005, "{k}");
        let d = min_data_for_model(&law, 1e6, DEFAULT_HEADROOM).unwrap();
        assert!((d / 1.9e3 - 1.0).abs() < 0.05, "{d}");
        let balance = min_data_for_model(&law, 1e6, 1.0).unwrap();
        let t = law.bracket_terms(1e6, balance).unwrap();
        assert!((t.data - t.model).abs() < 1e-9);
        assert!(min_data_for_model(&law, 1e6, 0.5).is_err());
    }

    #[test]
    fn compute_examples() {
        assert!((compute_doubling_gain(ALPHA_C_LSTM).unwrap() - 0.109).abs() < 0.001);
        assert!((compute_doubling_gain(ALPHA_C_TRANSFORMER).unwrap() - 0.127).abs() < 0.001);
        assert!(compute_doubling_gain(1e-12).unwrap() < 1e-11);
        assert!((compute_for_halving(ALPHA_C_LSTM).unwrap() - 63.5).abs() < 0.5);
        assert!((compute_for_halving(ALPHA_C_TRANSFORMER).unwrap() - 33.7).abs() < 0.3);
        assert_eq!(compute_for_halving(1.0).unwrap(), 2.0);
    }

    #[test]
    fn bottleneck_examples() {
        let law = converged_joint();
        let n11 = 65_521_984.0;
        assert_eq!(dominant_bottleneck(&law, n11, 180.0).unwrap().bottleneck, Bottleneck::DataLimited);
        assert_eq!(
            dominant_bottleneck(&law, 1.5e6, CORPUS_HOURS).unwrap().bottleneck,
            Bottleneck::ModelLimited
        );
        assert_eq!(
            dominant_bottleneck(&law, f64::INFINITY, f64::INFINITY).unwrap().bottleneck,
            Bottleneck::IrreducibleLimited
        );
    }

    #[test]
    fn reports_check_law_kind() {
        let joint = LawParams::GeneralJoint(converged_joint());
        let one = LawParams::PowerLaw1D(data_law());
        assert!(matches!(plan_double_compute(&joint), Err(PlanError::WrongLaw { .. })));
        assert!(matches!(plan_min_data(&one, 1e6, 10.0), Err(PlanError::WrongLaw { .. })));
        let r = plan_bottleneck(&joint, 65.5e6, 180.0).unwrap();
        assert_eq!(r.label.as_deref(), Some("data_limited"));
        let r = plan_loss_at(&joint, f64::INFINITY, f64::INFINITY).unwrap();
        assert!((r.answer - L_INF_CONVERGED).abs() < 1e-12);
        let r = plan_min_data(&joint, 1e6, 10.0).unwrap();
        assert_eq!(r.inputs.len(), 4);
    }
}
