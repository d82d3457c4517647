//! CSV inputs and JSON reports.
//!
//! Converged runs use the header `variant,n_layer,units,n_ctx,params,data_hours,loss`.
//! A blank `params` cell is filled with the context-module count of the row's
//! architecture. Training curves use `run_id,step,frames,loss`, and each run id
//! names its architecture as `<variant>-L<layers>-u<units>[-c<n_ctx>][-i<input_dim>]`.
//!
//! JSON floats are written with 17 significant digits.

use crate::arch::{context_module_counts, ArchError, ArchSpec, Variant, DEFAULT_INPUT_DIM};
use crate::fitter::{FitConfig, FitResult, JointPoint, Point1D, ResidualSpace};
use crate::frontier::{compute_from_mults, Checkpoint, EnvelopePoint, FrontierError, FrontierFit, TrainingCurve};
use crate::laws::LawParams;
use crate::planner::{
    compute_doubling_gain, compute_for_halving, data_growth_per_model_doubling, fold_increase_for_reduction,
    min_data_coefficient, min_data_exponent, DEFAULT_HEADROOM, FIVE_PERCENT,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

pub const CONVERGED_HEADER: [&str; 7] = ["variant", "n_layer", "units", "n_ctx", "params", "data_hours", "loss"];
pub const CURVES_HEADER: [&str; 4] = ["run_id", "step", "frames", "loss"];

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("empty input: expected the header `{0}`")]
    Empty(String),
    #[error("bad run id `{id}`: {reason}")]
    RunId { id: String, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
}

pub type Result<T> = std::result::Result<T, RecordError>;

fn parse_err(line: u64, message: impl Into<String>) -> RecordError {
    RecordError::Parse {
        line,
        message: message.into(),
    }
}

/// A converged training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergedRun {
    pub arch: ArchSpec,
    /// Context-module parameters.
    pub params: u64,
    pub data_hours: f64,
    pub loss: f64,
}

impl ConvergedRun {
    pub fn point(&self) -> JointPoint {
        JointPoint {
            n: self.params as f64,
            d: self.data_hours,
            loss: self.loss,
        }
    }
}

fn reader(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

/// Reads all rows, checking the header. Returns `(line, record)` pairs.
fn rows(input: impl Read, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = reader(input);
    let mut out = Vec::new();
    let mut seen_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if !seen_header {
            if !rec.iter().eq(header.iter().copied()) {
                return Err(parse_err(
                    line,
                    format!("expected header `{}`, found `{}`", header.join(","), rec.iter().collect::<Vec<_>>().join(",")),
                ));
            }
            seen_header = true;
            continue;
        }
        if rec.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        out.push((line, rec));
    }
    if !seen_header {
        return Err(RecordError::Empty(header.join(",")));
    }
    Ok(out)
}

fn field<T: FromStr>(line: u64, name: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.parse()
        .map_err(|e| parse_err(line, format!("field `{name}` = `{raw}`: {e}")))
}

fn finite_positive(line: u64, name: &str, raw: &str) -> Result<f64> {
    let v: f64 = field(line, name, raw)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(parse_err(line, format!("field `{name}` must be finite and positive, got {raw}")))
    }
}

pub fn read_converged_csv(input: impl Read) -> Result<Vec<ConvergedRun>> {
    rows(input, &CONVERGED_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let variant: Variant = r[0]
                .parse()
                .map_err(|e: ArchError| parse_err(line, e.to_string()))?;
            let n_layer = field(line, "n_layer", &r[1])?;
            let units = field(line, "units", &r[2])?;
            let n_ctx = if r[3].is_empty() {
                None
            } else {
                Some(field(line, "n_ctx", &r[3])?)
            };
            let arch = ArchSpec {
                variant,
                n_layer,
                units,
                n_ctx,
                input_dim: DEFAULT_INPUT_DIM,
            };
            arch.validate().map_err(|e| parse_err(line, e.to_string()))?;
            let params = if r[4].is_empty() {
                context_module_counts(&arch)
                    .map_err(|e| parse_err(line, e.to_string()))?
                    .context_params
            } else {
                field(line, "params", &r[4])?
            };
            if params == 0 {
                return Err(parse_err(line, "field `params` must be positive"));
            }
            Ok(ConvergedRun {
                arch,
                params,
                data_hours: finite_positive(line, "data_hours", &r[5])?,
                loss: finite_positive(line, "loss", &r[6])?,
            })
        })
        .collect()
}

pub fn write_converged_csv(mut out: impl Write, runs: &[ConvergedRun]) -> Result<()> {
    writeln!(out, "{}", CONVERGED_HEADER.join(","))?;
    for r in runs {
        let n_ctx = r.arch.n_ctx.map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.arch.variant, r.arch.n_layer, r.arch.units, n_ctx, r.params, r.data_hours, r.loss
        )?;
    }
    Ok(())
}

/// Run id encoding `arch`, e.g. `transformer-L11-u704-c500`.
pub fn run_id_for(arch: &ArchSpec) -> String {
    let mut id = format!("{}-L{}-u{}", arch.variant, arch.n_layer, arch.units);
    if let Some(c) = arch.n_ctx {
        id.push_str(&format!("-c{c}"));
    }
    if arch.input_dim != DEFAULT_INPUT_DIM {
        id.push_str(&format!("-i{}", arch.input_dim));
    }
    id
}

/// Inverse of [`run_id_for`].
pub fn parse_run_id(id: &str) -> Result<ArchSpec> {
    let bad = |reason: &str| RecordError::RunId {
        id: id.to_string(),
        reason: reason.to_string(),
    };
    let mut parts = id.split('-');
    let variant: Variant = parts
        .next()
        .unwrap_or_default()
        .parse()
        .map_err(|_| bad("expected `lstm-L<layers>-u<units>` or `transformer-L<layers>-u<units>-c<n_ctx>`"))?;
    let (mut n_layer, mut units, mut n_ctx, mut input_dim) = (None, None, None, DEFAULT_INPUT_DIM);
    for part in parts {
        let (tag, digits) = part.split_at(part.chars().next().map_or(0, char::len_utf8));
        let v: u64 = digits.parse().map_err(|_| bad(&format!("bad component `{part}`")))?;
        match tag {
            "L" => n_layer = Some(v),
            "u" => units = Some(v),
            "c" => n_ctx = Some(v),
            "i" => input_dim = v,
            _ => return Err(bad(&format!("unknown component `{part}`"))),
        }
    }
    let arch = ArchSpec {
        variant,
        n_layer: n_layer.ok_or_else(|| bad("missing `L<layers>`"))?,
        units: units.ok_or_else(|| bad("missing `u<units>`"))?,
        n_ctx,
        input_dim,
    };
    arch.validate().map_err(|e| bad(&e.to_string()))?;
    Ok(arch)
}

/// Reads training curves, grouped by run id in order of first appearance.
/// Compute at each checkpoint follows from the architecture and frames.
pub fn read_curves_csv(input: impl Read) -> Result<Vec<TrainingCurve>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, (ArchSpec, Vec<Checkpoint>, u64)> = BTreeMap::new();
    for (line, r) in rows(input, &CURVES_HEADER)? {
        let id = r[0].to_string();
        if id.is_empty() {
            return Err(parse_err(line, "field `run_id` is empty"));
        }
        let step = field(line, "step", &r[1])?;
        let frames = field(line, "frames", &r[2])?;
        let loss = finite_positive(line, "loss", &r[3])?;
        if !groups.contains_key(&id) {
            let arch = parse_run_id(&id).map_err(|e| parse_err(line, e.to_string()))?;
            let m = context_module_counts(&arch)
                .map_err(|e| parse_err(line, e.to_string()))?
                .context_mults_per_frame;
            groups.insert(id.clone(), (arch, Vec::new(), m));
            order.push(id.clone());
        }
        let (_, cps, m) = groups.get_mut(&id).expect("inserted above");
        if let Some(prev) = cps.last() {
            if step <= prev.step {
                return Err(parse_err(line, format!("step {step} of `{id}` does not follow step {}", prev.step)));
            }
            if frames < prev.frames {
                return Err(parse_err(line, format!("frames of `{id}` decrease at step {step}")));
            }
        }
        cps.push(Checkpoint {
            step,
            frames,
            loss,
            compute: Some(compute_from_mults(*m, frames)),
        });
    }
    order
        .into_iter()
        .map(|id| {
            let (arch, checkpoints, _) = groups.remove(&id).expect("grouped");
            Ok(TrainingCurve::new(id, arch, checkpoints)?)
        })
        .collect()
}

pub fn write_curves_csv(mut out: impl Write, curves: &[TrainingCurve]) -> Result<()> {
    writeln!(out, "{}", CURVES_HEADER.join(","))?;
    for c in curves {
        for cp in &c.checkpoints {
            writeln!(out, "{},{},{},{}", c.run_id, cp.step, cp.frames, cp.loss)?;
        }
    }
    Ok(())
}

/// Which law a fit report describes and what its resource axis is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// Loss against data hours.
    Ld,
    /// Loss against context parameters.
    Ln,
    Kaplan,
    Joint,
    /// Loss against training compute, fit to the envelope of training curves.
    Frontier,
}

impl FromStr for FitKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ld" => Ok(FitKind::Ld),
            "ln" => Ok(FitKind::Ln),
            "kaplan" => Ok(FitKind::Kaplan),
            "joint" => Ok(FitKind::Joint),
            "frontier" => Ok(FitKind::Frontier),
            other => Err(format!("unknown fit kind `{other}`")),
        }
    }
}

impl FitKind {
    /// Points on the one-resource axis of `ld` or `ln` fits.
    pub fn points_1d(self, runs: &[ConvergedRun]) -> Vec<Point1D> {
        runs.iter()
            .map(|r| Point1D {
                x: match self {
                    FitKind::Ln => r.params as f64,
                    _ => r.data_hours,
                },
                loss: r.loss,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fit_kind: FitKind,
    #[serde(flatten)]
    pub law: LawParams,
    pub objective: f64,
    pub residual_space: ResidualSpace,
    pub n_points: usize,
    pub seed: u64,
    pub config: FitConfig,
    pub residuals: Vec<f64>,
    pub start_index: usize,
    pub n_evals: usize,
    pub converged: bool,
    pub derived: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Vec<EnvelopePoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
}

impl FitReport {
    pub fn new(fit_kind: FitKind, fit: &FitResult, config: &FitConfig) -> Self {
        FitReport {
            fit_kind,
            law: fit.params,
            objective: fit.objective,
            residual_space: fit.residual_space,
            n_points: fit.residuals.len(),
            seed: config.seed,
            config: config.clone(),
            residuals: fit.residuals.clone(),
            start_index: fit.start_index,
            n_evals: fit.n_evals,
            converged: fit.converged,
            derived: derived_quantities(&fit.params),
            envelope: None,
            support: None,
        }
    }

    pub fn from_frontier(ff: &FrontierFit, config: &FitConfig) -> Self {
        let mut r = FitReport::new(FitKind::Frontier, &ff.fit, config);
        r.envelope = Some(ff.envelope.clone());
        r.support = Some(ff.support.clone());
        r
    }
}

/// Planning quantities implied by a law, keyed by name.
pub fn derived_quantities(law: &LawParams) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let mut put = |k: &str, v: Option<f64>| {
        if let Some(v) = v {
            out.insert(k.to_string(), v);
        }
    };
    let fold = |a: f64| fold_increase_for_reduction(a, FIVE_PERCENT).ok();
    match law {
        LawParams::PowerLaw1D(p) => {
            put("fold_increase_5pct", fold(p.exponent()));
            put("doubling_gain", compute_doubling_gain(p.exponent()).ok());
            put("fold_increase_to_halve", compute_for_halving(p.exponent()).ok());
        }
        LawParams::KaplanJoint(k) => {
            put("fold_increase_5pct_data", fold(k.alpha_d()));
            put("fold_increase_5pct_model", fold(k.alpha_n()));
            put("data_per_doubling", data_growth_per_model_doubling(k.alpha_n(), k.alpha_d()).ok());
        }
        LawParams::GeneralJoint(g) => {
            put("fold_increase_5pct_data", fold(g.alpha_d()));
            put("fold_increase_5pct_model", fold(g.alpha_n()));
            put("data_per_doubling", data_growth_per_model_doubling(g.alpha_n(), g.alpha_d()).ok());
            put("min_data_exponent", Some(min_data_exponent(g)));
            put("min_data_coefficient", min_data_coefficient(g, DEFAULT_HEADROOM).ok());
        }
    }
    out
}

/// `x` with 17 significant digits and trailing mantissa zeros dropped.
pub fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    if exp == "0" {
        mantissa.to_string()
    } else {
        format!("{mantissa}e{exp}")
    }
}

/// Pretty JSON whose floats go through [`format_f64`].
struct Precise<'a>(serde_json::ser::PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn read_fit_report(input: impl Read) -> Result<FitReport> {
    Ok(serde_json::from_reader(input)?)
}
