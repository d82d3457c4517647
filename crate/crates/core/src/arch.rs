//! Closed-form parameter and multiplication accounting for the LSTM and
//! Transformer context modules of an auto-predictive coding acoustic model.
//!
//! All counts are exact `u64` integers. Every arithmetic step is checked;
//! a count that does not fit is reported as [`ArchError::Overflow`].

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Default acoustic feature dimension (log-Mel filterbank size).
pub const DEFAULT_INPUT_DIM: u64 = 64;

/// Width of the hidden projection inside each prediction head.
pub const PREDICTION_HIDDEN: u64 = 512;

/// Number of future frames predicted, one head per frame.
pub const PREDICTION_HEADS: u64 = 10;

/// Units per layer under the LSTM aspect-ratio rule.
pub const LSTM_ASPECT_RATIO: u64 = 256;

/// Units per layer under the Transformer aspect-ratio rule.
pub const TRANSFORMER_ASPECT_RATIO: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArchError {
    #[error("invalid architecture: {0}")]
    Invalid(String),
    #[error("integer overflow while counting {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, ArchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Lstm,
    Transformer,
}

impl Variant {
    /// Units per layer used by [`scale_model`].
    pub fn aspect_ratio(self) -> u64 {
        match self {
            Variant::Lstm => LSTM_ASPECT_RATIO,
            Variant::Transformer => TRANSFORMER_ASPECT_RATIO,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Lstm => f.write_str("lstm"),
            Variant::Transformer => f.write_str("transformer"),
        }
    }
}

impl FromStr for Variant {
    type Err = ArchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lstm" => Ok(Variant::Lstm),
            "transformer" | "xfmr" => Ok(Variant::Transformer),
            other => Err(ArchError::Invalid(format!("unknown variant `{other}`"))),
        }
    }
}

/// A context-module architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchSpec {
    pub variant: Variant,
    pub n_layer: u64,
    pub units: u64,
    /// Attention context length in frames. Present iff `variant` is Transformer.
    pub n_ctx: Option<u64>,
    pub input_dim: u64,
}

impl ArchSpec {
    pub fn lstm(n_layer: u64, units: u64) -> Result<Self> {
        let spec = ArchSpec {
            variant: Variant::Lstm,
            n_layer,
            units,
            n_ctx: None,
            input_dim: DEFAULT_INPUT_DIM,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn transformer(n_layer: u64, units: u64, n_ctx: u64) -> Result<Self> {
        let spec = ArchSpec {
            variant: Variant::Transformer,
            n_layer,
            units,
            n_ctx: Some(n_ctx),
            input_dim: DEFAULT_INPUT_DIM,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_input_dim(mut self, input_dim: u64) -> Result<Self> {
        self.input_dim = input_dim;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layer == 0 {
            return Err(ArchError::Invalid("n_layer must be at least 1".into()));
        }
        if self.units == 0 {
            return Err(ArchError::Invalid("units must be at least 1".into()));
        }
        if self.input_dim == 0 {
            return Err(ArchError::Invalid("input_dim must be at least 1".into()));
        }
        match (self.variant, self.n_ctx) {
            (Variant::Lstm, Some(_)) => Err(ArchError::Invalid(
                "an LSTM context module takes no attention context length".into(),
            )),
            (Variant::Transformer, None) => Err(ArchError::Invalid(
                "a Transformer context module requires n_ctx".into(),
            )),
            (Variant::Transformer, Some(0)) => {
                Err(ArchError::Invalid("n_ctx must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// How the LSTM per-layer parameter total is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LstmTotal {
    /// Sum of all rows, including the layer-norm gain and bias: `8u² + 6u`.
    #[default]
    RowSum,
    /// The tabulated total `4u(2u+1)`, which leaves out the `2u` layer-norm
    /// parameters.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCount {
    pub name: String,
    pub params: u64,
    pub mults_per_frame: u64,
}

impl ComponentCount {
    fn new(name: &str, params: u64, mults_per_frame: u64) -> Self {
        ComponentCount {
            name: name.to_string(),
            params,
            mults_per_frame,
        }
    }
}

/// Counts for a single context layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCounts {
    pub rows: Vec<ComponentCount>,
    pub params: u64,
    pub mults_per_frame: u64,
}

/// Per-component and total counts for a whole model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub arch: ArchSpec,
    /// Rows for a single context layer.
    pub per_component: Vec<ComponentCount>,
    pub layer_params: u64,
    pub layer_mults_per_frame: u64,
    /// The scaling-law `N`: context-module parameters only.
    pub context_params: u64,
    /// The per-frame inference multiplication count `M` of the context module.
    pub context_mults_per_frame: u64,
    pub encoder_params: u64,
    pub prediction_params: u64,
    pub full_model_params: u64,
}

fn mul(a: u64, b: u64, what: &'static str) -> Result<u64> {
    a.checked_mul(b).ok_or(ArchError::Overflow(what))
}

fn add(a: u64, b: u64, what: &'static str) -> Result<u64> {
    a.checked_add(b).ok_or(ArchError::Overflow(what))
}

/// `u(k·u + c)` with overflow checks.
fn poly(u: u64, k: u64, c: u64, what: &'static str) -> Result<u64> {
    mul(u, add(mul(k, u, what)?, c, what)?, what)
}

fn sum_rows(rows: &[ComponentCount]) -> Result<(u64, u64)> {
    rows.iter().try_fold((0u64, 0u64), |(p, m), r| {
        Ok((
            add(p, r.params, "layer params")?,
            add(m, r.mults_per_frame, "layer mults")?,
        ))
    })
}

/// Counts for one LSTM layer of width `units`.
pub fn lstm_layer_counts(units: u64, total: LstmTotal) -> Result<LayerCounts> {
    if units == 0 {
        return Err(ArchError::Invalid("units must be at least 1".into()));
    }
    let u = units;
    // u(2u+1): a 2u-wide input (x and h) plus a bias per unit
    let gate = poly(u, 2, 1, "lstm gate")?;
    let rows = vec![
        ComponentCount::new("gates", mul(3, gate, "lstm gates")?, mul(3, gate, "lstm gates")?),
        ComponentCount::new("cell_update", gate, gate),
        ComponentCount::new("layer_norm", mul(2, u, "lstm layer norm")?, u),
    ];
    let (row_params, mults) = sum_rows(&rows)?;
    let params = match total {
        LstmTotal::RowSum => row_params,
        LstmTotal::Printed => mul(4, gate, "lstm printed total")?,
    };
    Ok(LayerCounts {
        rows,
        params,
        mults_per_frame: mults,
    })
}

/// Counts for one Transformer encoder layer of width `units` attending over
/// `n_ctx` frames.
pub fn transformer_layer_counts(units: u64, n_ctx: u64) -> Result<LayerCounts> {
    if units == 0 {
        return Err(ArchError::Invalid("units must be at least 1".into()));
    }
    if n_ctx == 0 {
        return Err(ArchError::Invalid("n_ctx must be at least 1".into()));
    }
    let u = units;
    let qkv = mul(3, poly(u, 1, 1, "attention embedding")?, "attention embedding")?;
    let proj = poly(u, 1, 1, "attention projection")?;
    let ffn = poly(u, 8, 5, "feed-forward")?;
    let attn_mults = mul(mul(2, n_ctx, "self attention")?, u, "self attention")?;
    let rows = vec![
        ComponentCount::new("layer_norms", mul(4, u, "layer norms")?, mul(2, u, "layer norms")?),
        ComponentCount::new("attention_embedding", qkv, qkv),
        ComponentCount::new("self_attention", 0, attn_mults),
        ComponentCount::new("attention_projection", proj, proj),
        ComponentCount::new("feed_forward", ffn, ffn),
    ];
    let (params, mults_per_frame) = sum_rows(&rows)?;
    Ok(LayerCounts {
        rows,
        params,
        mults_per_frame,
    })
}

/// Closed-form Transformer layer totals, `(u(12u+13), u(12u + 2n_ctx + 11))`.
pub fn transformer_layer_totals(units: u64, n_ctx: u64) -> Result<(u64, u64)> {
    let params = poly(units, 12, 13, "transformer total")?;
    let c = add(mul(2, n_ctx, "transformer total")?, 11, "transformer total")?;
    let mults = poly(units, 12, c, "transformer total")?;
    Ok((params, mults))
}

/// Builds an architecture from a layer count using the fixed aspect ratio
/// of the variant. `n_ctx` must be given for Transformers and omitted for LSTMs.
pub fn scale_model(variant: Variant, n_layer: u64, n_ctx: Option<u64>) -> Result<ArchSpec> {
    if n_layer == 0 {
        return Err(ArchError::Invalid("n_layer must be at least 1".into()));
    }
    let units = mul(variant.aspect_ratio(), n_layer, "units")?;
    let spec = ArchSpec {
        variant,
        n_layer,
        units,
        n_ctx,
        input_dim: DEFAULT_INPUT_DIM,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn context_module_counts(spec: &ArchSpec) -> Result<ComplexityReport> {
    context_module_counts_with(spec, LstmTotal::RowSum)
}

pub fn context_module_counts_with(spec: &ArchSpec, lstm_total: LstmTotal) -> Result<ComplexityReport> {
    spec.validate()?;
    let layer = match spec.variant {
        Variant::Lstm => lstm_layer_counts(spec.units, lstm_total)?,
        // validate() guarantees n_ctx is present
        Variant::Transformer => transformer_layer_counts(spec.units, spec.n_ctx.unwrap_or(1))?,
    };
    let context_params = mul(layer.params, spec.n_layer, "context params")?;
    let context_mults = mul(layer.mults_per_frame, spec.n_layer, "context mults")?;

    let encoder_params = mul(spec.units, add(spec.input_dim, 1, "encoder")?, "encoder")?;
    let hidden = mul(PREDICTION_HIDDEN, add(spec.units, 1, "head")?, "head")?;
    let out = mul(spec.input_dim, PREDICTION_HIDDEN + 1, "head")?;
    let prediction_params = mul(PREDICTION_HEADS, add(hidden, out, "head")?, "heads")?;
    let full_model_params = add(
        add(context_params, encoder_params, "full model")?,
        prediction_params,
        "full model",
    )?;

    Ok(ComplexityReport {
        arch: *spec,
        per_component: layer.rows,
        layer_params: layer.params,
        layer_mults_per_frame: layer.mults_per_frame,
        context_params,
        context_mults_per_frame: context_mults,
        encoder_params,
        prediction_params,
        full_model_params,
    })
}

/// Context length at which the attention term `2·u·n_ctx` equals the
/// quadratic `12u²` term of the Transformer multiplication count.
pub fn attention_crossover(units: u64) -> Result<u64> {
    if units == 0 {
        return Err(ArchError::Invalid("units must be at least 1".into()));
    }
    mul(6, units, "crossover")
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.arch;
        write!(f, "{} n_layer={} units={}", a.variant, a.n_layer, a.units)?;
        if let Some(c) = a.n_ctx {
            write!(f, " n_ctx={c}")?;
        }
        writeln!(f, " input_dim={}", a.input_dim)?;
        writeln!(f, "{:<22} {:>16} {:>16}", "component (per layer)", "params", "mults/frame")?;
        for r in &self.per_component {
            writeln!(f, "{:<22} {:>16} {:>16}", r.name, r.params, r.mults_per_frame)?;
        }
        writeln!(f, "{:<22} {:>16} {:>16}", "layer total", self.layer_params, self.layer_mults_per_frame)?;
        writeln!(
            f,
            "{:<22} {:>16} {:>16}",
            "context (N, M)", self.context_params, self.context_mults_per_frame
        )?;
        writeln!(f, "{:<22} {:>16}", "encoder", self.encoder_params)?;
        writeln!(f, "{:<22} {:>16}", "prediction heads", self.prediction_params)?;
        write!(f, "{:<22} {:>16}", "full model", self.full_model_params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstm_256() {
        let c = lstm_layer_counts(256, LstmTotal::RowSum).unwrap();
        assert_eq!(c.params, 525_824);
        assert_eq!(c.mults_per_frame, 525_568);
        let p = lstm_layer_counts(256, LstmTotal::Printed).unwrap();
        assert_eq!(p.params, 525_312);
        assert_eq!(p.mults_per_frame, 525_568);
    }

    #[test]
    fn lstm_unit() {
        let c = lstm_layer_counts(1, LstmTotal::RowSum).unwrap();
        assert_eq!((c.params, c.mults_per_frame), (14, 13));
    }

    #[test]
    fn zero_units_rejected() {
        assert!(matches!(lstm_layer_counts(0, LstmTotal::RowSum), Err(ArchError::Invalid(_))));
        assert!(transformer_layer_counts(0, 10).is_err());
        assert!(transformer_layer_counts(10, 0).is_err());
        assert!(attention_crossover(0).is_err());
        assert!(scale_model(Variant::Lstm, 0, None).is_err());
    }

    #[test]
    fn transformer_examples() {
        let c = transformer_layer_counts(64, 500).unwrap();
        assert_eq!((c.params, c.mults_per_frame), (49_984, 113_856));
        let c = transformer_layer_counts(1, 1).unwrap();
        assert_eq!((c.params, c.mults_per_frame), (25, 25));
    }

    #[test]
    fn aspect_ratio() {
        assert_eq!(scale_model(Variant::Lstm, 2, None).unwrap().units, 512);
        assert_eq!(scale_model(Variant::Lstm, 1, None).unwrap().units, 256);
        assert_eq!(scale_model(Variant::Transformer, 11, Some(500)).unwrap().units, 704);
        assert!(scale_model(Variant::Transformer, 11, None).is_err());
        assert!(scale_model(Variant::Lstm, 2, Some(10)).is_err());
    }

    #[test]
    fn context_counts() {
        let spec = scale_model(Variant::Transformer, 11, Some(500)).unwrap();
        let r = context_module_counts(&spec).unwrap();
        assert_eq!(r.context_params, 65_521_984);
        assert!(r.full_model_params > r.context_params);

        let spec = ArchSpec::lstm(1, 256).unwrap();
        let r = context_module_counts(&spec).unwrap();
        assert_eq!(r.context_params, 525_824);
        assert_eq!(r.encoder_params, 256 * 65);
        assert_eq!(r.prediction_params, 10 * (512 * 257 + 64 * 513));
    }

    #[test]
    fn crossover() {
        assert_eq!(attention_crossover(64).unwrap(), 384);
        assert_eq!(attention_crossover(1).unwrap(), 6);
    }

    #[test]
    fn overflow_is_an_error() {
        assert_eq!(
            lstm_layer_counts(u64::MAX / 2, LstmTotal::RowSum).unwrap_err(),
            ArchError::Overflow("lstm gate")
        );
        let spec = ArchSpec::transformer(u64::MAX / 4, 1 << 20, 10).unwrap();
        assert!(matches!(context_module_counts(&spec), Err(ArchError::Overflow(_))));
    }

    #[test]
    fn variant_parse() {
        assert_eq!("LSTM".parse::<Variant>().unwrap(), Variant::Lstm);
        assert_eq!("transformer".parse::<Variant>().unwrap(), Variant::Transformer);
        assert!("gru".parse::<Variant>().is_err());
    }
}
