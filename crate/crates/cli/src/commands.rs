use crate::error::{CliError, Result};
use crate::grid::parse_log_grid;
use crate::{Cli, Command, CountArgs, FitArgs, FitOptions, FrontierArgs, ModelFamily, PlotArgs, PredictArgs, SpaceArg, SynthCommand};
use scaling_laws::arch::{context_module_counts, context_module_counts_with, scale_model, ArchSpec, LstmTotal, Variant};
use scaling_laws::fitter::{fit_general_joint, fit_kaplan_joint, fit_power_law_1d, FitConfig, JointPoint, ResidualSpace};
use scaling_laws::frontier::{fit_frontier, lower_envelope};
use scaling_laws::laws::{GeneralJoint, LawParams, PowerLaw1D};
use scaling_laws::planner::{
    plan_bottleneck, plan_data_per_doubling, plan_double_compute, plan_fold_increase, plan_halve_loss, plan_loss_at,
    plan_min_data, PlanReport,
};
use scaling_laws::records::{
    format_f64, read_converged_csv, read_curves_csv, read_fit_report, to_json_string, write_converged_csv,
    write_curves_csv, ConvergedRun, FitKind, FitReport,
};
use scaling_laws::reference;
use scaling_laws::synth::{self, CurveSpec, SynthSpec};
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Count(a) => count(a),
        Command::Fit(a) => fit(a, seed),
        Command::Predict(a) => predict(a),
        Command::Frontier(a) => frontier(a, seed),
        Command::Synth(s) => synth_cmd(s, seed),
        Command::Plot(a) => plot(a),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Failure(format!("cannot open {}: {e}", path.display())))
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Failure(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn count(a: CountArgs) -> Result<()> {
    let variant = Variant::from(a.variant);
    let ratio = a.aspect_ratio.unwrap_or(variant.aspect_ratio());
    let units = match a.units {
        Some(u) => u,
        None => ratio
            .checked_mul(a.layers)
            .ok_or_else(|| CliError::Usage("aspect ratio times layers overflows".into()))?,
    };
    let arch = ArchSpec {
        variant,
        n_layer: a.layers,
        units,
        n_ctx: a.n_ctx,
        input_dim: a.input_dim,
    };
    arch.validate()?;
    let total = if a.printed_total {
        if variant != Variant::Lstm {
            return Err(CliError::Usage("--printed-total applies to LSTM models only".into()));
        }
        LstmTotal::Printed
    } else {
        LstmTotal::RowSum
    };
    let report = context_module_counts_with(&arch, total)?;
    if a.json {
        emit(None, &(to_json_string(&report)? + "\n"))
    } else {
        emit(None, &format!("{report}\n"))
    }
}

fn fit_config(o: &FitOptions, seed: u64, default_space: ResidualSpace) -> FitConfig {
    FitConfig {
        n_starts: o.starts,
        seed,
        max_iters: o.max_iters,
        residual_space: match o.residual_space {
            Some(SpaceArg::Raw) => ResidualSpace::RawLoss,
            Some(SpaceArg::LogExcess) => ResidualSpace::LogExcessLoss,
            None => default_space,
        },
        ..FitConfig::default()
    }
}

fn summary(report: &FitReport) -> String {
    format!(
        "{} fit on {} points: objective {:.3e}, {}",
        report.law.kind(),
        report.n_points,
        report.objective,
        law_summary(&report.law)
    )
}

fn law_summary(law: &LawParams) -> String {
    match law {
        LawParams::PowerLaw1D(p) => format!(
            "l_inf {:.4}, critical {:.4e}, exponent {:.5}",
            p.l_inf(),
            p.critical(),
            p.exponent()
        ),
        LawParams::KaplanJoint(k) => format!(
            "n_c {:.4e}, alpha_n {:.5}, d_c {:.4e}, alpha_d {:.5}",
            k.n_c(),
            k.alpha_n(),
            k.d_c(),
            k.alpha_d()
        ),
        LawParams::GeneralJoint(g) => format!(
            "l_inf {:.4}, n_c {:.4e}, alpha_n {:.5}, d_c {:.4e}, alpha_d {:.5}, alpha {:.5}",
            g.l_inf(),
            g.n_c(),
            g.alpha_n(),
            g.d_c(),
            g.alpha_d(),
            g.alpha()
        ),
    }
}

fn frontier_report(input: &Path, options: &FitOptions, seed: u64) -> Result<FitReport> {
    let curves = read_curves_csv(open(input)?)?;
    let envelope = lower_envelope(&curves)?;
    let config = fit_config(options, seed, ResidualSpace::LogExcessLoss);
    let ff = fit_frontier(&envelope, &config)?;
    Ok(FitReport::from_frontier(&ff, &config))
}

fn fit(a: FitArgs, seed: u64) -> Result<()> {
    let report = if a.kind == FitKind::Frontier {
        frontier_report(&a.input, &a.options, seed)?
    } else {
        let runs = read_converged_csv(open(&a.input)?)?;
        let config = fit_config(&a.options, seed, ResidualSpace::RawLoss);
        let result = match a.kind {
            FitKind::Ld | FitKind::Ln => fit_power_law_1d(&a.kind.points_1d(&runs), &config)?,
            FitKind::Kaplan => fit_kaplan_joint(&joint_points(&runs), &config)?,
            FitKind::Joint => fit_general_joint(&joint_points(&runs), &config)?,
            FitKind::Frontier => unreachable!("handled above"),
        };
        FitReport::new(a.kind, &result, &config)
    };
    eprintln!("{}", summary(&report));
    emit(a.output.as_ref(), &(to_json_string(&report)? + "\n"))
}

fn joint_points(runs: &[ConvergedRun]) -> Vec<JointPoint> {
    runs.iter().map(ConvergedRun::point).collect()
}

fn predict(a: PredictArgs) -> Result<()> {
    let report = read_fit_report(open(&a.report)?)?;
    let law = &report.law;
    let plan: PlanReport = if let Some(v) = &a.loss_at {
        match (law, v.as_slice()) {
            (LawParams::PowerLaw1D(_), [x]) => plan_loss_at(law, *x, f64::INFINITY)?,
            (LawParams::PowerLaw1D(_), _) => {
                return Err(CliError::Usage("a one-resource law takes a single --loss-at value".into()))
            }
            (_, [n, d]) => plan_loss_at(law, *n, *d)?,
            _ => return Err(CliError::Usage("a joint law takes --loss-at N D".into())),
        }
    } else if let Some(n) = a.min_data {
        plan_min_data(law, n, a.headroom)?
    } else if let Some(v) = &a.bottleneck {
        plan_bottleneck(law, v[0], v[1])?
    } else if a.double_compute {
        plan_double_compute(law)?
    } else if a.halve_loss {
        plan_halve_loss(law)?
    } else if let Some(r) = a.fold_increase {
        plan_fold_increase(law, r.into(), a.reduction)?
    } else if a.data_per_doubling {
        plan_data_per_doubling(law)?
    } else {
        unreachable!("clap requires one question")
    };
    let json = to_json_string(&plan)? + "\n";
    if a.json {
        emit(None, &json)
    } else {
        emit(None, &format!("{plan}\n{json}"))
    }
}

fn frontier(a: FrontierArgs, seed: u64) -> Result<()> {
    if a.envelope_only {
        let curves = read_curves_csv(open(&a.input)?)?;
        let mut text = String::from("compute,loss,run_id,step\n");
        for e in lower_envelope(&curves)? {
            text.push_str(&format!("{},{},{},{}\n", format_f64(e.compute), format_f64(e.loss), e.run_id, e.step));
        }
        return emit(a.output.as_ref(), &text);
    }
    let report = frontier_report(&a.input, &a.options, seed)?;
    eprintln!("{}", summary(&report));
    emit(a.output.as_ref(), &(to_json_string(&report)? + "\n"))
}

/// Reads a law from either a fit report or a bare law record.
fn read_law(path: &Path) -> Result<LawParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(report) = serde_json::from_str::<FitReport>(&text) {
        return Ok(report.law);
    }
    serde_json::from_str::<LawParams>(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn read_joint(path: Option<&PathBuf>, default: GeneralJoint) -> Result<GeneralJoint> {
    match path {
        None => Ok(default),
        Some(p) => match read_law(p)? {
            LawParams::GeneralJoint(g) => Ok(g),
            other => Err(CliError::Usage(format!(
                "{} holds a {} law; a general_joint law is required",
                p.display(),
                other.kind()
            ))),
        },
    }
}

fn family(f: &ModelFamily) -> Result<Vec<ArchSpec>> {
    let variant = Variant::from(f.variant);
    let n_ctx = (variant == Variant::Transformer).then_some(f.n_ctx);
    if f.layers.is_empty() {
        return Err(CliError::Usage("--layers must name at least one layer count".into()));
    }
    f.layers
        .iter()
        .map(|&l| Ok(scale_model(variant, l, n_ctx)?))
        .collect()
}

fn synth_cmd(cmd: SynthCommand, seed: u64) -> Result<()> {
    let mut buf = Vec::new();
    let output = match cmd {
        SynthCommand::Grid {
            family: fam,
            hours,
            law_file,
            sigma,
            output,
        } => {
            let archs = family(&fam)?;
            let law = read_joint(law_file.as_ref(), reference::converged_joint())?;
            let params: Vec<u64> = archs
                .iter()
                .map(|a| Ok(context_module_counts(a)?.context_params))
                .collect::<Result<_>>()?;
            let spec = SynthSpec {
                law,
                model_sizes: params.iter().map(|&p| p as f64).collect(),
                data_sizes: hours.clone(),
                noise_sigma: sigma,
                seed,
            };
            let points = synth::gen_converged_grid(&spec)?;
            let runs: Vec<ConvergedRun> = points
                .iter()
                .enumerate()
                .map(|(i, p)| ConvergedRun {
                    arch: archs[i / hours.len()],
                    params: params[i / hours.len()],
                    data_hours: p.d,
                    loss: p.loss,
                })
                .collect();
            write_converged_csv(&mut buf, &runs)?;
            output
        }
        SynthCommand::Curves {
            family: fam,
            checkpoints,
            frames_per_checkpoint,
            law_file,
            sigma,
            output,
        } => {
            let law = read_joint(law_file.as_ref(), synth::frontier_family_law())?;
            let mut spec = CurveSpec::new(law, family(&fam)?, checkpoints, frames_per_checkpoint);
            spec.noise_sigma = sigma;
            spec.seed = seed;
            write_curves_csv(&mut buf, &synth::gen_training_curves(&spec)?)?;
            output
        }
        SynthCommand::ComputeCurve {
            l_inf,
            critical,
            alpha_c,
            variant,
            layers,
            n_ctx,
            checkpoints,
            frames_per_checkpoint,
            output,
        } => {
            let law = PowerLaw1D::new(l_inf, critical, alpha_c)?;
            let variant = Variant::from(variant);
            let arch = scale_model(variant, layers, (variant == Variant::Transformer).then_some(n_ctx))?;
            let curve = synth::gen_compute_curve(&law, &arch, checkpoints, frames_per_checkpoint)?;
            write_curves_csv(&mut buf, &[curve])?;
            output
        }
    };
    emit(output.as_ref(), &String::from_utf8(buf).expect("CSV is UTF-8"))
}

fn plot(a: PlotArgs) -> Result<()> {
    let report = read_fit_report(open(&a.report)?)?;
    let grid = parse_log_grid(&a.grid)?;
    let observed = match &a.observed {
        Some(p) => read_converged_csv(open(p)?)?,
        None => Vec::new(),
    };
    let law = &report.law;
    let mut text = String::new();
    let row = |text: &mut String, cells: &[f64], observed: Option<f64>| {
        let mut parts: Vec<String> = cells.iter().map(|&c| format_f64(c)).collect();
        parts.push(observed.map(format_f64).unwrap_or_default());
        text.push_str(&parts.join(","));
        text.push('\n');
    };
    match law {
        LawParams::PowerLaw1D(p) => {
            text.push_str("x,predicted,observed\n");
            for &x in &grid {
                row(&mut text, &[x, p.eval(x)?], None);
            }
            for pt in report.fit_kind.points_1d(&observed) {
                row(&mut text, &[pt.x, p.eval(pt.x)?], Some(pt.loss));
            }
        }
        _ => {
            let sizes: Vec<f64> = if !a.layers.is_empty() {
                let fam = ModelFamily {
                    variant: a.variant,
                    layers: a.layers.clone(),
                    n_ctx: a.n_ctx,
                };
                family(&fam)?
                    .iter()
                    .map(|arch| Ok(context_module_counts(arch)?.context_params as f64))
                    .collect::<Result<_>>()?
            } else {
                a.sizes.clone()
            };
            if sizes.is_empty() && observed.is_empty() {
                return Err(CliError::Usage("a joint law needs --sizes, --layers or --observed".into()));
            }
            text.push_str("n,d,predicted,observed\n");
            for &n in &sizes {
                for &d in &grid {
                    row(&mut text, &[n, d, law.eval(n, d)?], None);
                }
            }
            for r in &observed {
                let p = r.point();
                row(&mut text, &[p.n, p.d, law.eval(p.n, p.d)?], Some(p.loss));
            }
        }
    }
    emit(a.output.as_ref(), &text)
}
