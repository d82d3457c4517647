//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use scaling_laws::arch::*;
use scaling_laws::fitter::{fit_general_joint, FitConfig, JointPoint};
use scaling_laws::frontier::{fit_frontier, lower_envelope};
use scaling_laws::laws::{GeneralJoint, KaplanJoint, LawParams};
use scaling_laws::planner::*;
use scaling_laws::reference::*;
use scaling_laws::synth::{self, gen_converged_grid, SynthSpec, DEFAULT_DATA_HOURS};
use std::path::Path;
use std::result::Result;
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    check((got - want).abs() <= tol, format!("{what} = {got}, want {want} ± {tol}"))
}

fn planner_golden_numbers() -> Outcome {
    let fold_d = fold_increase_for_reduction(ALPHA_D, 0.05).unwrap();
    let fold_n = fold_increase_for_reduction(ALPHA_N, 0.05).unwrap();
    let per_doubling = data_growth_per_model_doubling(ALPHA_N, ALPHA_D).unwrap();
    let exponent = min_data_exponent(&converged_joint());
    within(fold_d, 14.0, 0.1, "data fold increase")?;
    within(fold_n, 24.6, 0.1, "model fold increase")?;
    within(per_doubling, 1.77, 0.005, "data per model doubling")?;
    within(exponent, 0.8230, 0.0005, "min-data exponent")?;
    within(100.0 * compute_doubling_gain(0.167).unwrap(), 10.9, 0.1, "LSTM doubling gain %")?;
    within(100.0 * compute_doubling_gain(0.197).unwrap(), 12.7, 0.1, "Transformer doubling gain %")?;
    within(compute_for_halving(0.167).unwrap(), 63.5, 0.5, "LSTM compute for halving")?;
    within(compute_for_halving(0.197).unwrap(), 33.7, 0.3, "Transformer compute for halving")?;
    Ok(format!(
        "14.0x={fold_d:.3} 24.6x={fold_n:.3} 1.77x={per_doubling:.4} exponent={exponent:.5}"
    ))
}

fn complexity_identities() -> Outcome {
    for u in 1..=1000u64 {
        let t = transformer_layer_counts(u, 500).unwrap();
        let rows: (u64, u64) = t.rows.iter().fold((0, 0), |a, r| (a.0 + r.params, a.1 + r.mults_per_frame));
        check(rows == (u * (12 * u + 13), u * (12 * u + 1000 + 11)), format!("Transformer rows at u={u}"))?;
        check(rows == (t.params, t.mults_per_frame), format!("Transformer totals at u={u}"))?;
        let l = lstm_layer_counts(u, LstmTotal::RowSum).unwrap();
        let m: u64 = l.rows.iter().map(|r| r.mults_per_frame).sum();
        check(m == u * (8 * u + 5) && m == l.mults_per_frame, format!("LSTM M at u={u}"))?;
        let printed = lstm_layer_counts(u, LstmTotal::Printed).unwrap().params;
        check(l.params - printed == 2 * u, format!("LSTM N gap at u={u}"))?;
        let c = attention_crossover(u).unwrap();
        check(12 * u * u == 2 * u * c, format!("crossover at u={u}"))?;
    }
    Ok("u in 1..=1000".into())
}

fn paper_grid(sigma: f64, seed: u64) -> Vec<JointPoint> {
    let sizes = LAYER_COUNTS
        .iter()
        .map(|&l| context_module_counts(&scale_model(Variant::Transformer, l, Some(500)).unwrap()).unwrap().context_params as f64)
        .collect();
    gen_converged_grid(&SynthSpec {
        law: converged_joint(),
        model_sizes: sizes,
        data_sizes: DEFAULT_DATA_HOURS.to_vec(),
        noise_sigma: sigma,
        seed,
    })
    .unwrap()
}

fn general(params: LawParams) -> GeneralJoint {
    match params {
        LawParams::GeneralJoint(g) => g,
        other => panic!("expected a general joint law, got {}", other.kind()),
    }
}

fn oracle_fit_recovery() -> Outcome {
    let fit = fit_general_joint(&paper_grid(0.0, 0), &FitConfig::default()).map_err(|e| e.to_string())?;
    let g = general(fit.params);
    check(fit.objective <= 1e-10, format!("objective {}", fit.objective))?;
    for (got, want, name) in [(g.alpha_n(), ALPHA_N, "alpha_n"), (g.alpha_d(), ALPHA_D, "alpha_d"), (g.alpha(), ALPHA, "alpha")] {
        check((got / want - 1.0).abs() <= 0.02, format!("{name} = {got}, want {want} ± 2%"))?;
    }
    within(g.l_inf(), L_INF_CONVERGED, 0.002, "l_inf")?;

    let mut l_infs: Vec<f64> = (0..10)
        .map(|seed| {
            let config = FitConfig {
                seed,
                ..FitConfig::default()
            };
            general(fit_general_joint(&paper_grid(0.002, seed), &config).unwrap().params).l_inf()
        })
        .collect();
    l_infs.sort_by(f64::total_cmp);
    let median = (l_infs[4] + l_infs[5]) / 2.0;
    within(median, L_INF_CONVERGED, 0.01, "noisy median l_inf")?;
    Ok(format!("objective={:.1e} l_inf={:.5} noisy median l_inf={median:.4}", fit.objective, g.l_inf()))
}

fn reduction_identity() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let kaplan = KaplanJoint::new(N_C, ALPHA_N, D_C, ALPHA_D).unwrap();
    let general = GeneralJoint::new(0.0, N_C, ALPHA_N, D_C, ALPHA_D, ALPHA_D).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = 10f64.powf(rng.random_range(0.0..12.0));
        let d = 10f64.powf(rng.random_range(-2.0..8.0));
        let (k, g) = (kaplan.eval(n, d).unwrap(), general.eval(n, d).unwrap());
        worst = worst.max((g / k - 1.0).abs());
    }
    check(worst <= 1e-12, format!("worst relative difference {worst:e}"))?;
    Ok(format!("worst relative difference {worst:.1e}"))
}

/// Slope of the continuous-size frontier of `variant` between `c_lo` and `c_hi`.
fn brute_force_slope(law: &GeneralJoint, variant: Variant, c_lo: f64, c_hi: f64) -> f64 {
    let ratio = variant.aspect_ratio() as f64;
    let counts = |l: f64| {
        let u = ratio * l;
        match variant {
            Variant::Lstm => (l * (8.0 * u * u + 6.0 * u), l * u * (8.0 * u + 5.0)),
            Variant::Transformer => (l * u * (12.0 * u + 13.0), l * u * (12.0 * u + 2.0 * synth::FAMILY_N_CTX as f64 + 11.0)),
        }
    };
    let best_excess = |c: f64| {
        let mut best = f64::INFINITY;
        let mut l = 0.5;
        while l < 60.0 {
            let (n, m) = counts(l);
            best = best.min(law.eval(n, c / (6.0 * m) / 360_000.0).unwrap());
            l *= 1.001;
        }
        best - law.l_inf()
    };
    let k = 40;
    let pts: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let c = c_lo * (c_hi / c_lo).powf(i as f64 / (k - 1) as f64);
            (c.ln(), best_excess(c).ln())
        })
        .collect();
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / k as f64, a.1 + p.1 / k as f64));
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

fn frontier_loop() -> Outcome {
    let law = synth::frontier_family_law();
    let mut l_infs = Vec::new();
    let mut notes = Vec::new();
    for variant in [Variant::Transformer, Variant::Lstm] {
        let curves = synth::frontier_family(variant).unwrap();
        let env = lower_envelope(&curves).unwrap();
        let fit = fit_frontier(&env, &FitConfig::default()).map_err(|e| e.to_string())?;
        within(fit.law.l_inf(), law.l_inf(), 0.01, &format!("{variant} l_inf"))?;
        let below = curves
            .iter()
            .flat_map(|c| c.points().unwrap())
            .filter(|&(op, loss)| fit.shortfall(op, loss) > 0.01)
            .count();
        check(below == 0, format!("{variant}: {below} checkpoints below the frontier tolerance"))?;
        let slope = brute_force_slope(&law, variant, env[0].compute, env[env.len() - 1].compute);
        within(fit.law.exponent(), slope, 0.02, &format!("{variant} alpha_c"))?;
        l_infs.push(fit.law.l_inf());
        notes.push(format!("{variant}: l_inf={:.4} alpha_c={:.4} (oracle {slope:.4})", fit.law.l_inf(), fit.law.exponent()));
    }
    within(l_infs[0], l_infs[1], 0.01, "shared l_inf gap")?;
    Ok(notes.join("; "))
}

fn numerical_robustness() -> Outcome {
    let law = converged_joint();
    let axis = |lo: f64, hi: f64| -> Vec<f64> { (0..100).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / 99.0)).collect() };
    let ds = axis(-2.0, 8.0);
    let ns = axis(0.0, 12.0);
    let grid: Vec<Vec<f64>> = ns.iter().map(|&n| ds.iter().map(|&d| law.eval(n, d).unwrap()).collect()).collect();
    for (i, row) in grid.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            check(v.is_finite() && v >= law.l_inf(), format!("L({}, {}) = {v}", ns[i], ds[j]))?;
            if j > 0 {
                check(v < row[j - 1], format!("not decreasing in D at N={}, D={}", ns[i], ds[j]))?;
            }
            if i > 0 {
                check(v < grid[i - 1][j], format!("not decreasing in N at N={}, D={}", ns[i], ds[j]))?;
            }
        }
    }
    Ok("100x100 grid finite, >= l_inf, strictly decreasing".into())
}

fn cli(args: &[&str], dir: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_scaling-laws"))
        .args(args)
        .current_dir(dir)
        .env_remove("SCALING_LAWS_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8(out.stdout).unwrap())
}

fn answer(args: &[&str], dir: &Path) -> Result<f64, String> {
    let json: serde_json::Value = serde_json::from_str(&cli(args, dir)?).map_err(|e| e.to_string())?;
    json["answer"].as_f64().ok_or_else(|| format!("no answer in {json}"))
}

fn cli_round_trip() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    cli(&["synth", "grid", "-o", "grid.csv"], dir)?;
    cli(&["fit", "joint", "-i", "grid.csv", "-o", "joint.json"], dir)?;
    let q = |extra: &[&str]| {
        let mut args = vec!["predict", "--report", "joint.json", "--json"];
        args.extend_from_slice(extra);
        answer(&args, dir)
    };
    within(q(&["--fold-increase", "data"])?, 14.0, 0.1, "data fold increase")?;
    within(q(&["--fold-increase", "model"])?, 24.6, 0.1, "model fold increase")?;
    within(q(&["--data-per-doubling"])?, 1.77, 0.005, "data per doubling")?;
    let min_data: serde_json::Value =
        serde_json::from_str(&cli(&["predict", "--report", "joint.json", "--json", "--min-data", "1e6"], dir)?).unwrap();
    let exponent = min_data["inputs"]
        .as_array()
        .and_then(|a| a.iter().find(|i| i["name"] == "exponent"))
        .and_then(|i| i["value"].as_f64())
        .ok_or("no exponent in min-data report")?;
    within(exponent, 0.8230, 0.0005, "min-data exponent")?;

    for (alpha_c, gain, halving, halving_tol) in [(0.167, 10.9, 63.5, 0.5), (0.197, 12.7, 33.7, 0.3)] {
        let a = alpha_c.to_string();
        cli(&["synth", "compute-curve", "--alpha-c", &a, "-o", "curve.csv"], dir)?;
        cli(&["fit", "frontier", "-i", "curve.csv", "-o", "frontier.json"], dir)?;
        let g = answer(&["predict", "--report", "frontier.json", "--json", "--double-compute"], dir)?;
        within(100.0 * g, gain, 0.1, &format!("doubling gain % at {a}"))?;
        let h = answer(&["predict", "--report", "frontier.json", "--json", "--halve-loss"], dir)?;
        within(h, halving, halving_tol, &format!("compute for halving at {a}"))?;
    }
    Ok("synth -> fit -> predict reproduces the planner golden numbers".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 7] = [
        ("planner golden numbers", planner_golden_numbers, Duration::from_secs(1)),
        ("complexity identities", complexity_identities, Duration::from_secs(1)),
        ("oracle fit recovery", oracle_fit_recovery, Duration::from_secs(120)),
        ("reduction identity", reduction_identity, Duration::from_secs(1)),
        ("frontier loop", frontier_loop, Duration::from_secs(120)),
        ("numerical robustness", numerical_robustness, Duration::from_secs(1)),
        ("CLI round trip", cli_round_trip, Duration::from_secs(180)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > *budget => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {} {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
