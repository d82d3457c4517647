use scaling_laws::arch::{context_module_counts, scale_model, Variant};
use scaling_laws::fitter::*;
use scaling_laws::laws::{GeneralJoint, KaplanJoint, LawParams, PowerLaw1D};
use scaling_laws::reference::*;
use scaling_laws::synth::{gen_converged_grid, SynthSpec, DEFAULT_DATA_HOURS};

fn transformer_sizes() -> Vec<f64> {
    LAYER_COUNTS
        .iter()
        .map(|&l| {
            let arch = scale_model(Variant::Transformer, l, Some(500)).unwrap();
            context_module_counts(&arch).unwrap().context_params as f64
        })
        .collect()
}

fn grid(law: GeneralJoint, sigma: f64, seed: u64) -> Vec<JointPoint> {
    gen_converged_grid(&SynthSpec {
        law,
        model_sizes: transformer_sizes(),
        data_sizes: DEFAULT_DATA_HOURS.to_vec(),
        noise_sigma: sigma,
        seed,
    })
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn data_law_recovery() {
    let law = data_law();
    let pts: Vec<Point1D> = [180.0, 720.0, 2880.0, 11520.0, 23000.0]
        .iter()
        .map(|&x| Point1D {
            x,
            loss: law.eval(x).unwrap(),
        })
        .collect();
    let fit = fit_power_law_1d(&pts, &FitConfig::default()).unwrap();
    let LawParams::PowerLaw1D(got) = fit.params else { panic!() };
    assert!(fit.objective <= 1e-10);
    assert!((got.l_inf() - L_INF_CONVERGED).abs() <= 1e-3, "{got:?}");
    assert!(rel(got.exponent(), ALPHA_D) <= 0.01);
    assert!((got.critical().log10() - D_C.log10()).abs() <= 0.5);
}

#[test]
fn constant_losses_fit_a_plateau() {
    let pts: Vec<Point1D> = (1..=6).map(|i| Point1D { x: i as f64 * 10.0, loss: 0.5 }).collect();
    let fit = fit_power_law_1d(&pts, &FitConfig::default()).unwrap();
    let LawParams::PowerLaw1D(got) = fit.params else { panic!() };
    assert!(fit.objective < 1e-10);
    assert!((got.l_inf() - 0.5).abs() < 1e-3);
    assert!(got.log_reducible(10.0).unwrap().exp() < 1e-3);
}

#[test]
fn under_determined_inputs() {
    let p = |x: f64| Point1D { x, loss: 1.0 / x };
    let three = [p(1.0), p(2.0), p(3.0)];
    assert!(matches!(
        fit_power_law_1d(&three, &FitConfig::default()),
        Err(FitError::UnderDetermined(_))
    ));
    let same_d: Vec<JointPoint> = (1..=8)
        .map(|i| JointPoint {
            n: i as f64 * 1e5,
            d: 100.0,
            loss: 0.5,
        })
        .collect();
    assert!(matches!(
        fit_general_joint(&same_d, &FitConfig::default()),
        Err(FitError::UnderDetermined(_))
    ));
    assert!(matches!(
        fit_kaplan_joint(&same_d[..4], &FitConfig::default()),
        Err(FitError::UnderDetermined(_))
    ));
    assert!(fit_power_law_1d(&[p(1.0), p(2.0), p(3.0), p(f64::NAN)], &FitConfig::default()).is_err());
}

#[test]
fn joint_fit_is_deterministic_and_consistent() {
    let pts = grid(converged_joint(), 0.002, 3);
    let config = FitConfig {
        n_starts: 8,
        seed: 11,
        ..FitConfig::default()
    };
    let a = fit_general_joint(&pts, &config).unwrap();
    let b = fit_general_joint(&pts, &config).unwrap();
    assert_eq!(a, b);
    let mean_sq = a.residuals.iter().map(|r| r * r).sum::<f64>() / a.residuals.len() as f64;
    assert!((a.objective - mean_sq).abs() <= 1e-12);
    assert!((objective_joint(&a.params, &pts, ResidualSpace::RawLoss) - a.objective).abs() <= 1e-12);
    for (p, r) in pts.iter().zip(&a.residuals) {
        assert!((a.params.eval(p.n, p.d).unwrap() - p.loss - r).abs() < 1e-12);
    }
}

#[test]
fn kaplan_recovery() {
    let truth = KaplanJoint::new(3e5, 0.08, 40.0, 0.11).unwrap();
    let pts: Vec<JointPoint> = transformer_sizes()
        .iter()
        .flat_map(|&n| DEFAULT_DATA_HOURS.iter().map(move |&d| (n, d)))
        .map(|(n, d)| JointPoint {
            n,
            d,
            loss: truth.eval(n, d).unwrap(),
        })
        .collect();
    let fit = fit_kaplan_joint(&pts, &FitConfig::default()).unwrap();
    let LawParams::KaplanJoint(got) = fit.params else { panic!() };
    assert!(fit.objective <= 1e-10, "{}", fit.objective);
    assert!(rel(got.alpha_n(), 0.08) < 0.01 && rel(got.alpha_d(), 0.11) < 0.01, "{got:?}");
}

#[test]
fn kaplan_fits_its_reduction_exactly() {
    let law = GeneralJoint::new(0.0, 3e5, 0.08, 40.0, 0.11, 0.11).unwrap();
    let fit = fit_kaplan_joint(&grid(law, 0.0, 0), &FitConfig::default()).unwrap();
    assert!(fit.objective <= 1e-10, "{}", fit.objective);
}

#[test]
fn irreducible_loss_needs_the_general_law() {
    let pts = grid(converged_joint(), 0.0, 0);
    let kaplan = fit_kaplan_joint(&pts, &FitConfig::default()).unwrap();
    let general = fit_general_joint(&pts, &FitConfig::default()).unwrap();
    assert!(kaplan.objective > general.objective, "{} <= {}", kaplan.objective, general.objective);
    assert!(kaplan.objective > 1e-8);
}

#[test]
fn log_excess_space_recovers_frontier_shape() {
    let law = PowerLaw1D::new(0.306, 2e11, 0.197).unwrap();
    let pts: Vec<Point1D> = (0..30)
        .map(|i| {
            let x = 1e13 * 10f64.powf(i as f64 / 6.0);
            Point1D {
                x,
                loss: law.eval(x).unwrap(),
            }
        })
        .collect();
    let config = FitConfig {
        residual_space: ResidualSpace::LogExcessLoss,
        ..FitConfig::default()
    };
    let fit = fit_power_law_1d(&pts, &config).unwrap();
    let LawParams::PowerLaw1D(got) = fit.params else { panic!() };
    assert!(fit.objective <= 1e-10);
    assert!((got.l_inf() - 0.306).abs() < 1e-6 && rel(got.exponent(), 0.197) < 1e-6);
    assert!((objective_1d(&got, &pts, ResidualSpace::LogExcessLoss) - fit.objective).abs() < 1e-12);
}
