use proptest::prelude::*;
use scaling_laws::arch::{scale_model, Variant};
use scaling_laws::fitter::{fit_general_joint, FitConfig};
use scaling_laws::reference::converged_joint;
use scaling_laws::synth::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grids_are_deterministic_and_positive(seed in any::<u64>(), sigma in 0.0..0.5f64) {
        let spec = SynthSpec {
            law: converged_joint(),
            model_sizes: vec![1e5, 1e7],
            data_sizes: vec![10.0, 1e3, 1e5],
            noise_sigma: sigma,
            seed,
        };
        let a = gen_converged_grid(&spec).unwrap();
        prop_assert_eq!(&a, &gen_converged_grid(&spec).unwrap());
        prop_assert!(a.iter().all(|p| p.loss >= MIN_LOSS));
        prop_assert_eq!(a.len(), 6);
    }

    #[test]
    fn curves_decrease_without_noise(l in 1u64..12, k in 1usize..30) {
        let arch = scale_model(Variant::Transformer, l, Some(FAMILY_N_CTX)).unwrap();
        let curves = gen_training_curves(&CurveSpec::new(frontier_family_law(), vec![arch], k, 50_000_000)).unwrap();
        let pts = curves[0].points().unwrap();
        prop_assert!(pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1));
    }
}

#[test]
fn noise_free_grid_fits_to_zero() {
    let sizes: Vec<f64> = [2u64, 5, 11]
        .iter()
        .map(|&l| {
            let arch = scale_model(Variant::Transformer, l, Some(500)).unwrap();
            scaling_laws::arch::context_module_counts(&arch).unwrap().context_params as f64
        })
        .collect();
    let spec = SynthSpec {
        law: converged_joint(),
        model_sizes: sizes,
        data_sizes: DEFAULT_DATA_HOURS.to_vec(),
        noise_sigma: 0.0,
        seed: 0,
    };
    let fit = fit_general_joint(&gen_converged_grid(&spec).unwrap(), &FitConfig::default()).unwrap();
    assert!(fit.objective <= 1e-10, "{}", fit.objective);
}
