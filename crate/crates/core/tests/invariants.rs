use std::f64::consts::PI;

use levy_whittle::config::{parse_observations, ExperimentConfig, Gamma2Mode};
use levy_whittle::levy_noise::{KernelSpec, LevyDriverSpec, NoisePath};
use levy_whittle::regression::RegressionModel;
use levy_whittle::report;
use levy_whittle::spectral::{self, FrequencyGrid, PeriodogramSource, SpectralModel, WeightSpec};
use levy_whittle::validation;
use proptest::prelude::*;

fn config(seed: u64, step: f64, a: f64, b: f64, horizon: f64, gamma2: Gamma2Mode) -> ExperimentConfig {
    ExperimentConfig {
        driver: LevyDriverSpec::mixed(1.0, 2.0, 0.5),
        kernel: KernelSpec::Car2Pendulum { decay: 1.0, frequency: 2.0 },
        regression: RegressionModel::trigonometric(1, vec![-5.0, -5.0, 0.5], vec![5.0, 5.0, 3.0]),
        alpha0: vec![2.0, 1.0, 1.5],
        spectral: SpectralModel::car2(vec![0.3, 0.3, 0.8], vec![3.0, 3.0, 4.0]).with_truth(vec![1.0, 1.0, 2.0]),
        weights: WeightSpec::new(a, b),
        horizons: vec![horizon],
        step,
        replicates: 3,
        seed,
        level: 0.9,
        output_dir: "out".into(),
        gamma2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn periodogram_is_even_and_nonnegative(values in prop::collection::vec(-10.0f64..10.0, 16..200)) {
        let path = NoisePath::new(0.05, values);
        let horizon = path.horizon();
        let grid = FrequencyGrid { max_index: path.len() / 2 };
        let p = spectral::periodogram(&path, grid, PeriodogramSource::Raw).unwrap();
        let k = grid.max_index;
        prop_assert_eq!(p.values.len(), 2 * k + 1);
        for j in 0..=k {
            prop_assert!(p.values[k + j] >= 0.0);
            prop_assert_eq!(p.values[k + j], p.values[k - j]);
            prop_assert!((p.frequencies[k + j] - 2.0 * PI * j as f64 / horizon).abs() < 1e-12);
        }
    }

    #[test]
    fn config_round_trips_through_json(
        seed in any::<u64>(),
        step in 0.01f64..0.1,
        a in 2.6f64..6.0,
        db in 0.01f64..0.5,
        n in 100u32..5000,
        user in prop::option::of(0.0f64..5.0),
    ) {
        let b = (a - db).max(2.01);
        let gamma2 = user.map_or(Gamma2Mode::EstimateFromResiduals, |value| Gamma2Mode::UserValue { value });
        let cfg = config(seed, step, a, b, n as f64 * step, gamma2);
        prop_assume!(cfg.validate().is_ok());
        let back = ExperimentConfig::from_json_str(&cfg.to_json_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn observations_round_trip_through_csv(values in prop::collection::vec(-1e6f64..1e6, 2..100), step in 0.001f64..1.0) {
        let path = NoisePath::new(step, values);
        let mut buf = Vec::new();
        report::write_path_csv(&path, &mut buf).unwrap();
        let back = parse_observations(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values, path.values);
        prop_assert!((back.step - step).abs() <= 1e-12 * step);
    }

    #[test]
    fn car2_density_is_positive_in_the_box(
        a in 0.3f64..3.0, b in 0.3f64..3.0, g in 0.8f64..4.0, l in -50.0f64..50.0,
    ) {
        let model = SpectralModel::car2(vec![0.3, 0.3, 0.8], vec![3.0, 3.0, 4.0]);
        let f = model.eval(l, &[a, b, g]).unwrap();
        prop_assert!(f > 0.0);
        prop_assert_eq!(f, model.eval(-l, &[a, b, g]).unwrap());
    }

    #[test]
    fn weight_truncation_is_where_w_reaches_the_tail(a in 2.6f64..8.0, scale in 0.1f64..10.0) {
        let w = WeightSpec::new(a, 2.5).scaled(scale);
        let cut = w.lambda_max();
        prop_assert!(((1.0 + cut * cut).powf(-a) - 1e-8).abs() < 1e-12);
        prop_assert_eq!(cut, WeightSpec::new(a, 2.5).lambda_max());
    }

    #[test]
    fn study_seeds_depend_only_on_position(master in any::<u64>(), rung in 0usize..8, i in 0u64..1000) {
        prop_assert_eq!(validation::study_seed(master, rung, i), validation::study_seed(master, rung, i));
        prop_assert_ne!(validation::study_seed(master, rung, i), validation::study_seed(master, rung, i + 1));
    }
}

#[test]
fn weak_weights_are_rejected_with_the_condition() {
    let cfg = config(1, 0.05, 2.0, 3.0, 100.0, Gamma2Mode::FromDriver);
    let err = cfg.validate().unwrap_err();
    assert!(err.is_input_error());
    assert!(err.to_string().contains("a > 5/2"), "{err}");
}

#[test]
fn unknown_config_field_reports_its_path() {
    let mut v: serde_json::Value = serde_json::from_str(&config(1, 0.05, 3.0, 3.0, 100.0, Gamma2Mode::FromDriver).to_json_string()).unwrap();
    v["weights"]["c"] = serde_json::json!(1.0);
    let err = ExperimentConfig::from_json_str(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("weights"), "{err}");
}

#[test]
fn eval_only_family_is_refused_for_estimation() {
    assert!(SpectralModel::riesz_bessel(vec![0.1, 0.1, 0.1], vec![0.4, 2.0, 2.0], false).is_err());
    let rb = SpectralModel::riesz_bessel(vec![0.1, 0.1, 0.1], vec![0.4, 2.0, 2.0], true).unwrap();
    assert!(rb.eval(1.0, &[0.2, 1.0, 1.0]).unwrap() > 0.0);
    assert!(rb.gradient(1.0, &[0.2, 1.0, 1.0]).is_err());
}

#[test]
fn zero_path_mean_square_check() {
    let (nu, rel) = validation::mean_square_check(&NoisePath::new(0.1, vec![0.0; 10]), 0.5);
    assert_eq!((nu, rel), (0.0, 1.0));
}

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut seeds: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    seeds.sort();
    seeds
}

#[test]
fn config_fuzz_seeds_replay() {
    let mut accepted = Vec::new();
    for (name, bytes) in corpus("parse_config") {
        if let Ok(cfg) = ExperimentConfig::from_json_str(std::str::from_utf8(&bytes).unwrap()) {
            assert_eq!(ExperimentConfig::from_json_str(&cfg.to_json_string()).unwrap(), cfg);
            accepted.push(name);
        }
    }
    assert_eq!(accepted, ["car2.json", "exponential.json", "ou_jumps.json"]);
}

#[test]
fn observation_fuzz_seeds_replay() {
    let mut accepted = Vec::new();
    for (name, bytes) in corpus("parse_observations") {
        if let Ok(path) = parse_observations(bytes.as_slice()) {
            assert!(path.len() >= 2 && path.step > 0.0);
            accepted.push(name);
        }
    }
    assert_eq!(accepted, ["regular.csv", "spaced.csv"]);
}

#[test]
fn domain_failures_in_a_config_are_input_errors() {
    let cfg = config(1, 0.05, 3.0, 3.0, 100.01, Gamma2Mode::FromDriver);
    assert!(cfg.validate().unwrap_err().is_input_error());
    let cfg = config(1, 0.05, 3.0, 3.0, 100.0, Gamma2Mode::UserValue { value: -1.0 });
    assert!(cfg.validate().unwrap_err().is_input_error());
}
