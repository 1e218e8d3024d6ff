//! Behaviour of the imputation methods on whole datasets.

mod common;

use common::mean_se;
use skewimpute::dataset::{CompleteDataset, IncompleteDataset};
use skewimpute::estimands::analyze;
use skewimpute::estimands::Estimand;
use skewimpute::experiment::{delete_mcar, gen_bivariate};
use skewimpute::impute::{impute_once, multiply_impute, ImputationMethod, ImputationSpec};
use skewimpute::rng::{RandomStream, StreamId};
use skewimpute::sampling::{sample_normal, sample_truncated_normal};

fn stream(seed: u64, rep: u64) -> RandomStream {
    RandomStream::new(seed, StreamId::new(0, rep, 0))
}

fn chi_square_data(seed: u64) -> (IncompleteDataset, RandomStream) {
    let mut rng = stream(seed, 0);
    let d = gen_bivariate(2.0, 0.5, 100, &mut rng).unwrap();
    (delete_mcar(d, &mut rng).unwrap(), rng)
}

#[test]
fn single_imputation_matches_one_direct_call() {
    let (data, rng) = chi_square_data(1);
    for method in ImputationMethod::EXPERIMENT {
        let spec = ImputationSpec { m: 1, ..ImputationSpec::new(method) };
        let multi = multiply_impute(&data, &spec, &rng).unwrap();
        let single = impute_once(&data, &spec, &mut rng.for_imputation(1)).unwrap();
        assert_eq!(multi.len(), 1);
        assert_eq!(multi[0].x, single.x, "{method}");
    }
}

#[test]
fn completions_share_observed_values_and_differ_elsewhere() {
    for rep in 0..100 {
        let (data, rng) = chi_square_data(100 + rep);
        for method in [ImputationMethod::Linear, ImputationMethod::TransformAll] {
            let done = multiply_impute(&data, &ImputationSpec::new(method), &rng).unwrap();
            assert_eq!(done.len(), 5);
            for c in &done {
                for i in 0..data.len() {
                    if let Some(v) = data.x(i) {
                        assert_eq!(c.x[i].to_bits(), v.to_bits());
                    }
                }
            }
            for pair in done.windows(2) {
                assert_ne!(pair[0].x, pair[1].x);
            }
        }
    }
}

#[test]
fn replay_is_bit_identical() {
    let (data, rng) = chi_square_data(2);
    for method in ImputationMethod::EXPERIMENT {
        let spec = ImputationSpec::new(method);
        let a = multiply_impute(&data, &spec, &rng).unwrap();
        let b = multiply_impute(&data, &spec, &rng).unwrap();
        assert_eq!(a, b, "{method}");
    }
}

/// `x = 5 + y + e`, so `x` given `y` is exactly normal and linear.
fn conditionally_normal(seed: u64, rep: u64) -> Option<IncompleteDataset> {
    let mut rng = stream(seed, rep);
    let y: Vec<f64> = (0..100).map(|_| sample_normal(0.0, 1.0, &mut rng)).collect();
    let x: Vec<f64> = y.iter().map(|&v| sample_normal(5.0 + v, 0.7, &mut rng)).collect();
    if x.iter().any(|&v| v < 0.0) {
        return None;
    }
    delete_mcar(CompleteDataset::new(x, y, None).unwrap(), &mut rng).ok()
}

#[test]
fn transforming_normal_data_only_hurts() {
    // Slope of y on x in the population: Cov/Var = 1 / 1.49.
    let truth = 1.0 / 1.49;
    let mut slopes = [vec![], vec![]];
    for rep in 0..100 {
        let Some(data) = conditionally_normal(3, rep) else { continue };
        let rng = stream(4, rep);
        for (k, method) in [ImputationMethod::Linear, ImputationMethod::TransformX].into_iter().enumerate() {
            let done = multiply_impute(&data, &ImputationSpec::new(method), &rng).unwrap();
            let mean: f64 = done
                .iter()
                .map(|c| {
                    let full = CompleteDataset::new(c.x.clone(), data.y().to_vec(), None).unwrap();
                    analyze(&full).unwrap().get(Estimand::Slope).unwrap()
                })
                .sum::<f64>()
                / done.len() as f64;
            slopes[k].push(mean);
        }
    }
    let bias = |v: &[f64]| (mean_se(v).0 - truth).abs();
    assert!(slopes[0].len() > 90);
    assert!(bias(&slopes[1]) > bias(&slopes[0]), "linear {} transform {}", bias(&slopes[0]), bias(&slopes[1]));
}

#[test]
fn truncated_regression_completes_well_specified_data_without_bias() {
    // x given y is normal truncated below 0, exactly the fitted model.
    let mut gaps = vec![];
    for rep in 0..40 {
        let mut rng = stream(5, rep);
        let y: Vec<f64> = (0..5000).map(|_| sample_normal(0.0, 1.0, &mut rng)).collect();
        let x: Vec<f64> = y
            .iter()
            .map(|&v| sample_truncated_normal(0.5 + v, 1.0, 0.0, &mut rng).unwrap())
            .collect();
        let full_mean = x.iter().sum::<f64>() / x.len() as f64;
        let data = delete_mcar(CompleteDataset::new(x, y, None).unwrap(), &mut rng).unwrap();
        let spec = ImputationSpec { m: 1, ..ImputationSpec::new(ImputationMethod::TruncatedRegression) };
        let done = multiply_impute(&data, &spec, &rng).unwrap();
        assert_eq!(done[0].events.truncreg_refits, 0);
        let mean = done[0].x.iter().sum::<f64>() / done[0].x.len() as f64;
        gaps.push(mean - full_mean);
    }
    let (m, se) = mean_se(&gaps);
    assert!(m.abs() < 3.0 * se, "gap {m} (se {se})");
}
