//! Data generation, deletion and estimand checks.

mod common;

use common::{mean_se, var_se};
use proptest::prelude::*;
use skewimpute::estimands::{analyze, mi_combine, sample_skewness, true_values, Estimand, EstimateSet};
use skewimpute::experiment::{delete, gen_bivariate, gen_trivariate, Design, Pattern};
use skewimpute::regression::{ols_fit, DesignMatrix};
use skewimpute::rng::{RandomStream, StreamId};
use skewimpute::sampling::fill_chi_square;

fn stream(seed: u64, rep: u64) -> RandomStream {
    RandomStream::new(seed, StreamId::new(0, rep, 0))
}

#[test]
fn bivariate_generator_moments() {
    let d = gen_bivariate(2.0, 0.5, 1_000_000, &mut stream(1, 0)).unwrap();
    // Var(Y) = Var(X) + σ² = 4 + 4.
    let (v, se) = var_se(&d.y);
    assert!((v - 8.0).abs() < 3.0 * se, "var(y) {v}");
    let fit = ols_fit(&DesignMatrix::with_intercept(&[&d.x]).unwrap(), &d.y).unwrap();
    let se = fit.coefficient_covariance[(1, 1)].sqrt();
    assert!((fit.coefficients[1] - 1.0).abs() < 3.0 * se);

    let d = gen_bivariate(4.0, 0.9, 100_000, &mut stream(2, 0)).unwrap();
    let fit = ols_fit(&DesignMatrix::with_intercept(&[&d.x]).unwrap(), &d.y).unwrap();
    assert!((fit.r_squared() - 0.9).abs() < 0.005, "r2 {}", fit.r_squared());
}

#[test]
fn trivariate_generator_moments() {
    let d = gen_trivariate(2.0, 0.5, 1_000_000, &mut stream(3, 0)).unwrap();
    let z = d.z.as_ref().unwrap();
    let fit = ols_fit(&DesignMatrix::with_intercept(&[&d.x, &d.y]).unwrap(), z).unwrap();
    assert!((fit.r_squared() - 0.5).abs() < 0.003, "r2 {}", fit.r_squared());
    for i in 1..3 {
        let se = fit.coefficient_covariance[(i, i)].sqrt();
        assert!((fit.coefficients[i] - 1.0).abs() < 3.0 * se);
    }
    // σ² of Z given (X, Y) is 20 in this cell.
    assert!((fit.residual_variance - 20.0).abs() < 0.1);
}

#[test]
fn chi_square_skewness_sample() {
    let mut x = vec![0.0; 1_000_000];
    fill_chi_square(4.0, &mut x, &mut stream(4, 0)).unwrap();
    let g = sample_skewness(&x).unwrap();
    // Replicate to get a Monte Carlo SE for g1.
    let reps: Vec<f64> = (0..40)
        .map(|r| {
            let mut v = vec![0.0; 25_000];
            fill_chi_square(4.0, &mut v, &mut stream(5, r)).unwrap();
            sample_skewness(&v).unwrap()
        })
        .collect();
    let (_, se_small) = mean_se(&reps);
    let se = se_small * (40.0f64).sqrt() / (1_000_000.0f64 / 25_000.0).sqrt();
    assert!((g - 2f64.sqrt()).abs() < 3.0 * se, "skew {g} (se {se})");
}

#[test]
fn large_complete_samples_hit_true_values() {
    for design in [Design::Bivariate, Design::Trivariate] {
        let sets: Vec<EstimateSet> = (0..30)
            .map(|r| analyze(&match design {
                Design::Bivariate => gen_bivariate(2.0, 0.5, 100_000, &mut stream(6, r)).unwrap(),
                Design::Trivariate => gen_trivariate(2.0, 0.5, 100_000, &mut stream(7, r)).unwrap(),
            })
            .unwrap())
            .collect();
        let truth = true_values(design, 2.0, 0.5);
        for &e in Estimand::for_design(design) {
            let v: Vec<f64> = sets.iter().map(|s| s.get(e).unwrap()).collect();
            let (m, se) = mean_se(&v);
            let t = truth.get(e).unwrap();
            assert!((m - t).abs() < 3.0 * se, "{design} {e}: {m} vs {t} (se {se})");
        }
    }
}

fn pooled(pattern: Pattern, nu: f64, rho2: f64, datasets: u64) -> (Vec<f64>, Vec<bool>, Vec<f64>) {
    let (mut x, mut obs, mut y) = (vec![], vec![], vec![]);
    for r in 0..datasets {
        let mut rng = stream(8, r);
        let d = gen_bivariate(nu, rho2, 100, &mut rng).unwrap();
        let y0 = d.y.clone();
        let inc = delete(d, pattern, &mut rng).unwrap();
        assert_eq!(inc.y(), &y0[..]);
        let top = (0..y0.len()).max_by(|&a, &b| y0[a].total_cmp(&y0[b])).unwrap();
        match pattern {
            Pattern::Tail => assert!(!inc.observed()[top]),
            Pattern::Peak => assert!(inc.observed()[top]),
            Pattern::Mcar => {}
        }
        x.extend_from_slice(inc.x_including_hidden());
        obs.extend_from_slice(inc.observed());
        y.extend(y0);
    }
    (x, obs, y)
}

fn split_means(x: &[f64], obs: &[bool]) -> (f64, f64) {
    let pick = |want: bool| {
        let v: Vec<f64> = x.iter().zip(obs).filter(|(_, &o)| o == want).map(|(&v, _)| v).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    (pick(false), pick(true))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn mcar_deletes_half_independently_of_the_data() {
    let (x, obs, y) = pooled(Pattern::Mcar, 2.0, 0.5, 1000);
    let n = obs.len() as f64;
    let missing = obs.iter().filter(|&&o| !o).count() as f64 / n;
    assert!((missing - 0.5).abs() < 3.0 * (0.25 / n).sqrt(), "missing {missing}");
    let mask: Vec<f64> = obs.iter().map(|&o| f64::from(u8::from(o))).collect();
    for v in [&x, &y] {
        assert!(correlation(&mask, v).abs() < 3.0 / n.sqrt());
    }
}

#[test]
fn tail_and_peak_deletion_pull_in_opposite_directions() {
    let (x, obs, _) = pooled(Pattern::Tail, 2.0, 0.7, 1000);
    let (deleted, kept) = split_means(&x, &obs);
    assert!(deleted > kept, "tail: deleted {deleted} kept {kept}");
    let (x, obs, _) = pooled(Pattern::Peak, 2.0, 0.7, 1000);
    let (deleted, kept) = split_means(&x, &obs);
    assert!(deleted < kept, "peak: deleted {deleted} kept {kept}");
}

fn estimate_set() -> impl Strategy<Value = EstimateSet> {
    prop::collection::vec(-100.0f64..100.0, 7).prop_map(|v| Estimand::BIVARIATE.into_iter().zip(v).collect())
}

proptest! {
    #[test]
    fn combining_is_order_free_and_linear(
        sets in prop::collection::vec(estimate_set(), 1..8),
        a in -3.0f64..3.0,
        rot in 0usize..8,
    ) {
        let base = mi_combine(&sets).unwrap();
        let mut shuffled = sets.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        shuffled.reverse();
        let other = mi_combine(&shuffled).unwrap();
        let scaled: Vec<EstimateSet> = sets.iter().map(|s| s.scaled(a)).collect();
        let scaled = mi_combine(&scaled).unwrap();
        for (e, v) in base.iter() {
            prop_assert!((other.get(e).unwrap() - v).abs() <= 1e-12 * v.abs().max(1.0));
            prop_assert!((scaled.get(e).unwrap() - a * v).abs() <= 1e-12 * (a * v).abs().max(1.0));
        }
        prop_assert_eq!(mi_combine(&[sets[0].clone(), sets[0].clone()]).unwrap(), sets[0].clone());
    }
}
