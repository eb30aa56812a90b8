mod common;

use common::*;
use dedact::{empirical_risk, fit_ols, FeatureIndexSet, LinearPredictor, LossFunction, Predictor};
use proptest::prelude::*;
use rand::Rng;

fn noisy_linear(n: usize, seed: u64) -> (dedact::DataMatrix<f64>, dedact::TargetVector<f64>) {
    let mut r = rng(seed);
    let x0 = normals(&mut r, n);
    let x1: Vec<f64> = normals(&mut r, n).iter().zip(&x0).map(|(e, a)| 0.5 * a + e).collect();
    let x2 = normals(&mut r, n);
    let e = normals(&mut r, n);
    let y = (0..n).map(|i| 1.0 + 2.0 * x0[i] - x1[i] + 0.3 * x2[i] + e[i]).collect();
    (data_from_columns(&[x0, x1, x2]), target(y))
}

#[test]
fn ols_residuals_are_orthogonal_to_supported_columns() {
    let (data, t) = noisy_linear(5000, 1);
    let support = set(&[0, 2]);
    let f = fit_ols(&data, &t, &support).unwrap();
    assert_eq!(f.weights[1], 0.0);
    let resid: Vec<f64> = (0..data.n_rows()).map(|i| t.values()[i] - f.predict(data.row(i))).collect();
    for j in support.iter() {
        let col = data.column(j);
        let m = mean(&col);
        let sd = (col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / col.len() as f64).sqrt();
        let dot: f64 = col.iter().zip(&resid).map(|(x, r)| (x - m) / sd * r).sum();
        assert!(dot.abs() < 1e-8 * data.n_rows() as f64, "column {j}: {dot}");
    }
    assert!(mean(&resid).abs() < 1e-10);
}

#[test]
fn ols_beats_random_perturbations_of_its_weights() {
    let (data, t) = noisy_linear(2000, 2);
    let support = FeatureIndexSet::full(3);
    let f = fit_ols(&data, &t, &support).unwrap();
    let best = empirical_risk(&f, &data, &t, LossFunction::SquaredError).unwrap();
    let mut r = rng(3);
    for _ in 0..100 {
        let w: Vec<f64> = f.weights.iter().map(|w| w + 0.1 * r.random_range(-1.0..1.0)).collect();
        let b = f.intercept + 0.1 * r.random_range(-1.0..1.0);
        let other = LinearPredictor::new(w, b);
        assert!(best <= empirical_risk(&other, &data, &t, LossFunction::SquaredError).unwrap());
    }
}

#[test]
fn ols_on_pure_noise_target_has_vanishing_weights() {
    let n = 50_000;
    let mut r = rng(4);
    let cols: Vec<Vec<f64>> = (0..3).map(|_| normals(&mut r, n)).collect();
    let y = normals(&mut r, n);
    let f = fit_ols(&data_from_columns(&cols), &target(y), &FeatureIndexSet::full(3)).unwrap();
    // Unit-variance regressors and noise: SE of each weight ≈ 1/sqrt(n).
    for w in &f.weights {
        assert!(w.abs() < 3.0 / (n as f64).sqrt(), "weight {w}");
    }
}

#[test]
fn ols_needs_more_rows_than_support() {
    let data = data_from_columns(&[vec![1.0, 2.0], vec![0.5, 0.1]]);
    assert!(fit_ols(&data, &target(vec![1.0, 0.0]), &FeatureIndexSet::full(2)).is_err());
}

#[test]
fn risk_rejects_mismatched_lengths() {
    let data = data_from_columns(&[vec![1.0, 2.0, 3.0]]);
    let f = linear(&[1.0], 0.0);
    assert!(matches!(
        empirical_risk(&f, &data, &target(vec![1.0, 2.0]), LossFunction::SquaredError),
        Err(dedact::Error::DimensionMismatch(_))
    ));
}

proptest! {
    #[test]
    fn linear_predictor_honors_its_support(
        weights in proptest::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], 1..6),
        row in proptest::collection::vec(-5.0..5.0f64, 6),
        noise in proptest::collection::vec(-5.0..5.0f64, 6),
    ) {
        let d = weights.len();
        let f = LinearPredictor::new(weights.clone(), 0.25);
        let support = f.support();
        let mut other = row[..d].to_vec();
        for j in 0..d {
            if !support.contains(j) {
                other[j] = noise[j];
            }
        }
        prop_assert_eq!(f.predict(&row[..d]), f.predict(&other));
        let expected = 0.25 + weights.iter().zip(&row[..d]).map(|(w, x)| w * x).sum::<f64>();
        prop_assert!((f.predict(&row[..d]) - expected).abs() < 1e-12);
    }
}
