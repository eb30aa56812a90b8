#![allow(dead_code)]

use dedact::{DataMatrix, FeatureIndexSet, GaussianModel, LinearPredictor, Matrix, TargetVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn set(v: &[usize]) -> FeatureIndexSet {
    FeatureIndexSet::new(v.iter().copied())
}

pub fn data_from_columns(cols: &[Vec<f64>]) -> DataMatrix<f64> {
    let n = cols[0].len();
    let d = cols.len();
    let mut v = Vec::with_capacity(n * d);
    for i in 0..n {
        for c in cols {
            v.push(c[i]);
        }
    }
    let names = (0..d).map(|j| format!("x{j}")).collect();
    DataMatrix::new(Matrix::from_vec(n, d, v).unwrap(), names).unwrap()
}

pub fn target(v: Vec<f64>) -> TargetVector<f64> {
    TargetVector::new(v).unwrap()
}

pub fn gaussian(cov: &[Vec<f64>]) -> GaussianModel<f64> {
    GaussianModel::new(vec![0.0; cov.len()], Matrix::from_rows(cov).unwrap()).unwrap()
}

pub fn identity_gaussian(d: usize) -> GaussianModel<f64> {
    GaussianModel::new(vec![0.0; d], Matrix::identity(d)).unwrap()
}

pub fn linear(weights: &[f64], intercept: f64) -> LinearPredictor<f64> {
    LinearPredictor::new(weights.to_vec(), intercept)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn corr(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Slope of the simple regression of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Residual of `y` after regressing on the columns `z` (with intercept).
pub fn residualize(y: &[f64], z: &[Vec<f64>]) -> Vec<f64> {
    if z.is_empty() {
        let m = mean(y);
        return y.iter().map(|v| v - m).collect();
    }
    let mut cols = z.to_vec();
    let n = y.len();
    let data = data_from_columns(&cols);
    let t = target(y.to_vec());
    let fit = dedact::fit_ols(&data, &t, &FeatureIndexSet::full(cols.len())).unwrap();
    cols.clear();
    (0..n).map(|i| y[i] - dedact::Predictor::predict(&fit, data.row(i))).collect()
}

pub fn partial_corr(a: &[f64], b: &[f64], z: &[Vec<f64>]) -> f64 {
    corr(&residualize(a, z), &residualize(b, z))
}
