//! The predictor abstraction, the built-in OLS model family and empirical risk.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{check_paired, DataMatrix, FeatureIndexSet, TargetVector};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::loss::LossFunction;
use crate::scalar::Scalar;

/// A fitted model mapping a length-d feature row to a prediction.
///
/// Implementations must be deterministic and must not read columns outside
/// [`Predictor::support`]; the importance measures rely on both.
pub trait Predictor<T: Scalar>: Send + Sync {
    /// Width of the rows `predict` expects.
    fn n_features(&self) -> usize;

    /// Columns the predictor actually reads.
    fn support(&self) -> FeatureIndexSet;

    fn predict(&self, row: &[T]) -> T;

    /// Affine predictors expose themselves so expectations can be taken in
    /// closed form.
    fn as_linear(&self) -> Option<&LinearPredictor<T>> {
        None
    }
}

impl<T: Scalar, P: Predictor<T> + ?Sized> Predictor<T> for &P {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn support(&self) -> FeatureIndexSet {
        (**self).support()
    }
    fn predict(&self, row: &[T]) -> T {
        (**self).predict(row)
    }
    fn as_linear(&self) -> Option<&LinearPredictor<T>> {
        (**self).as_linear()
    }
}

impl<T: Scalar, P: Predictor<T> + ?Sized> Predictor<T> for Box<P> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn support(&self) -> FeatureIndexSet {
        (**self).support()
    }
    fn predict(&self, row: &[T]) -> T {
        (**self).predict(row)
    }
    fn as_linear(&self) -> Option<&LinearPredictor<T>> {
        (**self).as_linear()
    }
}

impl<T: Scalar, P: Predictor<T> + ?Sized> Predictor<T> for Arc<P> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn support(&self) -> FeatureIndexSet {
        (**self).support()
    }
    fn predict(&self, row: &[T]) -> T {
        (**self).predict(row)
    }
    fn as_linear(&self) -> Option<&LinearPredictor<T>> {
        (**self).as_linear()
    }
}

/// `intercept + weights . x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPredictor<T> {
    pub weights: Vec<T>,
    pub intercept: T,
}

impl<T: Scalar> LinearPredictor<T> {
    pub fn new(weights: Vec<T>, intercept: T) -> Self {
        Self { weights, intercept }
    }
}

impl<T: Scalar> Predictor<T> for LinearPredictor<T> {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn support(&self) -> FeatureIndexSet {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != T::zero())
            .map(|(j, _)| j)
            .collect()
    }

    #[inline]
    fn predict(&self, row: &[T]) -> T {
        self.weights
            .iter()
            .zip(row)
            .filter(|(w, _)| **w != T::zero())
            .fold(self.intercept, |acc, (&w, &x)| acc + w * x)
    }

    fn as_linear(&self) -> Option<&LinearPredictor<T>> {
        Some(self)
    }
}

/// Wraps a closure as a predictor with an explicitly declared support.
pub struct FnPredictor<F> {
    n_features: usize,
    support: FeatureIndexSet,
    f: F,
}

impl<F> FnPredictor<F> {
    pub fn new(n_features: usize, support: FeatureIndexSet, f: F) -> Self {
        Self { n_features, support, f }
    }
}

impl<T: Scalar, F: Fn(&[T]) -> T + Send + Sync> Predictor<T> for FnPredictor<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn support(&self) -> FeatureIndexSet {
        self.support.clone()
    }
    fn predict(&self, row: &[T]) -> T {
        (self.f)(row)
    }
}

/// Largest Gram-matrix condition number `fit_ols` accepts.
pub const MAX_CONDITION: f64 = 1e12;

/// Ordinary least squares with intercept over the `support` columns.
/// Weights outside the support are exactly zero.
pub fn fit_ols<T: Scalar>(
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    support: &FeatureIndexSet,
) -> Result<LinearPredictor<T>> {
    check_paired(data, target)?;
    support.check_bounds(data.n_cols())?;
    let n = data.n_rows();
    let p = support.len();
    if n <= p {
        return Err(Error::InsufficientRows { needed: p + 1, got: n });
    }
    let cols = support.indices();
    let nf = T::of(n as f64);
    let y = target.values();
    let y_mean = y.iter().copied().sum::<T>() / nf;
    let x_mean: Vec<T> = cols
        .iter()
        .map(|&j| (0..n).map(|i| data.row(i)[j]).sum::<T>() / nf)
        .collect();

    let mut weights = vec![T::zero(); data.n_cols()];
    if p == 0 {
        return Ok(LinearPredictor::new(weights, y_mean));
    }

    let mut gram = Matrix::zeros(p, p);
    let mut xty = Matrix::zeros(p, 1);
    let mut centered = vec![T::zero(); p];
    for i in 0..n {
        let row = data.row(i);
        for (a, &j) in cols.iter().enumerate() {
            centered[a] = row[j] - x_mean[a];
        }
        let yc = y[i] - y_mean;
        for a in 0..p {
            xty[(a, 0)] = xty[(a, 0)] + centered[a] * yc;
            for b in a..p {
                gram[(a, b)] = gram[(a, b)] + centered[a] * centered[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }

    let ev = gram.symmetric_eigenvalues();
    let (lo, hi) = (ev[0], ev[p - 1]);
    let condition = if lo > T::zero() { Scalar::as_f64(hi / lo) } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularDesign { condition });
    }
    let l = gram.cholesky(T::zero()).ok_or(Error::SingularDesign { condition })?;
    let beta = l.cholesky_solve(&xty);
    let mut intercept = y_mean;
    for (a, &j) in cols.iter().enumerate() {
        weights[j] = beta[(a, 0)];
        intercept = intercept - beta[(a, 0)] * x_mean[a];
    }
    Ok(LinearPredictor::new(weights, intercept))
}

/// Mean loss of `pred` over the rows of `data`.
pub fn empirical_risk<T: Scalar, P: Predictor<T> + ?Sized>(
    pred: &P,
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    loss: LossFunction,
) -> Result<T> {
    check_paired(data, target)?;
    if pred.n_features() != data.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "predictor expects {} features, data has {}",
            pred.n_features(),
            data.n_cols()
        )));
    }
    let total: T = (0..data.n_rows())
        .map(|i| loss.eval(target.values()[i], pred.predict(data.row(i))))
        .sum();
    Ok(total / T::of(data.n_rows() as f64))
}
