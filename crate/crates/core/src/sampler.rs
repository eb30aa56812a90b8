//! Gaussian covariate model and the perturbation primitives built on it:
//! independent draws, conditional draws and marginalized predictors.

use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, FeatureIndexSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::predictor::Predictor;
use crate::rng::{fill_normals, mix, set_tag, stream_rng};
use crate::scalar::Scalar;

/// Default number of draws a [`MarginalizedPredictor`] averages over.
pub const DEFAULT_N_INTEGRATION: usize = 32;

const MAX_ASYMMETRY: f64 = 1e-10;
const MIN_EIGENVALUE: f64 = -1e-8;

/// Joint Gaussian over all d columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel<T> {
    mean: Vec<T>,
    cov: Matrix<T>,
}

impl<T: Scalar> GaussianModel<T> {
    pub fn new(mean: Vec<T>, mut cov: Matrix<T>) -> Result<Self> {
        let d = mean.len();
        if cov.rows() != d || cov.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "mean has {d} entries, covariance is {}x{}",
                cov.rows(),
                cov.cols()
            )));
        }
        if mean.iter().chain(cov.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        let asym = cov.max_asymmetry();
        if asym > T::of(MAX_ASYMMETRY) {
            return Err(Error::InvalidCovariance(format!("asymmetry {asym} exceeds 1e-10")));
        }
        cov.symmetrize();
        if d > 0 {
            let min_ev = cov.symmetric_eigenvalues()[0];
            if min_ev < T::of(MIN_EIGENVALUE) {
                return Err(Error::InvalidCovariance(format!(
                    "minimum eigenvalue {min_ev} below -1e-8"
                )));
            }
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix<T> {
        &self.cov
    }

    /// Same model with coordinates reordered: new coordinate `i` is old `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let mean = perm.iter().map(|&j| self.mean[j]).collect();
        Self::new(mean, self.cov.select(perm, perm))
    }
}

/// Sample mean and unbiased sample covariance of the columns of `data`.
pub fn fit_gaussian<T: Scalar>(data: &DataMatrix<T>) -> Result<GaussianModel<T>> {
    let (n, d) = (data.n_rows(), data.n_cols());
    if n < d + 1 {
        return Err(Error::InsufficientRows { needed: d + 1, got: n });
    }
    let nf = T::of(n as f64);
    let mut mean = vec![T::zero(); d];
    for i in 0..n {
        for (m, &x) in mean.iter_mut().zip(data.row(i)) {
            *m = *m + x;
        }
    }
    for m in mean.iter_mut() {
        *m = *m / nf;
    }
    let mut cov = Matrix::zeros(d, d);
    let mut c = vec![T::zero(); d];
    for i in 0..n {
        for ((cj, &x), &m) in c.iter_mut().zip(data.row(i)).zip(&mean) {
            *cj = x - m;
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] = cov[(a, b)] + c[a] * c[b];
            }
        }
    }
    let denom = T::of((n - 1) as f64);
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    GaussianModel::new(mean, cov)
}

/// Closed-form conditional distribution of `targets` given `cond`:
/// mean `offset + coef * x_cond`, covariance `cov` (Schur complement).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalParams<T> {
    pub targets: FeatureIndexSet,
    pub cond: FeatureIndexSet,
    pub offset: Vec<T>,
    pub coef: Matrix<T>,
    pub cov: Matrix<T>,
    chol: Matrix<T>,
    root: Matrix<T>,
}

impl<T: Scalar> ConditionalParams<T> {
    /// Lower Cholesky factor of `cov` (after jitter).
    pub fn chol(&self) -> &Matrix<T> {
        &self.chol
    }

    /// Conditional mean given a full-width row (only `cond` columns are read).
    pub fn fill_mean(&self, row: &[T], out: &mut [T]) {
        let cond = self.cond.indices();
        for (t, o) in out.iter_mut().enumerate() {
            let mut v = self.offset[t];
            let coef = self.coef.row(t);
            for (k, &c) in cond.iter().enumerate() {
                v = v + coef[k] * row[c];
            }
            *o = v;
        }
    }

    /// Symmetric square root of `cov`, used to shape draws.
    pub fn root(&self) -> &Matrix<T> {
        &self.root
    }

    /// One conditional draw `mean + cov^{1/2} z`; `z` holds one standard
    /// normal per column of the full row, indexed by column. The symmetric
    /// root makes the draw equivariant under relabeling of the columns.
    pub fn fill_sample(&self, row: &[T], z: &[f64], out: &mut [T]) {
        self.fill_mean(row, out);
        let targets = self.targets.indices();
        for (a, o) in out.iter_mut().enumerate() {
            let r = self.root.row(a);
            let mut v = *o;
            for (b, &t) in targets.iter().enumerate() {
                v = v + r[b] * T::of(z[t]);
            }
            *o = v;
        }
    }
}

/// Conditional mean map and Schur-complement covariance of `targets | cond`.
pub fn conditional_params<T: Scalar>(
    g: &GaussianModel<T>,
    cond: &FeatureIndexSet,
    targets: &FeatureIndexSet,
) -> Result<ConditionalParams<T>> {
    let d = g.dim();
    cond.check_bounds(d)?;
    targets.check_bounds(d)?;
    if !cond.is_disjoint(targets) {
        return Err(Error::DisjointnessViolation(format!(
            "conditioning set {cond} overlaps targets {targets}"
        )));
    }
    let (t, c) = (targets.indices(), cond.indices());
    let jitter = T::jitter();
    let s_tt = g.cov.select(t, t);
    let mu_t: Vec<T> = t.iter().map(|&i| g.mean[i]).collect();
    let (offset, coef, mut cov) = if c.is_empty() {
        (mu_t, Matrix::zeros(t.len(), 0), s_tt)
    } else {
        let s_cc = g.cov.select(c, c);
        let s_ct = g.cov.select(c, t);
        let l_cc = s_cc.cholesky(jitter).ok_or(Error::SingularConditioning)?;
        // coef^T = S_cc^{-1} S_ct
        let coef = l_cc.cholesky_solve(&s_ct).transpose();
        let reduce = coef.matmul(&s_ct)?;
        let cov = s_tt.sub(&reduce);
        let offset = (0..t.len())
            .map(|a| {
                let shift: T = c.iter().enumerate().map(|(k, &ci)| coef[(a, k)] * g.mean[ci]).sum();
                mu_t[a] - shift
            })
            .collect();
        (offset, coef, cov)
    };
    cov.symmetrize();
    // Rounding can leave tiny negative diagonals on deterministic relations.
    for a in 0..cov.rows() {
        if cov[(a, a)] < T::zero() {
            cov[(a, a)] = T::zero();
        }
    }
    let chol = cov.cholesky_psd(jitter)?;
    let root = cov.psd_sqrt();
    Ok(ConditionalParams {
        targets: targets.clone(),
        cond: cond.clone(),
        offset,
        coef,
        cov,
        chol,
        root,
    })
}

/// Draws perturbed columns: conditionally on `conditioning` (per row), or
/// from the joint marginal when `conditioning` is empty.
#[derive(Debug, Clone)]
pub struct PerturbationSampler<T> {
    pub base: GaussianModel<T>,
    pub conditioning: FeatureIndexSet,
    pub rng_seed: u64,
}

impl<T: Scalar> PerturbationSampler<T> {
    pub fn new(base: GaussianModel<T>, conditioning: FeatureIndexSet, rng_seed: u64) -> Self {
        Self { base, conditioning, rng_seed }
    }

    /// n x |targets| matrix; row i is a draw given row i's conditioning values.
    pub fn perturb(&self, data: &DataMatrix<T>, targets: &FeatureIndexSet) -> Result<Matrix<T>> {
        let d = self.base.dim();
        if data.n_cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "model has {d} columns, data has {}",
                data.n_cols()
            )));
        }
        let params = conditional_params(&self.base, &self.conditioning, targets)?;
        let tag = mix(&[set_tag(targets.indices()), set_tag(self.conditioning.indices())]);
        let mut out = Matrix::zeros(data.n_rows(), targets.len());
        let mut z = vec![0.0; d];
        for i in 0..data.n_rows() {
            let mut rng = stream_rng(&[self.rng_seed, tag, i as u64]);
            fill_normals(&mut rng, &mut z);
            params.fill_sample(data.row(i), &z, out.row_mut(i));
        }
        Ok(out)
    }
}

/// How a marginalized predictor integrates out the dropped columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integration {
    /// Dropped columns drawn from their distribution given the kept values.
    Conditional,
    /// Dropped columns drawn from their marginal, ignoring the kept values.
    Independent,
}

/// `f_S`: the inner predictor averaged over the columns outside `kept`.
pub struct MarginalizedPredictor<T: Scalar, P> {
    inner: P,
    kept: FeatureIndexSet,
    integration: Integration,
    n_integration: usize,
    rng_seed: u64,
    dropped: FeatureIndexSet,
    params: ConditionalParams<T>,
}

impl<T: Scalar, P: Predictor<T>> MarginalizedPredictor<T, P> {
    pub fn kept(&self) -> &FeatureIndexSet {
        &self.kept
    }

    pub fn integration(&self) -> Integration {
        self.integration
    }

    /// Exact expectation when the inner predictor is affine.
    pub fn closed_form(&self, row: &[T]) -> Option<T> {
        let lin = self.inner.as_linear()?;
        let mut x = row.to_vec();
        let mut mu = vec![T::zero(); self.dropped.len()];
        self.params.fill_mean(row, &mut mu);
        for (a, j) in self.dropped.iter().enumerate() {
            x[j] = mu[a];
        }
        Some(lin.predict(&x))
    }

    /// Monte-Carlo standard error of `predict(row)`.
    pub fn predict_with_se(&self, row: &[T]) -> (T, T) {
        if self.dropped.is_empty() {
            return (self.inner.predict(row), T::zero());
        }
        let d = row.len();
        let mut words: Vec<u64> = Vec::with_capacity(self.kept.len() + 1);
        words.push(self.rng_seed);
        words.extend(self.kept.iter().map(|j| row[j].as_f64().to_bits()));
        let mut rng = stream_rng(&words);
        let mut z = vec![0.0; d];
        let mut x = row.to_vec();
        let mut buf = vec![T::zero(); self.dropped.len()];
        let mut preds = Vec::with_capacity(self.n_integration);
        for _ in 0..self.n_integration {
            fill_normals(&mut rng, &mut z);
            self.params.fill_sample(row, &z, &mut buf);
            for (a, j) in self.dropped.iter().enumerate() {
                x[j] = buf[a];
            }
            preds.push(self.inner.predict(&x));
        }
        (crate::scalar::mean(&preds), crate::scalar::std_error(&preds))
    }
}

impl<T: Scalar, P: Predictor<T>> Predictor<T> for MarginalizedPredictor<T, P> {
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn support(&self) -> FeatureIndexSet {
        self.kept.clone()
    }

    fn predict(&self, row: &[T]) -> T {
        self.predict_with_se(row).0
    }
}

/// Builds `f_S` for `S = kept`.
pub fn marginalize<T: Scalar, P: Predictor<T>>(
    pred: P,
    kept: &FeatureIndexSet,
    g: &GaussianModel<T>,
    integration: Integration,
    n_integration: usize,
    seed: u64,
) -> Result<MarginalizedPredictor<T, P>> {
    if n_integration == 0 {
        return Err(Error::InvalidArgument("n_integration must be at least 1".into()));
    }
    let d = g.dim();
    if pred.n_features() != d {
        return Err(Error::DimensionMismatch(format!(
            "predictor expects {} features, model has {d}",
            pred.n_features()
        )));
    }
    kept.check_bounds(d)?;
    let dropped = kept.complement(d);
    let cond = match integration {
        Integration::Conditional => kept.clone(),
        Integration::Independent => FeatureIndexSet::empty(),
    };
    let params = conditional_params(g, &cond, &dropped)?;
    Ok(MarginalizedPredictor {
        inner: pred,
        kept: kept.clone(),
        integration,
        n_integration,
        rng_seed: seed,
        dropped,
        params,
    })
}
