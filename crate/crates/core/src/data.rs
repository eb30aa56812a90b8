//! Observed data and feature index sets.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Sorted, duplicate-free set of column indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureIndexSet(Vec<usize>);

impl FeatureIndexSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn singleton(i: usize) -> Self {
        Self(vec![i])
    }

    /// All indices `0..d`.
    pub fn full(d: usize) -> Self {
        Self((0..d).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(self.iter().chain(other.iter()))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.iter().filter(|&i| other.contains(i)).collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self(self.iter().filter(|&i| !other.contains(i)).collect())
    }

    /// `{0..d} \ self`.
    pub fn complement(&self, d: usize) -> Self {
        Self((0..d).filter(|&i| !self.contains(i)).collect())
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.iter().all(|i| !other.contains(i))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn with(&self, i: usize) -> Self {
        self.union(&Self::singleton(i))
    }

    pub fn without(&self, i: usize) -> Self {
        Self(self.iter().filter(|&j| j != i).collect())
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Errors unless every index is `< d`.
    pub fn check_bounds(&self, d: usize) -> Result<()> {
        match self.max_index() {
            Some(m) if m >= d => Err(Error::IndexOutOfRange { index: m, len: d }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FeatureIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for FeatureIndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// n x d observations with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix<T> {
    values: Matrix<T>,
    column_names: Vec<String>,
}

impl<T: Scalar> DataMatrix<T> {
    pub fn new(values: Matrix<T>, column_names: Vec<String>) -> Result<Self> {
        if values.rows() < 2 || values.cols() < 1 {
            return Err(Error::InvalidData(format!(
                "need n >= 2 rows and d >= 1 columns, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if column_names.len() != values.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {} columns",
                column_names.len(),
                values.cols()
            )));
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidData(format!("duplicate column name '{name}'")));
            }
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value at row {}, column '{}'",
                pos / values.cols(),
                column_names[pos % values.cols()]
            )));
        }
        Ok(Self { values, column_names })
    }

    /// Convenience constructor with generated names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        let names = (0..m.cols()).map(|j| format!("x{j}")).collect();
        Self::new(m, names)
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.values.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.column(j)
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Resolves column names to an index set.
    pub fn index_set<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureIndexSet> {
        names
            .iter()
            .map(|n| {
                self.column_index(n.as_ref())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown column '{}'", n.as_ref())))
            })
            .collect()
    }

    pub fn select_columns(&self, cols: &FeatureIndexSet) -> Result<Self> {
        cols.check_bounds(self.n_cols())?;
        let rows: Vec<usize> = (0..self.n_rows()).collect();
        let values = self.values.select(&rows, cols.indices());
        let names = cols.iter().map(|j| self.column_names[j].clone()).collect();
        Self::new(values, names)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let cols: Vec<usize> = (0..self.n_cols()).collect();
        Self::new(self.values.select(rows, &cols), self.column_names.clone())
    }

    /// Same data with columns reordered: new column `i` is old column `perm[i]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let rows: Vec<usize> = (0..self.n_rows()).collect();
        let names = perm.iter().map(|&j| self.column_names[j].clone()).collect();
        Self::new(self.values.select(&rows, perm), names)
    }
}

/// Length-n supervision vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> TargetVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite target at row {pos}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self { values: rows.iter().map(|&i| self.values[i]).collect() }
    }
}

pub(crate) fn check_paired<T: Scalar>(data: &DataMatrix<T>, target: &TargetVector<T>) -> Result<()> {
    if data.n_rows() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} rows but target has {}",
            data.n_rows(),
            target.len()
        )));
    }
    Ok(())
}

/// A paired data set split into a fitting part and a held-out evaluation part.
#[derive(Debug, Clone)]
pub struct Split<T> {
    pub fit_data: DataMatrix<T>,
    pub fit_target: TargetVector<T>,
    pub eval_data: DataMatrix<T>,
    pub eval_target: TargetVector<T>,
}

/// Seeded random split; `fit_fraction` of the rows go to the fitting part.
pub fn train_eval_split<T: Scalar>(
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    fit_fraction: f64,
    seed: u64,
) -> Result<Split<T>> {
    check_paired(data, target)?;
    if !(fit_fraction > 0.0 && fit_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fit_fraction}"
        )));
    }
    let n = data.n_rows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_fit = ((n as f64) * fit_fraction).round() as usize;
    if n_fit < 2 || n - n_fit < 2 {
        return Err(Error::InsufficientRows { needed: 4, got: n });
    }
    let (fit, eval) = idx.split_at(n_fit);
    let mut fit = fit.to_vec();
    let mut eval = eval.to_vec();
    fit.sort_unstable();
    eval.sort_unstable();
    Ok(Split {
        fit_data: data.select_rows(&fit)?,
        fit_target: target.select(&fit),
        eval_data: data.select_rows(&eval)?,
        eval_target: target.select(&eval),
    })
}
