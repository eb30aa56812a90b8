//! Plan execution: realizes perturbation draws with common random numbers,
//! scores each term and reduces per-row loss differences.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::data::{check_paired, DataMatrix, FeatureIndexSet, TargetVector};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::predictor::Predictor;
use crate::rng::{fill_normals, stream_rng};
use crate::sampler::{conditional_params, ConditionalParams, GaussianModel};
use crate::scalar::{self, Scalar};

use super::plan::{Assignment, DrawSpec, EvaluationPlan, PredictorChoice, TermPlan};
use super::{EvalOptions, ImportanceEstimate, Measure, MeasureSpec};

/// Domain tag separating integration draws from perturbation draws.
const INTEGRATION_DOMAIN: u64 = 0x1D7E_6AA7;

/// Default upper bound on cached draw and term memory.
pub const DEFAULT_CACHE_BYTES: usize = 512 << 20;

/// An estimate together with the per-row and per-repetition quantities it
/// was reduced from; decompositions combine these linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct RowEstimate<T> {
    pub estimate: ImportanceEstimate<T>,
    /// Repetition-averaged loss difference of each evaluation row.
    pub per_row: Vec<T>,
    /// Importance value of each Monte-Carlo repetition.
    pub per_rep: Vec<T>,
    /// Mean risk of the `[worse, better]` terms.
    pub risks: [T; 2],
}

#[derive(Debug)]
struct TermValue<T> {
    row_means: Vec<T>,
    rep_means: Vec<T>,
}

impl<T> TermValue<T> {
    fn bytes(&self) -> usize {
        (self.row_means.len() + self.rep_means.len()) * std::mem::size_of::<T>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct TermKey {
    scorer: Scorer,
    relevant: Vec<(usize, Option<DrawSpec>)>,
    seed: u64,
    n_mc: usize,
    n_integration: usize,
    loss: crate::loss::LossFunction,
}

fn reserve(counter: &AtomicUsize, bytes: usize, cap: usize) -> bool {
    let prev = counter.fetch_add(bytes, Ordering::Relaxed);
    if prev + bytes > cap {
        counter.fetch_sub(bytes, Ordering::Relaxed);
        false
    } else {
        true
    }
}

/// How a term turns its assigned row into a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Scorer {
    /// `f` on one joint draw per repetition.
    Original,
    /// `f` averaged over the term's draws; exact for affine `f` by plugging
    /// in the conditional means.
    Mean,
    /// `f` averaged over the term's draws with `n_integration` samples.
    MonteCarlo,
}

/// Evaluates measure specs against one dataset, predictor and Gaussian model.
///
/// Conditional parameters, realized draws and term risks are cached, so
/// families of related measures (decomposition games) share work. Results do
/// not depend on cache state or thread count.
pub struct Evaluator<'a, T: Scalar> {
    data: &'a DataMatrix<T>,
    target: &'a TargetVector<T>,
    predictor: &'a dyn Predictor<T>,
    gaussian: &'a GaussianModel<T>,
    /// Position of each column in name order; normals are assigned by name so
    /// relabeling columns relabels the draws.
    rank: Vec<usize>,
    params: Mutex<HashMap<(FeatureIndexSet, FeatureIndexSet), Arc<ConditionalParams<T>>>>,
    normals: Mutex<HashMap<(u64, u64, usize), Arc<Vec<f64>>>>,
    draws: Mutex<HashMap<(DrawSpec, u64, usize), Arc<Matrix<T>>>>,
    terms: Mutex<HashMap<TermKey, Arc<TermValue<T>>>>,
    cached_bytes: AtomicUsize,
    term_bytes: AtomicUsize,
    cache_cap: usize,
    evaluations: AtomicUsize,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    pub fn new(
        data: &'a DataMatrix<T>,
        target: &'a TargetVector<T>,
        predictor: &'a dyn Predictor<T>,
        gaussian: &'a GaussianModel<T>,
    ) -> Result<Self> {
        check_paired(data, target)?;
        let d = data.n_cols();
        if predictor.n_features() != d {
            return Err(Error::DimensionMismatch(format!(
                "predictor expects {} columns, data has {d}",
                predictor.n_features()
            )));
        }
        if gaussian.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "gaussian model has {} columns, data has {d}",
                gaussian.dim()
            )));
        }
        let mut by_name: Vec<usize> = (0..d).collect();
        by_name.sort_by(|&a, &b| data.column_names()[a].cmp(&data.column_names()[b]));
        let mut rank = vec![0; d];
        for (r, &j) in by_name.iter().enumerate() {
            rank[j] = r;
        }
        Ok(Self {
            data,
            target,
            predictor,
            gaussian,
            rank,
            params: Mutex::default(),
            normals: Mutex::default(),
            draws: Mutex::default(),
            terms: Mutex::default(),
            cached_bytes: AtomicUsize::new(0),
            term_bytes: AtomicUsize::new(0),
            cache_cap: DEFAULT_CACHE_BYTES,
            evaluations: AtomicUsize::new(0),
        })
    }

    /// Caps cached memory; entries beyond the cap are recomputed on demand.
    pub fn with_cache_bytes(mut self, cap: usize) -> Self {
        self.cache_cap = cap;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.data.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.n_cols()
    }

    pub fn data(&self) -> &DataMatrix<T> {
        self.data
    }

    pub fn gaussian(&self) -> &GaussianModel<T> {
        self.gaussian
    }

    /// Number of measure evaluations requested so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn evaluate(&self, spec: &MeasureSpec) -> Result<ImportanceEstimate<T>> {
        Ok(self.evaluate_rows(spec)?.estimate)
    }

    pub fn evaluate_rows(&self, spec: &MeasureSpec) -> Result<RowEstimate<T>> {
        let d = self.n_cols();
        spec.validate(d)?;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let plan = EvaluationPlan::for_spec(spec, d);
        let worse = self.term_value(&plan, &plan.terms[0], &spec.options)?;
        let better = self.term_value(&plan, &plan.terms[1], &spec.options)?;
        let per_row: Vec<T> = worse.row_means.iter().zip(&better.row_means).map(|(&a, &b)| a - b).collect();
        let per_rep: Vec<T> = worse.rep_means.iter().zip(&better.rep_means).map(|(&a, &b)| a - b).collect();
        let risks = [scalar::mean(&worse.row_means), scalar::mean(&better.row_means)];
        let estimate = ImportanceEstimate {
            value: scalar::mean(&per_row),
            std_error: scalar::std_error(&per_row),
            mc_std_error: scalar::std_error(&per_rep),
            n_mc: spec.options.n_mc,
            n_rows: per_row.len(),
            mode: spec.mode,
            loss: spec.options.loss,
            sets: spec.sets(),
            seed: spec.options.seed,
        };
        Ok(RowEstimate { estimate, per_row, per_rep, risks })
    }

    /// Draws and terms each get a budget of `cache_cap` bytes.
    fn remember(&self, bytes: usize) -> bool {
        reserve(&self.cached_bytes, bytes, self.cache_cap)
    }

    fn params(&self, cond: &FeatureIndexSet, targets: &FeatureIndexSet) -> Result<Arc<ConditionalParams<T>>> {
        let key = (targets.clone(), cond.clone());
        if let Some(p) = self.params.lock().expect("params cache poisoned").get(&key) {
            return Ok(p.clone());
        }
        let p = Arc::new(conditional_params(self.gaussian, cond, targets)?);
        self.params.lock().expect("params cache poisoned").insert(key, p.clone());
        Ok(p)
    }

    fn fill_ranked(&self, rng: &mut impl rand::Rng, z: &mut [f64]) {
        let mut g = [0.0f64; 64];
        let d = z.len();
        if d <= g.len() {
            fill_normals(rng, &mut g[..d]);
            for (zj, &r) in z.iter_mut().zip(&self.rank) {
                *zj = g[r];
            }
        } else {
            let mut g = vec![0.0; d];
            fill_normals(rng, &mut g);
            for (zj, &r) in z.iter_mut().zip(&self.rank) {
                *zj = g[r];
            }
        }
    }

    /// Standard normals of one (seed, stream, repetition): n x d, row-major.
    fn normals(&self, seed: u64, stream: u64, rep: usize) -> Arc<Vec<f64>> {
        let key = (seed, stream, rep);
        if let Some(z) = self.normals.lock().expect("normal cache poisoned").get(&key) {
            return z.clone();
        }
        let (n, d) = (self.n_rows(), self.n_cols());
        let mut z = vec![0.0; n * d];
        z.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
            let mut rng = stream_rng(&[seed, rep as u64, stream, i as u64]);
            self.fill_ranked(&mut rng, row);
        });
        let z = Arc::new(z);
        if self.remember(n * d * 8) {
            self.normals.lock().expect("normal cache poisoned").insert(key, z.clone());
        }
        z
    }

    /// Realized draw: n x |targets| matrix of conditional samples.
    fn realize(&self, spec: &DrawSpec, seed: u64, rep: usize) -> Result<Arc<Matrix<T>>> {
        let key = (spec.clone(), seed, rep);
        if let Some(m) = self.draws.lock().expect("draw cache poisoned").get(&key) {
            return Ok(m.clone());
        }
        let params = self.params(&spec.cond, &spec.targets)?;
        let z = self.normals(seed, spec.stream, rep);
        let (n, d, t) = (self.n_rows(), self.n_cols(), spec.targets.len());
        let mut out = Matrix::zeros(n, t);
        if t > 0 {
            out.as_mut_slice().par_chunks_mut(t).enumerate().for_each(|(i, o)| {
                params.fill_sample(self.data.row(i), &z[i * d..(i + 1) * d], o);
            });
        }
        let out = Arc::new(out);
        if self.remember(n * t * std::mem::size_of::<T>()) {
            self.draws.lock().expect("draw cache poisoned").insert(key, out.clone());
        }
        Ok(out)
    }

    fn scorer(&self, choice: &PredictorChoice) -> Scorer {
        match choice {
            PredictorChoice::Original => Scorer::Original,
            PredictorChoice::Marginalized { .. } if self.predictor.as_linear().is_some() => Scorer::Mean,
            PredictorChoice::Marginalized { .. } => Scorer::MonteCarlo,
        }
    }

    fn term_value(&self, plan: &EvaluationPlan, term: &TermPlan, opts: &EvalOptions) -> Result<Arc<TermValue<T>>> {
        let scorer = self.scorer(&term.predictor);
        let relevant = self.predictor.support();
        let resolved: Vec<(usize, Option<DrawSpec>)> = relevant
            .iter()
            .map(|j| match term.assignment[j] {
                Assignment::KeepOriginal => (j, None),
                Assignment::Drawn(i) => (j, Some(plan.draws[i].clone())),
            })
            .collect();
        let key = TermKey {
            scorer,
            relevant: resolved,
            seed: opts.seed,
            n_mc: opts.n_mc,
            n_integration: opts.n_integration,
            loss: opts.loss,
        };
        if let Some(v) = self.terms.lock().expect("term cache poisoned").get(&key) {
            return Ok(v.clone());
        }
        let value = Arc::new(self.compute_term(plan, term, &relevant, scorer, opts)?);
        if reserve(&self.term_bytes, value.bytes(), self.cache_cap) {
            self.terms.lock().expect("term cache poisoned").insert(key, value.clone());
        }
        Ok(value)
    }

    /// Conditional means of a draw: n x |targets|.
    fn realize_mean(&self, spec: &DrawSpec) -> Result<Arc<Matrix<T>>> {
        let key = (spec.clone(), u64::MAX, usize::MAX);
        if let Some(m) = self.draws.lock().expect("draw cache poisoned").get(&key) {
            return Ok(m.clone());
        }
        let params = self.params(&spec.cond, &spec.targets)?;
        let (n, t) = (self.n_rows(), spec.targets.len());
        let mut out = Matrix::zeros(n, t);
        if t > 0 {
            out.as_mut_slice().par_chunks_mut(t).enumerate().for_each(|(i, o)| {
                params.fill_mean(self.data.row(i), o);
            });
        }
        let out = Arc::new(out);
        if self.remember(n * t * std::mem::size_of::<T>()) {
            self.draws.lock().expect("draw cache poisoned").insert(key, out.clone());
        }
        Ok(out)
    }

    fn compute_term(
        &self,
        plan: &EvaluationPlan,
        term: &TermPlan,
        relevant: &FeatureIndexSet,
        scorer: Scorer,
        opts: &EvalOptions,
    ) -> Result<TermValue<T>> {
        let (n, d) = (self.n_rows(), self.n_cols());
        // Which draw (and position within it) feeds each relevant column.
        let mut sources: Vec<(usize, usize, usize)> = Vec::new();
        let mut used_draws: Vec<usize> = Vec::new();
        for j in relevant.iter() {
            if let Assignment::Drawn(i) = term.assignment[j] {
                let pos = plan.draws[i].targets.indices().iter().position(|&t| t == j).expect("drawn column in targets");
                let slot = match used_draws.iter().position(|&u| u == i) {
                    Some(s) => s,
                    None => {
                        used_draws.push(i);
                        used_draws.len() - 1
                    }
                };
                sources.push((j, slot, pos));
            }
        }
        let reps = if sources.is_empty() || scorer == Scorer::Mean { 1 } else { opts.n_mc };
        let y = self.target.values();
        let losses: Vec<Vec<T>> = match scorer {
            Scorer::Original | Scorer::Mean => {
                let realized: Vec<Vec<Arc<Matrix<T>>>> = (0..reps)
                    .map(|r| {
                        used_draws
                            .iter()
                            .map(|&i| match scorer {
                                Scorer::Mean => self.realize_mean(&plan.draws[i]),
                                _ => self.realize(&plan.draws[i], opts.seed, r),
                            })
                            .collect()
                    })
                    .collect::<Result<_>>()?;
                (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut x = self.data.row(i).to_vec();
                        (0..reps)
                            .map(|r| {
                                for &(j, slot, pos) in &sources {
                                    x[j] = realized[r][slot][(i, pos)];
                                }
                                opts.loss.eval(y[i], self.predictor.predict(&x))
                            })
                            .collect()
                    })
                    .collect()
            }
            Scorer::MonteCarlo => {
                let params: Vec<Arc<ConditionalParams<T>>> = used_draws
                    .iter()
                    .map(|&i| self.params(&plan.draws[i].cond, &plan.draws[i].targets))
                    .collect::<Result<_>>()?;
                (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let row = self.data.row(i);
                        let mut x = row.to_vec();
                        let mut z = vec![0.0; d];
                        let mut bufs: Vec<Vec<T>> =
                            used_draws.iter().map(|&u| vec![T::zero(); plan.draws[u].targets.len()]).collect();
                        (0..reps)
                            .map(|r| {
                                let mut total = T::zero();
                                for m in 0..opts.n_integration {
                                    for (slot, &u) in used_draws.iter().enumerate() {
                                        let stream = plan.draws[u].stream;
                                        let mut rng = stream_rng(&[
                                            opts.seed,
                                            r as u64,
                                            stream,
                                            i as u64,
                                            INTEGRATION_DOMAIN,
                                            m as u64,
                                        ]);
                                        self.fill_ranked(&mut rng, &mut z);
                                        params[slot].fill_sample(row, &z, &mut bufs[slot]);
                                    }
                                    for &(j, slot, pos) in &sources {
                                        x[j] = bufs[slot][pos];
                                    }
                                    total = total + self.predictor.predict(&x);
                                }
                                let yhat = total / T::of(opts.n_integration as f64);
                                opts.loss.eval(y[i], yhat)
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        let row_means: Vec<T> = losses.iter().map(|l| scalar::mean(l)).collect();
        let mut rep_means: Vec<T> =
            (0..reps).map(|r| scalar::mean(&losses.iter().map(|l| l[r]).collect::<Vec<_>>())).collect();
        if reps < opts.n_mc {
            rep_means = vec![rep_means[0]; opts.n_mc];
        }
        Ok(TermValue { row_means, rep_means })
    }
}

fn run<T: Scalar>(
    expected: Measure,
    spec: &MeasureSpec,
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    predictor: &dyn Predictor<T>,
    gaussian: &GaussianModel<T>,
) -> Result<ImportanceEstimate<T>> {
    if spec.measure != expected {
        return Err(Error::InvalidArgument(format!("expected a {expected:?} spec, got {:?}", spec.measure)));
    }
    Evaluator::new(data, target, predictor, gaussian)?.evaluate(spec)
}

/// DI(K | B): risk with D \ B perturbed minus risk with D \ (B u K) perturbed.
pub fn direct_importance<T: Scalar>(
    spec: &MeasureSpec,
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    predictor: &dyn Predictor<T>,
    gaussian: &GaussianModel<T>,
) -> Result<ImportanceEstimate<T>> {
    run(Measure::Direct, spec, data, target, predictor, gaussian)
}

/// AI(J | C): risk with D \ C reconstructed from C minus risk with
/// D \ (C u J) reconstructed from C u J.
pub fn associative_importance<T: Scalar>(
    spec: &MeasureSpec,
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    predictor: &dyn Predictor<T>,
    gaussian: &GaussianModel<T>,
) -> Result<ImportanceEstimate<T>> {
    run(Measure::Associative, spec, data, target, predictor, gaussian)
}

/// DI(K | B <- J): like DI(K | B) but K is only reconstructed from J.
pub fn di_from<T: Scalar>(
    spec: &MeasureSpec,
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    predictor: &dyn Predictor<T>,
    gaussian: &GaussianModel<T>,
) -> Result<ImportanceEstimate<T>> {
    run(Measure::DirectFrom, spec, data, target, predictor, gaussian)
}

/// AI(J | C -> K): like AI(J | C) but J only reaches the model through K.
pub fn ai_via<T: Scalar>(
    spec: &MeasureSpec,
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    predictor: &dyn Predictor<T>,
    gaussian: &GaussianModel<T>,
) -> Result<ImportanceEstimate<T>> {
    run(Measure::AssociativeVia, spec, data, target, predictor, gaussian)
}

/// Permutation feature importance of column `k`.
pub fn pfi<T: Scalar>(
    k: usize,
    options: EvalOptions,
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    predictor: &dyn Predictor<T>,
    gaussian: &GaussianModel<T>,
) -> Result<ImportanceEstimate<T>> {
    let d = data.n_cols();
    if k >= d {
        return Err(Error::IndexOutOfRange { index: k, len: d });
    }
    direct_importance(&MeasureSpec::pfi(k, d).with_options(options), data, target, predictor, gaussian)
}

/// Conditional feature importance of column `j`.
pub fn conditional_fi<T: Scalar>(
    j: usize,
    options: EvalOptions,
    data: &DataMatrix<T>,
    target: &TargetVector<T>,
    predictor: &dyn Predictor<T>,
    gaussian: &GaussianModel<T>,
) -> Result<ImportanceEstimate<T>> {
    let d = data.n_cols();
    if j >= d {
        return Err(Error::IndexOutOfRange { index: j, len: d });
    }
    associative_importance(&MeasureSpec::conditional_fi(j, d).with_options(options), data, target, predictor, gaussian)
}
