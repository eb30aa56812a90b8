//! Fast and Shapley-based decompositions of PFI and conditional SAGE into
//! per-source / per-pathway components.

mod shapley;

use serde::{Deserialize, Serialize};

use crate::data::FeatureIndexSet;
use crate::error::{Error, Result};
use crate::importance::{
    draw_orders, sage_surplus, EvalOptions, Evaluator, ImportanceEstimate, MeasureSpec, Mode, RowEstimate,
    SageVariant,
};
use crate::scalar::{self, Scalar};

pub use shapley::{
    coalition_of, evaluate_coalitions, members, sample_orders, shapley_exact, shapley_sampled, solve, CachedGame,
    Coalition, CooperativeGame, FnGame, ShapleyResult, ShapleyWeights, SolverKind, MAX_EXACT_PLAYERS, MAX_PLAYERS,
};

/// Largest player count solved exactly under [`Solver::Auto`].
pub const AUTO_EXACT_MAX_PLAYERS: usize = 8;
pub const DEFAULT_SAGE_ORDERS: usize = 60;
pub const DEFAULT_DECOMPOSITION_ORDERS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Solver {
    /// Exact up to [`AUTO_EXACT_MAX_PLAYERS`] players, sampled beyond.
    Auto { n_orders: usize },
    Exact,
    Sampled { n_orders: usize },
}

impl Default for Solver {
    fn default() -> Self {
        Solver::Auto { n_orders: DEFAULT_DECOMPOSITION_ORDERS }
    }
}

impl Solver {
    pub fn weights(self, n_players: usize, seed: u64) -> Result<ShapleyWeights> {
        match self {
            Solver::Exact => ShapleyWeights::exact(n_players),
            Solver::Auto { .. } if n_players <= AUTO_EXACT_MAX_PLAYERS => ShapleyWeights::exact(n_players),
            Solver::Auto { n_orders } | Solver::Sampled { n_orders } => {
                ShapleyWeights::sampled(n_players, n_orders, seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fast,
    /// Telescoping along this order of source columns.
    FastOrdered(Vec<usize>),
    ShapleyExact,
    ShapleySampled,
}

impl From<SolverKind> for Method {
    fn from(k: SolverKind) -> Self {
        match k {
            SolverKind::Exact => Method::ShapleyExact,
            SolverKind::Sampled => Method::ShapleySampled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component<T> {
    pub label: String,
    pub index: usize,
    pub value: T,
    pub std_error: T,
}

/// Components of one SAGE context (the predecessors of the target in one order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRow<T> {
    pub context: FeatureIndexSet,
    pub surplus: T,
    pub surplus_std_error: T,
    pub components: Vec<Component<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTable<T> {
    pub target_label: String,
    pub target_index: usize,
    pub total: ImportanceEstimate<T>,
    pub components: Vec<Component<T>>,
    pub method: Method,
    /// `total - sum(components)`, with the SE of its per-row version.
    pub remainder: T,
    pub remainder_std_error: T,
    /// Orders used (Shapley orders for PFI games, SAGE orders for SAGE rows).
    pub orders: Vec<Vec<usize>>,
    pub contexts: Vec<ContextRow<T>>,
}

impl<T: Scalar> DecompositionTable<T> {
    pub fn component(&self, label: &str) -> Option<&Component<T>> {
        self.components.iter().find(|c| c.label == label)
    }

    pub fn component_sum(&self) -> T {
        self.components.iter().map(|c| c.value).sum()
    }
}

fn label<T: Scalar>(eval: &Evaluator<'_, T>, j: usize) -> String {
    eval.data().column_names()[j].clone()
}

fn check_column<T: Scalar>(eval: &Evaluator<'_, T>, j: usize) -> Result<()> {
    if j >= eval.n_cols() {
        return Err(Error::IndexOutOfRange { index: j, len: eval.n_cols() });
    }
    Ok(())
}

fn sub_rows<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

fn component<T: Scalar>(eval: &Evaluator<'_, T>, index: usize, rows: &[T], extra_se: T) -> Component<T> {
    let se = scalar::std_error(rows);
    Component {
        label: label(eval, index),
        index,
        value: scalar::mean(rows),
        std_error: (se * se + extra_se * extra_se).sqrt(),
    }
}

struct Assembled<T> {
    components: Vec<Component<T>>,
    rows: Vec<Vec<T>>,
}

fn finish<T: Scalar>(
    eval: &Evaluator<'_, T>,
    target: usize,
    total: RowEstimate<T>,
    parts: Assembled<T>,
    method: Method,
    orders: Vec<Vec<usize>>,
    contexts: Vec<ContextRow<T>>,
) -> DecompositionTable<T> {
    let mut rest = total.per_row.clone();
    for r in &parts.rows {
        for (a, &v) in rest.iter_mut().zip(r) {
            *a = *a - v;
        }
    }
    let remainder = total.estimate.value - parts.components.iter().map(|c| c.value).sum::<T>();
    DecompositionTable {
        target_label: label(eval, target),
        target_index: target,
        total: total.estimate,
        components: parts.components,
        method,
        remainder,
        remainder_std_error: scalar::std_error(&rest),
        orders,
        contexts,
    }
}

fn pfi_spec(k: usize, d: usize, sources: FeatureIndexSet, options: EvalOptions) -> MeasureSpec {
    let kk = FeatureIndexSet::singleton(k);
    MeasureSpec::di_from(kk.clone(), kk.complement(d), sources).with_options(options)
}

fn pfi_total<T: Scalar>(eval: &Evaluator<'_, T>, k: usize, options: EvalOptions) -> Result<RowEstimate<T>> {
    eval.evaluate_rows(&MeasureSpec::pfi(k, eval.n_cols()).with_options(options))
}

/// β_kj = DI(k | D \ k <- j) for each source `j`; total = PFI_k.
pub fn fast_decompose_pfi<T: Scalar>(
    eval: &Evaluator<'_, T>,
    k: usize,
    sources: &FeatureIndexSet,
    options: EvalOptions,
) -> Result<DecompositionTable<T>> {
    check_column(eval, k)?;
    sources.check_bounds(eval.n_cols())?;
    let total = pfi_total(eval, k, options)?;
    let mut parts = Assembled { components: Vec::new(), rows: Vec::new() };
    for j in sources.iter() {
        let r = eval.evaluate_rows(&pfi_spec(k, eval.n_cols(), FeatureIndexSet::singleton(j), options))?;
        parts.components.push(component(eval, j, &r.per_row, T::zero()));
        parts.rows.push(r.per_row);
    }
    Ok(finish(eval, k, total, parts, Method::Fast, Vec::new(), Vec::new()))
}

/// β^π_kj = DI(k | D \ k <- S u j) - DI(k | D \ k <- S), S = predecessors of
/// `j` in `order`; components telescope to DI(k | D \ k <- all of `order`).
pub fn fast_decompose_pfi_ordered<T: Scalar>(
    eval: &Evaluator<'_, T>,
    k: usize,
    order: &[usize],
    options: EvalOptions,
) -> Result<DecompositionTable<T>> {
    check_column(eval, k)?;
    let d = eval.n_cols();
    let as_set: FeatureIndexSet = order.iter().copied().collect();
    if as_set.len() != order.len() {
        return Err(Error::InvalidArgument(format!("order {order:?} repeats a column")));
    }
    as_set.check_bounds(d)?;
    let total = pfi_total(eval, k, options)?;
    let mut parts = Assembled { components: Vec::new(), rows: Vec::new() };
    let mut prefix = FeatureIndexSet::empty();
    let mut prev = eval.evaluate_rows(&pfi_spec(k, d, prefix.clone(), options))?.per_row;
    for &j in order {
        prefix = prefix.with(j);
        let next = eval.evaluate_rows(&pfi_spec(k, d, prefix.clone(), options))?.per_row;
        let rows = sub_rows(&next, &prev);
        parts.components.push(component(eval, j, &rows, T::zero()));
        parts.rows.push(rows);
        prev = next;
    }
    Ok(finish(eval, k, total, parts, Method::FastOrdered(order.to_vec()), Vec::new(), Vec::new()))
}

fn ai_via_spec(j: usize, context: &FeatureIndexSet, pathway: FeatureIndexSet, options: EvalOptions) -> MeasureSpec {
    MeasureSpec::ai_via(FeatureIndexSet::singleton(j), context.clone(), pathway)
        .with_mode(Mode::Marginalized)
        .with_options(options)
}

fn check_sage_target<T: Scalar>(
    eval: &Evaluator<'_, T>,
    j: usize,
    pathways: &FeatureIndexSet,
    players: &FeatureIndexSet,
) -> Result<()> {
    check_column(eval, j)?;
    pathways.check_bounds(eval.n_cols())?;
    players.check_bounds(eval.n_cols())?;
    if !players.contains(j) {
        return Err(Error::InvalidArgument(format!("variable {j} is not a SAGE player in {players}")));
    }
    Ok(())
}

/// Per-context fast pathway split: α_j^C and α_jk^C = α_j^C - AI(j | C -> D \ k).
fn fast_context<T: Scalar>(
    eval: &Evaluator<'_, T>,
    j: usize,
    context: &FeatureIndexSet,
    pathways: &FeatureIndexSet,
    options: EvalOptions,
) -> Result<(RowEstimate<T>, Vec<Vec<T>>)> {
    let d = eval.n_cols();
    let surplus = sage_surplus(eval, &FeatureIndexSet::singleton(j), context, SageVariant::Conditional, options)?;
    let rows = pathways
        .iter()
        .map(|k| {
            let blocked = eval.evaluate_rows(&ai_via_spec(j, context, FeatureIndexSet::singleton(k).complement(d), options))?;
            Ok(sub_rows(&surplus.per_row, &blocked.per_row))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((surplus, rows))
}

fn context_row<T: Scalar>(
    eval: &Evaluator<'_, T>,
    context: FeatureIndexSet,
    surplus: &RowEstimate<T>,
    pathways: &FeatureIndexSet,
    rows: &[Vec<T>],
    extra: &[T],
) -> ContextRow<T> {
    ContextRow {
        context,
        surplus: surplus.estimate.value,
        surplus_std_error: surplus.estimate.std_error,
        components: pathways.iter().zip(rows).zip(extra).map(|((k, r), &e)| component(eval, k, r, e)).collect(),
    }
}

/// Fast pathway decomposition of AI(j | C) in marginalized mode at a fixed context.
pub fn fast_decompose_ai<T: Scalar>(
    eval: &Evaluator<'_, T>,
    j: usize,
    context: &FeatureIndexSet,
    pathways: &FeatureIndexSet,
    options: EvalOptions,
) -> Result<DecompositionTable<T>> {
    check_column(eval, j)?;
    pathways.check_bounds(eval.n_cols())?;
    let (surplus, rows) = fast_context(eval, j, context, pathways, options)?;
    let components = pathways.iter().zip(&rows).map(|(k, r)| component(eval, k, r, T::zero())).collect();
    Ok(finish(eval, j, surplus, Assembled { components, rows }, Method::Fast, Vec::new(), Vec::new()))
}

/// Averages per-context row vectors into a pooled SAGE-level table.
fn pool_contexts<T: Scalar>(
    eval: &Evaluator<'_, T>,
    j: usize,
    pathways: &FeatureIndexSet,
    per_context: Vec<(RowEstimate<T>, Vec<Vec<T>>, Vec<T>)>,
    method: Method,
    orders: Vec<Vec<usize>>,
    contexts: Vec<ContextRow<T>>,
) -> DecompositionTable<T> {
    let m = T::of(per_context.len() as f64);
    let n = eval.n_rows();
    let mut total_rows = vec![T::zero(); n];
    let mut comp_rows = vec![vec![T::zero(); n]; pathways.len()];
    let mut extra_var = vec![T::zero(); pathways.len()];
    let mut per_order: Vec<T> = Vec::with_capacity(per_context.len());
    let mut last = None;
    for (surplus, rows, extra) in per_context {
        for (a, &v) in total_rows.iter_mut().zip(&surplus.per_row) {
            *a = *a + v / m;
        }
        for (acc, r) in comp_rows.iter_mut().zip(&rows) {
            for (a, &v) in acc.iter_mut().zip(r) {
                *a = *a + v / m;
            }
        }
        for (e, &x) in extra_var.iter_mut().zip(&extra) {
            *e = *e + x * x / (m * m);
        }
        per_order.push(surplus.estimate.value);
        last = Some(surplus);
    }
    let mut total = last.expect("at least one order");
    total.estimate.value = scalar::mean(&total_rows);
    total.estimate.std_error = scalar::std_error(&total_rows);
    total.estimate.mc_std_error = scalar::std_error(&per_order);
    total.estimate.sets.baseline = FeatureIndexSet::empty();
    total.per_row = total_rows;
    let components = pathways
        .iter()
        .zip(&comp_rows)
        .zip(&extra_var)
        .map(|((k, r), &v)| component(eval, k, r, v.sqrt()))
        .collect();
    finish(eval, j, total, Assembled { components, rows: comp_rows }, method, orders, contexts)
}

/// Conditional-SAGE attribution of variable `j` over `n_orders` random
/// orders of `players`, split into fast per-pathway components.
pub fn fast_decompose_sage<T: Scalar>(
    eval: &Evaluator<'_, T>,
    j: usize,
    pathways: &FeatureIndexSet,
    players: &FeatureIndexSet,
    n_orders: usize,
    options: EvalOptions,
) -> Result<DecompositionTable<T>> {
    check_sage_target(eval, j, pathways, players)?;
    if n_orders == 0 {
        return Err(Error::InvalidArgument("n_orders must be at least 1".into()));
    }
    let orders = draw_orders(players, n_orders, options.seed);
    let mut per_context = Vec::with_capacity(orders.len());
    let mut contexts = Vec::with_capacity(orders.len());
    for order in &orders {
        let context = predecessors(order, j);
        let (surplus, rows) = fast_context(eval, j, &context, pathways, options)?;
        let zeros = vec![T::zero(); rows.len()];
        contexts.push(context_row(eval, context, &surplus, pathways, &rows, &zeros));
        per_context.push((surplus, rows, zeros));
    }
    Ok(pool_contexts(eval, j, pathways, per_context, Method::Fast, orders, contexts))
}

fn predecessors(order: &[usize], j: usize) -> FeatureIndexSet {
    let pos = order.iter().position(|&p| p == j).expect("order contains the target");
    order[..pos].iter().copied().collect()
}

fn columns_of(players: &FeatureIndexSet, c: Coalition) -> FeatureIndexSet {
    members(c).map(|p| players.indices()[p]).collect()
}

/// Solves a game whose payoffs are per-row vectors; returns per-player rows
/// and order standard errors.
fn solve_rows<T: Scalar>(
    weights: &ShapleyWeights,
    payoff: impl Fn(Coalition) -> Result<Vec<T>> + Sync,
) -> Result<(Vec<Vec<T>>, Vec<T>)> {
    use rayon::prelude::*;
    let coalitions = weights.coalitions();
    let rows: std::collections::HashMap<Coalition, Vec<T>> =
        coalitions.par_iter().map(|&c| payoff(c).map(|r| (c, r))).collect::<Result<_>>()?;
    let means = rows.iter().map(|(&c, r)| (c, scalar::mean(r))).collect();
    Ok((weights.apply_rows(&rows), weights.order_std_errors(&means)))
}

/// Shapley split of PFI_k over variable players, game w_k(J) = DI(k | D \ k <- J).
pub fn shapley_decompose_pfi<T: Scalar>(
    eval: &Evaluator<'_, T>,
    k: usize,
    players: &FeatureIndexSet,
    solver: Solver,
    options: EvalOptions,
) -> Result<DecompositionTable<T>> {
    check_column(eval, k)?;
    let d = eval.n_cols();
    players.check_bounds(d)?;
    let total = pfi_total(eval, k, options)?;
    let weights = solver.weights(players.len(), options.seed)?;
    let (rows, extra) = solve_rows(&weights, |c| {
        Ok(eval.evaluate_rows(&pfi_spec(k, d, columns_of(players, c), options))?.per_row)
    })?;
    let components = players.iter().zip(&rows).zip(&extra).map(|((p, r), &e)| component(eval, p, r, e)).collect();
    let method = weights.solver.into();
    Ok(finish(eval, k, total, Assembled { components, rows }, method, weights.orders, Vec::new()))
}

/// Shapley split of the conditional-SAGE attribution of `j` over pathway
/// players, game w_j^C(K) = AI(j | C -> K; f_C, f_{C u j}), averaged over
/// `n_sage_orders` SAGE contexts.
pub fn shapley_decompose_sage<T: Scalar>(
    eval: &Evaluator<'_, T>,
    j: usize,
    pathways: &FeatureIndexSet,
    players: &FeatureIndexSet,
    n_sage_orders: usize,
    solver: Solver,
    options: EvalOptions,
) -> Result<DecompositionTable<T>> {
    check_sage_target(eval, j, pathways, players)?;
    if n_sage_orders == 0 {
        return Err(Error::InvalidArgument("n_sage_orders must be at least 1".into()));
    }
    let orders = draw_orders(players, n_sage_orders, options.seed);
    let mut per_context = Vec::with_capacity(orders.len());
    let mut contexts = Vec::with_capacity(orders.len());
    let mut kind = SolverKind::Exact;
    for (o, order) in orders.iter().enumerate() {
        let context = predecessors(order, j);
        let surplus =
            sage_surplus(eval, &FeatureIndexSet::singleton(j), &context, SageVariant::Conditional, options)?;
        let weights = solver.weights(pathways.len(), crate::rng::mix(&[options.seed, o as u64]))?;
        kind = weights.solver;
        let (rows, extra) = solve_rows(&weights, |c| {
            Ok(eval.evaluate_rows(&ai_via_spec(j, &context, columns_of(pathways, c), options))?.per_row)
        })?;
        contexts.push(context_row(eval, context, &surplus, pathways, &rows, &extra));
        per_context.push((surplus, rows, extra));
    }
    Ok(pool_contexts(eval, j, pathways, per_context, kind.into(), orders, contexts))
}
