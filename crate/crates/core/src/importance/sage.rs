//! SAGE value functions and order-sampled SAGE attributions, expressed
//! through the marginalized-mode measures.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::FeatureIndexSet;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::{self, Scalar};

use super::{EvalOptions, Evaluator, ImportanceEstimate, MeasureSpec, Mode, RowEstimate};

const ORDER_DOMAIN: u64 = 0x5A6E_0DE5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SageVariant {
    /// Dropped features integrated out from their marginal.
    Marginal,
    /// Dropped features integrated out given the kept ones.
    Conditional,
}

/// v(S): risk of the fully marginalized model minus risk of `f_S`.
pub fn sage_value<T: Scalar>(
    eval: &Evaluator<'_, T>,
    set: &FeatureIndexSet,
    variant: SageVariant,
    options: EvalOptions,
) -> Result<RowEstimate<T>> {
    sage_surplus(eval, set, &FeatureIndexSet::empty(), variant, options)
}

/// `v(C u J) - v(C)`, evaluated directly as the risk gap between `f_C` and
/// `f_{C u J}`.
pub fn sage_surplus<T: Scalar>(
    eval: &Evaluator<'_, T>,
    j: &FeatureIndexSet,
    context: &FeatureIndexSet,
    variant: SageVariant,
    options: EvalOptions,
) -> Result<RowEstimate<T>> {
    let spec = match variant {
        SageVariant::Marginal => MeasureSpec::di(j.clone(), context.clone()),
        SageVariant::Conditional => MeasureSpec::ai(j.clone(), context.clone()),
    };
    eval.evaluate_rows(&spec.with_mode(Mode::Marginalized).with_options(options))
}

/// `n_orders` uniformly random orders of `players` (Fisher-Yates).
pub fn draw_orders(players: &FeatureIndexSet, n_orders: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = stream_rng(&[seed, ORDER_DOMAIN]);
    (0..n_orders)
        .map(|_| {
            let mut order = players.indices().to_vec();
            order.shuffle(&mut rng);
            order
        })
        .collect()
}

/// A SAGE attribution averaged over sampled orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SageAttribution<T> {
    pub feature: usize,
    /// `std_error` is over evaluation rows; `mc_std_error` over orders.
    pub estimate: ImportanceEstimate<T>,
    /// Surplus in each order.
    pub per_order: Vec<T>,
    /// Order-averaged per-row surplus.
    #[serde(skip)]
    pub per_row: Vec<T>,
}

/// Attributions for every player, sharing the same sampled orders.
pub fn sage_attributions<T: Scalar>(
    eval: &Evaluator<'_, T>,
    players: &FeatureIndexSet,
    variant: SageVariant,
    orders: &[Vec<usize>],
    options: EvalOptions,
) -> Result<Vec<SageAttribution<T>>> {
    if orders.is_empty() {
        return Err(Error::InvalidArgument("at least one order is required".into()));
    }
    players
        .iter()
        .map(|j| {
            let mut per_order = Vec::with_capacity(orders.len());
            let mut per_row = vec![T::zero(); eval.n_rows()];
            let mut last = None;
            for order in orders {
                let pos = order.iter().position(|&p| p == j).ok_or_else(|| {
                    Error::InvalidArgument(format!("order {order:?} does not contain player {j}"))
                })?;
                let context: FeatureIndexSet = order[..pos].iter().copied().collect();
                let r = sage_surplus(eval, &FeatureIndexSet::singleton(j), &context, variant, options)?;
                per_order.push(r.estimate.value);
                for (acc, &v) in per_row.iter_mut().zip(&r.per_row) {
                    *acc = *acc + v;
                }
                last = Some(r.estimate);
            }
            let m = T::of(orders.len() as f64);
            per_row.iter_mut().for_each(|v| *v = *v / m);
            let mut estimate = last.expect("non-empty orders");
            estimate.value = scalar::mean(&per_row);
            estimate.std_error = scalar::std_error(&per_row);
            estimate.mc_std_error = scalar::std_error(&per_order);
            estimate.sets.baseline = FeatureIndexSet::empty();
            Ok(SageAttribution { feature: j, estimate, per_order, per_row })
        })
        .collect()
}

/// SAGE attribution of feature `j` among `players`, over `n_orders` random orders.
pub fn sage_attribution<T: Scalar>(
    eval: &Evaluator<'_, T>,
    j: usize,
    players: &FeatureIndexSet,
    variant: SageVariant,
    n_orders: usize,
    options: EvalOptions,
) -> Result<SageAttribution<T>> {
    if !players.contains(j) {
        return Err(Error::InvalidArgument(format!("feature {j} is not among the players {players}")));
    }
    let orders = draw_orders(players, n_orders, options.seed);
    let mut all = sage_attributions(eval, &FeatureIndexSet::singleton(j), variant, &orders, options)?;
    Ok(all.remove(0))
}
