//! Cooperative games and exact / order-sampled Shapley solvers.
//!
//! Both solvers are linear in the game values, so they are expressed as a
//! [`ShapleyWeights`] table that can be applied to scalar values or to
//! per-row payoff vectors alike.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::{self, Scalar};

/// Subset of players `0..n` as a bitmask.
pub type Coalition = u64;

/// Largest game the exact solver accepts (2^15 coalitions).
pub const MAX_EXACT_PLAYERS: usize = 15;
/// Largest game representable as a bitmask.
pub const MAX_PLAYERS: usize = 63;

const SHAPLEY_ORDER_DOMAIN: u64 = 0x5AA9_1E55;

pub fn coalition_of(players: impl IntoIterator<Item = usize>) -> Coalition {
    players.into_iter().fold(0, |acc, p| acc | (1 << p))
}

pub fn members(c: Coalition) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&p| c & (1 << p) != 0)
}

pub trait CooperativeGame<T>: Sync {
    fn n_players(&self) -> usize;
    fn value(&self, coalition: Coalition) -> Result<T>;
}

/// Closure-backed game.
pub struct FnGame<F> {
    n: usize,
    f: F,
}

impl<F> FnGame<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<T, F: Fn(Coalition) -> T + Sync> CooperativeGame<T> for FnGame<F> {
    fn n_players(&self) -> usize {
        self.n
    }
    fn value(&self, coalition: Coalition) -> Result<T> {
        Ok((self.f)(coalition))
    }
}

/// Memoizes coalition values; every coalition is evaluated at most once.
pub struct CachedGame<T, G> {
    inner: G,
    cache: Mutex<HashMap<Coalition, T>>,
}

impl<T: Clone + Send, G: CooperativeGame<T>> CachedGame<T, G> {
    pub fn new(inner: G) -> Self {
        Self { inner, cache: Mutex::default() }
    }

    pub fn n_evaluated(&self) -> usize {
        self.cache.lock().expect("coalition cache poisoned").len()
    }

    pub fn into_cache(self) -> HashMap<Coalition, T> {
        self.cache.into_inner().expect("coalition cache poisoned")
    }
}

impl<T: Clone + Send, G: CooperativeGame<T>> CooperativeGame<T> for CachedGame<T, G> {
    fn n_players(&self) -> usize {
        self.inner.n_players()
    }

    fn value(&self, coalition: Coalition) -> Result<T> {
        if let Some(v) = self.cache.lock().expect("coalition cache poisoned").get(&coalition) {
            return Ok(v.clone());
        }
        let v = self.inner.value(coalition)?;
        self.cache.lock().expect("coalition cache poisoned").entry(coalition).or_insert(v.clone());
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Sampled,
}

/// φ_i as a linear combination of coalition values.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyWeights {
    pub n_players: usize,
    pub solver: SolverKind,
    /// Per player: (coalition, coefficient) pairs.
    pub terms: Vec<Vec<(Coalition, f64)>>,
    /// Sampled orders (empty for the exact solver).
    pub orders: Vec<Vec<usize>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl ShapleyWeights {
    /// φ_i = Σ_{S ∌ i} |S|!(n-|S|-1)!/n! [w(S ∪ i) - w(S)].
    pub fn exact(n: usize) -> Result<Self> {
        if n > MAX_EXACT_PLAYERS {
            return Err(Error::TooManyPlayers { max: MAX_EXACT_PLAYERS, got: n });
        }
        let terms = (0..n)
            .map(|i| {
                let bit = 1u64 << i;
                let mut t = Vec::with_capacity(1 << n);
                for s in 0..(1u64 << n) {
                    if s & bit != 0 {
                        continue;
                    }
                    let w = 1.0 / (n as f64 * binomial(n - 1, s.count_ones() as usize));
                    t.push((s | bit, w));
                    t.push((s, -w));
                }
                t
            })
            .collect();
        Ok(Self { n_players: n, solver: SolverKind::Exact, terms, orders: Vec::new() })
    }

    /// Marginal contributions averaged over the given orders.
    pub fn from_orders(n: usize, orders: Vec<Vec<usize>>) -> Result<Self> {
        if n > MAX_PLAYERS {
            return Err(Error::TooManyPlayers { max: MAX_PLAYERS, got: n });
        }
        if orders.is_empty() {
            return Err(Error::InvalidArgument("at least one order is required".into()));
        }
        let w = 1.0 / orders.len() as f64;
        let mut acc: Vec<HashMap<Coalition, f64>> = vec![HashMap::new(); n];
        for order in &orders {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{n}")));
            }
            let mut prefix: Coalition = 0;
            for &p in order {
                *acc[p].entry(prefix | (1 << p)).or_default() += w;
                *acc[p].entry(prefix).or_default() -= w;
                prefix |= 1 << p;
            }
        }
        let terms = acc
            .into_iter()
            .map(|m| {
                let mut t: Vec<(Coalition, f64)> = m.into_iter().collect();
                t.sort_unstable_by_key(|&(c, _)| c);
                t
            })
            .collect();
        Ok(Self { n_players: n, solver: SolverKind::Sampled, terms, orders })
    }

    /// `n_orders` Fisher-Yates orders from the seeded stream.
    pub fn sampled(n: usize, n_orders: usize, seed: u64) -> Result<Self> {
        Self::from_orders(n, sample_orders(n, n_orders, seed))
    }

    /// Every coalition the weights reference, ascending.
    pub fn coalitions(&self) -> Vec<Coalition> {
        let mut all: Vec<Coalition> = self.terms.iter().flatten().map(|&(c, _)| c).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn apply<T: Scalar>(&self, values: &HashMap<Coalition, T>) -> Vec<T> {
        self.terms
            .iter()
            .map(|t| t.iter().fold(T::zero(), |acc, &(c, w)| acc + T::of(w) * values[&c]))
            .collect()
    }

    /// Applies the weights to per-row payoff vectors of equal length.
    pub fn apply_rows<T: Scalar>(&self, rows: &HashMap<Coalition, Vec<T>>) -> Vec<Vec<T>> {
        let len = rows.values().next().map_or(0, Vec::len);
        self.terms
            .iter()
            .map(|t| {
                let mut out = vec![T::zero(); len];
                for &(c, w) in t {
                    let w = T::of(w);
                    for (o, &v) in out.iter_mut().zip(&rows[&c]) {
                        *o = *o + w * v;
                    }
                }
                out
            })
            .collect()
    }

    /// Per-player standard error over orders (zero for the exact solver).
    pub fn order_std_errors<T: Scalar>(&self, values: &HashMap<Coalition, T>) -> Vec<T> {
        if self.solver == SolverKind::Exact {
            return vec![T::zero(); self.n_players];
        }
        let mut contrib: Vec<Vec<T>> = vec![Vec::with_capacity(self.orders.len()); self.n_players];
        for order in &self.orders {
            let mut prefix: Coalition = 0;
            for &p in order {
                contrib[p].push(values[&(prefix | (1 << p))] - values[&prefix]);
                prefix |= 1 << p;
            }
        }
        contrib.iter().map(|c| scalar::std_error(c)).collect()
    }
}

pub fn sample_orders(n: usize, n_orders: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = stream_rng(&[seed, SHAPLEY_ORDER_DOMAIN]);
    (0..n_orders)
        .map(|_| {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult<T> {
    pub attributions: Vec<T>,
    pub std_errors: Vec<T>,
    pub n_orders_used: usize,
    pub solver: SolverKind,
    pub orders: Vec<Vec<usize>>,
}

/// Evaluates every coalition the weights need, concurrently.
pub fn evaluate_coalitions<T: Scalar, G: CooperativeGame<T> + ?Sized>(
    game: &G,
    coalitions: &[Coalition],
) -> Result<HashMap<Coalition, T>> {
    coalitions.par_iter().map(|&c| game.value(c).map(|v| (c, v))).collect()
}

pub fn solve<T: Scalar, G: CooperativeGame<T> + ?Sized>(game: &G, weights: &ShapleyWeights) -> Result<ShapleyResult<T>> {
    if game.n_players() != weights.n_players {
        return Err(Error::DimensionMismatch(format!(
            "game has {} players, weights cover {}",
            game.n_players(),
            weights.n_players
        )));
    }
    let values = evaluate_coalitions(game, &weights.coalitions())?;
    Ok(ShapleyResult {
        attributions: weights.apply(&values),
        std_errors: weights.order_std_errors(&values),
        n_orders_used: weights.orders.len(),
        solver: weights.solver,
        orders: weights.orders.clone(),
    })
}

/// Exact Shapley values over all 2^n coalitions.
pub fn shapley_exact<T: Scalar, G: CooperativeGame<T> + ?Sized>(game: &G) -> Result<ShapleyResult<T>> {
    solve(game, &ShapleyWeights::exact(game.n_players())?)
}

/// Shapley values estimated from `n_orders` uniformly random orders.
pub fn shapley_sampled<T: Scalar, G: CooperativeGame<T> + ?Sized>(
    game: &G,
    n_orders: usize,
    seed: u64,
) -> Result<ShapleyResult<T>> {
    solve(game, &ShapleyWeights::sampled(game.n_players(), n_orders, seed)?)
}
