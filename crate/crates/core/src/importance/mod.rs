//! Direct importance, associative importance and their components, plus the
//! named special cases (PFI, conditional FI, SAGE value functions).
//!
//! Every measure is `risk(worse term) - risk(better term)`, so features that
//! help the model score positive.

mod eval;
mod plan;
mod sage;

use serde::{Deserialize, Serialize};

use crate::data::FeatureIndexSet;
use crate::error::{Error, Result};
use crate::loss::LossFunction;
use crate::sampler::DEFAULT_N_INTEGRATION;

pub use eval::{
    ai_via, associative_importance, conditional_fi, di_from, direct_importance, pfi, Evaluator, RowEstimate,
    DEFAULT_CACHE_BYTES,
};
pub use plan::{Assignment, DrawSpec, EvaluationPlan, PredictorChoice, TermPlan};
pub use sage::{draw_orders, sage_attribution, sage_attributions, sage_surplus, sage_value, SageAttribution, SageVariant};

/// Default Monte-Carlo repetitions per estimate.
pub const DEFAULT_N_MC: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// DI(K | B): restore features K over a perturbed baseline.
    Direct,
    /// AI(J | C): reconstruct all features from variables J beyond context C.
    Associative,
    /// DI(K | B <- J): the part of DI(K | B) that variables J reconstruct.
    DirectFrom,
    /// AI(J | C -> K): the part of AI(J | C) entering through features K.
    AssociativeVia,
}

/// Whether both terms score the original model or marginalized variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    OriginalF,
    Marginalized,
}

/// Knobs shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub loss: LossFunction,
    pub n_mc: usize,
    pub n_integration: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            loss: LossFunction::SquaredError,
            n_mc: DEFAULT_N_MC,
            n_integration: DEFAULT_N_INTEGRATION,
            seed: 0,
        }
    }
}

impl EvalOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_mc(mut self, n_mc: usize) -> Self {
        self.n_mc = n_mc;
        self
    }

    pub fn with_loss(mut self, loss: LossFunction) -> Self {
        self.loss = loss;
        self
    }
}

/// One measure evaluation request.
///
/// `interest` is K for DI / DI-from and J for AI / AI-via; `baseline` is B or
/// C; `aux` is the source J of DI-from or the pathway K of AI-via (unused
/// otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub measure: Measure,
    pub interest: FeatureIndexSet,
    pub baseline: FeatureIndexSet,
    #[serde(default)]
    pub aux: FeatureIndexSet,
    #[serde(default)]
    pub mode: Mode,
    #[serde(flatten)]
    pub options: EvalOptions,
}

impl MeasureSpec {
    fn build(measure: Measure, interest: FeatureIndexSet, baseline: FeatureIndexSet, aux: FeatureIndexSet) -> Self {
        Self { measure, interest, baseline, aux, mode: Mode::OriginalF, options: EvalOptions::default() }
    }

    pub fn di(k: FeatureIndexSet, b: FeatureIndexSet) -> Self {
        Self::build(Measure::Direct, k, b, FeatureIndexSet::empty())
    }

    pub fn ai(j: FeatureIndexSet, c: FeatureIndexSet) -> Self {
        Self::build(Measure::Associative, j, c, FeatureIndexSet::empty())
    }

    pub fn di_from(k: FeatureIndexSet, b: FeatureIndexSet, sources: FeatureIndexSet) -> Self {
        Self::build(Measure::DirectFrom, k, b, sources)
    }

    pub fn ai_via(j: FeatureIndexSet, c: FeatureIndexSet, pathway: FeatureIndexSet) -> Self {
        Self::build(Measure::AssociativeVia, j, c, pathway)
    }

    /// Permutation feature importance of column `k`: DI({k} | D \ {k}; f, f).
    pub fn pfi(k: usize, d: usize) -> Self {
        let k = FeatureIndexSet::singleton(k);
        let b = k.complement(d);
        Self::di(k, b)
    }

    /// Conditional feature importance of column `j`: AI({j} | D \ {j}; f, f).
    pub fn conditional_fi(j: usize, d: usize) -> Self {
        let j = FeatureIndexSet::singleton(j);
        let c = j.complement(d);
        Self::ai(j, c)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_options(mut self, options: EvalOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.options.seed = seed;
        self
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        self.interest.check_bounds(d)?;
        self.baseline.check_bounds(d)?;
        self.aux.check_bounds(d)?;
        if !self.interest.is_disjoint(&self.baseline) {
            return Err(Error::DisjointnessViolation(format!(
                "interest {} and baseline {} overlap",
                self.interest, self.baseline
            )));
        }
        if self.options.n_mc == 0 {
            return Err(Error::InvalidArgument("n_mc must be at least 1".into()));
        }
        if self.options.n_integration == 0 {
            return Err(Error::InvalidArgument("n_integration must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sets(&self) -> MeasureSets {
        MeasureSets {
            measure: self.measure,
            interest: self.interest.clone(),
            baseline: self.baseline.clone(),
            aux: self.aux.clone(),
        }
    }
}

/// Provenance: which sets an estimate was computed for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureSets {
    pub measure: Measure,
    pub interest: FeatureIndexSet,
    pub baseline: FeatureIndexSet,
    pub aux: FeatureIndexSet,
}

/// A Monte-Carlo importance value with its standard errors and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEstimate<T> {
    pub value: T,
    /// Standard error over evaluation rows of the repetition-averaged per-row
    /// loss differences; covers both data and perturbation noise.
    pub std_error: T,
    /// Standard deviation of the per-repetition estimates over sqrt(n_mc);
    /// perturbation noise only.
    pub mc_std_error: T,
    pub n_mc: usize,
    pub n_rows: usize,
    pub mode: Mode,
    pub loss: LossFunction,
    pub sets: MeasureSets,
    pub seed: u64,
}

/// `|value| <= k * se`: the zero-importance check used throughout the tests.
pub fn within_se<T: crate::Scalar>(value: T, se: T, k: f64) -> bool {
    value.abs() <= T::of(k) * se
}
