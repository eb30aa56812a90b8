use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Per-observation loss, averaged over evaluation rows by [`crate::empirical_risk`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFunction {
    #[default]
    SquaredError,
    /// Binary cross-entropy on a probability prediction, clipped to `[eps, 1 - eps]`.
    CrossEntropy,
}

/// Clipping bound for cross-entropy predictions.
pub const CROSS_ENTROPY_EPS: f64 = 1e-12;

impl LossFunction {
    #[inline]
    pub fn eval<T: Scalar>(self, y: T, yhat: T) -> T {
        match self {
            LossFunction::SquaredError => (y - yhat) * (y - yhat),
            LossFunction::CrossEntropy => {
                let eps = T::of(CROSS_ENTROPY_EPS).max(T::epsilon());
                let p = yhat.max(eps).min(T::one() - eps);
                -(y * p.ln() + (T::one() - y) * (T::one() - p).ln())
            }
        }
    }
}
