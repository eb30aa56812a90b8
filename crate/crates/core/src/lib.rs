//! Decomposition of global feature importance into direct and associative
//! components.
//!
//! The crate is generic over the scalar type (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

pub mod data;
pub mod decompose;
pub mod error;
pub mod importance;
pub mod linalg;
pub mod loss;
pub mod predictor;
pub mod rng;
pub mod sampler;
pub mod scm;
mod scalar;

pub use data::{train_eval_split, DataMatrix, FeatureIndexSet, Split, TargetVector};
pub use error::{Error, Result};
pub use importance::{
    ImportanceEstimate, Measure, MeasureSpec, Mode, EvalOptions, Evaluator, RowEstimate, SageVariant,
};
pub use linalg::Matrix;
pub use loss::LossFunction;
pub use predictor::{empirical_risk, fit_ols, FnPredictor, LinearPredictor, Predictor};
pub use sampler::{
    conditional_params, fit_gaussian, marginalize, ConditionalParams, GaussianModel, Integration,
    MarginalizedPredictor, PerturbationSampler,
};
pub use scalar::Scalar;

pub type DataMatrixF64 = DataMatrix<f64>;
pub type TargetVectorF64 = TargetVector<f64>;
pub type GaussianModelF64 = GaussianModel<f64>;
pub type LinearPredictorF64 = LinearPredictor<f64>;
pub type ImportanceEstimateF64 = ImportanceEstimate<f64>;
