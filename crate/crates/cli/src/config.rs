//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use dedact::decompose::Solver;
use dedact::{LossFunction, Mode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SPLIT: f64 = 0.5;

fn default_split() -> f64 {
    DEFAULT_SPLIT
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; every block defaults to it so measures share random numbers.
    pub seed: u64,
    /// Fraction of rows used to fit the model and the Gaussian.
    #[serde(default = "default_split")]
    pub split: f64,
    #[serde(default, skip_serializing_if = "is_default")]
    pub gaussian: GaussianSource,
    pub data: DataSource,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measures: Vec<MeasureBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decompositions: Vec<DecompositionBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        target: String,
    },
    /// A built-in system: `biomarker` or `census`.
    Builtin {
        name: String,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// A user-defined linear SCM document (TOML).
    ScmFile {
        path: PathBuf,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianSource {
    /// Moments estimated on the fitting rows.
    #[default]
    Fitted,
    /// Exact moments implied by the SCM (SCM sources only).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Ols,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub kind: ModelKind,
    /// Columns the model reads; defaults to the SCM feature nodes, or every
    /// column for CSV input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Direct,
    Associative,
    DirectFrom,
    AssociativeVia,
    /// Direct importance of `interest` against everything else.
    Pfi,
    /// Associative importance of `interest` given everything else.
    ConditionalFi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureBlock {
    pub name: String,
    pub measure: MeasureKind,
    #[serde(default)]
    pub interest: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baseline: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aux: Vec<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub mode: Mode,
    #[serde(flatten)]
    pub eval: EvalOverrides,
}

/// Per-block overrides of the evaluation options.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalOverrides {
    #[serde(default, skip_serializing_if = "is_default")]
    pub loss: LossFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mc: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_integration: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// PFI of feature `target`, split over source variables.
    Pfi,
    /// AI of variable `target` in a fixed context, split over pathways.
    Ai,
    /// Conditional SAGE value of variable `target`, split over pathways.
    Sage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Fast,
    FastOrdered,
    Shapley,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionBlock {
    pub name: String,
    pub kind: TargetKind,
    pub method: MethodKind,
    pub target: String,
    /// PFI sources (fast) or players (Shapley); defaults to every column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<String>>,
    /// Source order for `fast_ordered`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
    /// Pathway features; defaults to the model support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathways: Option<Vec<String>>,
    /// SAGE players; defaults to every column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub players: Option<Vec<String>>,
    /// Fixed context for `ai`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub context: Vec<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub solver: Solver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sage_orders: Option<usize>,
    #[serde(flatten)]
    pub eval: EvalOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Structural checks that do not need the data.
    pub fn check(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(CliError::Config(format!("split must lie in (0, 1), got {}", self.split)));
        }
        if self.gaussian == GaussianSource::Exact && matches!(self.data, DataSource::Csv { .. }) {
            return Err(CliError::Config("exact gaussian requires an SCM data source".into()));
        }
        let mut names: Vec<&str> = self.measures.iter().map(|m| m.name.as_str()).collect();
        names.extend(self.decompositions.iter().map(|d| d.name.as_str()));
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(CliError::Config(format!("block name '{n}' must be non-empty [A-Za-z0-9_-]")));
            }
            if names[..i].contains(n) {
                return Err(CliError::Config(format!("duplicate block name '{n}'")));
            }
        }
        for d in &self.decompositions {
            let ok = matches!(
                (d.kind, d.method),
                (TargetKind::Pfi, _) | (TargetKind::Ai, MethodKind::Fast) | (TargetKind::Sage, MethodKind::Fast | MethodKind::Shapley)
            );
            if !ok {
                return Err(CliError::Config(format!("{}: unsupported kind/method combination", d.name)));
            }
            if d.method == MethodKind::FastOrdered && d.order.is_none() {
                return Err(CliError::Config(format!("{}: fast_ordered needs an order", d.name)));
            }
        }
        if let Some(o) = &self.output {
            if o.formats.is_empty() {
                return Err(CliError::Config("output.formats must not be empty".into()));
            }
        }
        Ok(())
    }
}
