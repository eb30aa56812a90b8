//! Config-driven orchestration: data -> split -> fit -> gaussian -> measures
//! -> decompositions -> bundle.

use std::fmt::Write as _;
use std::path::Path;

use dedact::decompose::{
    fast_decompose_ai, fast_decompose_pfi, fast_decompose_pfi_ordered, fast_decompose_sage, shapley_decompose_pfi,
    shapley_decompose_sage, DecompositionTable, DEFAULT_SAGE_ORDERS,
};
use dedact::scm::{biomarker_scm, census_scm, sample_scm, LinearScm};
use dedact::{
    fit_gaussian, fit_ols, train_eval_split, DataMatrix, EvalOptions, Evaluator, FeatureIndexSet, GaussianModel,
    ImportanceEstimate, LinearPredictor, MeasureSpec, TargetVector,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{
    DataSource, DecompositionBlock, EvalOverrides, Format, GaussianSource, MeasureBlock, MeasureKind, MethodKind,
    RunConfig, TargetKind,
};
use crate::error::{CliError, Result};

pub const IMPORTANCE_TABLE: &str = "importance";
pub const METADATA_FILE: &str = "metadata.json";
pub const CONFIG_ECHO_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub interest: Vec<String>,
    pub baseline: Vec<String>,
    pub aux: Vec<String>,
    pub estimate: ImportanceEstimate<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDecomposition {
    pub name: String,
    pub kind: TargetKind,
    pub table: DecompositionTable<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub support: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLog {
    pub name: String,
    pub seed: u64,
    pub n_mc: usize,
    /// Sampled orders over column indices (SAGE or Shapley), for replay.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orders: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    /// SHA-256 of the input bytes (CSV) or of the SCM document plus n and seed.
    pub input_hash: String,
    /// SHA-256 of the canonical TOML echo of the config.
    pub config_hash: String,
    pub columns: Vec<String>,
    pub target: String,
    pub n_fit: usize,
    pub n_eval: usize,
    pub model: ModelSummary,
    pub blocks: Vec<BlockLog>,
    /// Table stems; each is written as `<stem>.csv` and/or `<stem>.json`.
    pub tables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub metadata: Metadata,
    pub importance: Vec<NamedEstimate>,
    pub decompositions: Vec<NamedDecomposition>,
}

impl ResultBundle {
    pub fn estimate(&self, name: &str) -> Option<&ImportanceEstimate<f64>> {
        self.importance.iter().find(|e| e.name == name).map(|e| &e.estimate)
    }

    pub fn decomposition(&self, name: &str) -> Option<&DecompositionTable<f64>> {
        self.decompositions.iter().find(|d| d.name == name).map(|d| &d.table)
    }
}

/// Loaded data with provenance.
pub struct Dataset {
    pub data: DataMatrix<f64>,
    pub target: TargetVector<f64>,
    pub target_name: String,
    /// Default model support.
    pub features: Vec<String>,
    pub scm: Option<LinearScm>,
    pub input_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn builtin_scm(name: &str) -> Result<LinearScm> {
    match name {
        "biomarker" => Ok(biomarker_scm()),
        "census" => Ok(census_scm()),
        other => Err(CliError::Config(format!("unknown built-in SCM '{other}' (expected biomarker or census)"))),
    }
}

pub fn load_scm_file(path: &Path) -> Result<LinearScm> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let scm: LinearScm = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    scm.validate().map_err(CliError::block("scm"))?;
    Ok(scm)
}

fn simulate(scm: LinearScm, n: usize, seed: u64) -> Result<Dataset> {
    let s = sample_scm::<f64>(&scm, n, seed).map_err(CliError::block("data"))?;
    let doc = serde_json::to_vec(&scm).expect("scm serializes");
    let mut h = doc;
    h.extend_from_slice(format!("|n={n}|seed={seed}").as_bytes());
    let names = s.data.column_names();
    Ok(Dataset {
        features: s.feature_columns.iter().map(|j| names[j].clone()).collect(),
        data: s.data,
        target: s.target,
        target_name: s.target_name,
        scm: Some(scm),
        input_hash: sha256_hex(&h),
    })
}

pub fn load_data(source: &DataSource, global_seed: u64) -> Result<Dataset> {
    match source {
        DataSource::Csv { path, target } => {
            let bytes = std::fs::read(path).map_err(CliError::io(path))?;
            let (data, y) = crate::ingest::parse_csv(&bytes, target)?;
            Ok(Dataset {
                features: data.column_names().to_vec(),
                data,
                target: y,
                target_name: target.clone(),
                scm: None,
                input_hash: sha256_hex(&bytes),
            })
        }
        DataSource::Builtin { name, n, seed } => simulate(builtin_scm(name)?, *n, seed.unwrap_or(global_seed)),
        DataSource::ScmFile { path, n, seed } => simulate(load_scm_file(path)?, *n, seed.unwrap_or(global_seed)),
    }
}

fn resolve(data: &DataMatrix<f64>, block: &str, names: &[String]) -> Result<FeatureIndexSet> {
    data.index_set(names).map_err(|e| CliError::Config(format!("{block}: {e}")))
}

fn resolve_one(data: &DataMatrix<f64>, block: &str, name: &str) -> Result<usize> {
    data.column_index(name).ok_or_else(|| CliError::Config(format!("{block}: unknown column '{name}'")))
}

fn labels(data: &DataMatrix<f64>, set: &FeatureIndexSet) -> Vec<String> {
    set.iter().map(|j| data.column_names()[j].clone()).collect()
}

fn options(global_seed: u64, o: &EvalOverrides) -> EvalOptions {
    let mut opts = EvalOptions::default().with_seed(o.seed.unwrap_or(global_seed)).with_loss(o.loss);
    if let Some(n) = o.n_mc {
        opts.n_mc = n;
    }
    if let Some(n) = o.n_integration {
        opts.n_integration = n;
    }
    opts
}

fn measure_spec(data: &DataMatrix<f64>, m: &MeasureBlock, opts: EvalOptions) -> Result<MeasureSpec> {
    let d = data.n_cols();
    let interest = resolve(data, &m.name, &m.interest)?;
    let baseline = resolve(data, &m.name, &m.baseline)?;
    let aux = resolve(data, &m.name, &m.aux)?;
    let single = || -> Result<usize> {
        match interest.indices() {
            [j] => Ok(*j),
            _ => Err(CliError::Config(format!("{}: {:?} needs exactly one interest column", m.name, m.measure))),
        }
    };
    let spec = match m.measure {
        MeasureKind::Direct => MeasureSpec::di(interest, baseline),
        MeasureKind::Associative => MeasureSpec::ai(interest, baseline),
        MeasureKind::DirectFrom => MeasureSpec::di_from(interest, baseline, aux),
        MeasureKind::AssociativeVia => MeasureSpec::ai_via(interest, baseline, aux),
        MeasureKind::Pfi => MeasureSpec::pfi(single()?, d),
        MeasureKind::ConditionalFi => MeasureSpec::conditional_fi(single()?, d),
    };
    Ok(spec.with_mode(m.mode).with_options(opts))
}

fn decompose(
    eval: &Evaluator<'_, f64>,
    block: &DecompositionBlock,
    support: &FeatureIndexSet,
    opts: EvalOptions,
) -> Result<DecompositionTable<f64>> {
    let data = eval.data();
    let name = &block.name;
    let all = FeatureIndexSet::full(data.n_cols());
    let k = resolve_one(data, name, &block.target)?;
    let set_or = |v: &Option<Vec<String>>, default: &FeatureIndexSet| match v {
        Some(names) => resolve(data, name, names),
        None => Ok(default.clone()),
    };
    let n_sage = block.n_sage_orders.unwrap_or(DEFAULT_SAGE_ORDERS);
    let r = match (block.kind, block.method) {
        (TargetKind::Pfi, MethodKind::Fast) => fast_decompose_pfi(eval, k, &set_or(&block.sources, &all)?, opts),
        (TargetKind::Pfi, MethodKind::FastOrdered) => {
            let order = block.order.as_deref().unwrap_or_default();
            let idx = order.iter().map(|s| resolve_one(data, name, s)).collect::<Result<Vec<_>>>()?;
            fast_decompose_pfi_ordered(eval, k, &idx, opts)
        }
        (TargetKind::Pfi, MethodKind::Shapley) => {
            let players = set_or(if block.players.is_some() { &block.players } else { &block.sources }, &all)?;
            shapley_decompose_pfi(eval, k, &players, block.solver, opts)
        }
        (TargetKind::Ai, MethodKind::Fast) => {
            let context = resolve(data, name, &block.context)?;
            fast_decompose_ai(eval, k, &context, &set_or(&block.pathways, support)?, opts)
        }
        (TargetKind::Sage, MethodKind::Fast) => fast_decompose_sage(
            eval,
            k,
            &set_or(&block.pathways, support)?,
            &set_or(&block.players, &all)?,
            n_sage,
            opts,
        ),
        (TargetKind::Sage, MethodKind::Shapley) => shapley_decompose_sage(
            eval,
            k,
            &set_or(&block.pathways, support)?,
            &set_or(&block.players, &all)?,
            n_sage,
            block.solver,
            opts,
        ),
        _ => return Err(CliError::Config(format!("{name}: unsupported kind/method combination"))),
    };
    r.map_err(CliError::block(name.clone()))
}

/// Executes the config and writes the bundle if an output section is present.
pub fn run(config: &RunConfig) -> Result<ResultBundle> {
    config.check()?;
    let bundle = compute(config)?;
    if let Some(out) = &config.output {
        write_bundle(&bundle, &out.directory, &out.formats)?;
    }
    Ok(bundle)
}

/// Executes the config without touching the file system (beyond reading input).
pub fn compute(config: &RunConfig) -> Result<ResultBundle> {
    let ds = load_data(&config.data, config.seed)?;
    let split = train_eval_split(&ds.data, &ds.target, config.split, config.seed).map_err(CliError::block("split"))?;
    let support_names = config.model.support.clone().unwrap_or_else(|| ds.features.clone());
    let support = resolve(&ds.data, "model", &support_names)?;
    let model: LinearPredictor<f64> =
        fit_ols(&split.fit_data, &split.fit_target, &support).map_err(CliError::block("model"))?;
    let gaussian: GaussianModel<f64> = match config.gaussian {
        GaussianSource::Fitted => fit_gaussian(&split.fit_data).map_err(CliError::block("gaussian"))?,
        GaussianSource::Exact => match &ds.scm {
            Some(scm) => scm.observed_gaussian().map_err(CliError::block("gaussian"))?,
            None => return Err(CliError::Config("exact gaussian requires an SCM data source".into())),
        },
    };
    let eval = Evaluator::new(&split.eval_data, &split.eval_target, &model, &gaussian)
        .map_err(CliError::block("evaluator"))?;

    let mut blocks = Vec::new();
    let mut importance = Vec::new();
    for m in &config.measures {
        let opts = options(config.seed, &m.eval);
        let spec = measure_spec(&split.eval_data, m, opts)?;
        let estimate = eval.evaluate(&spec).map_err(CliError::block(m.name.clone()))?;
        blocks.push(BlockLog { name: m.name.clone(), seed: opts.seed, n_mc: opts.n_mc, orders: Vec::new() });
        importance.push(NamedEstimate {
            name: m.name.clone(),
            interest: labels(&split.eval_data, &spec.interest),
            baseline: labels(&split.eval_data, &spec.baseline),
            aux: labels(&split.eval_data, &spec.aux),
            estimate,
        });
    }
    let mut decompositions = Vec::new();
    for b in &config.decompositions {
        let opts = options(config.seed, &b.eval);
        let table = decompose(&eval, b, &support, opts)?;
        blocks.push(BlockLog { name: b.name.clone(), seed: opts.seed, n_mc: opts.n_mc, orders: table.orders.clone() });
        decompositions.push(NamedDecomposition { name: b.name.clone(), kind: b.kind, table });
    }

    let mut tables = Vec::new();
    if !importance.is_empty() {
        tables.push(IMPORTANCE_TABLE.to_string());
    }
    tables.extend(decompositions.iter().map(|d| decomposition_stem(&d.name)));
    let config_toml = config.to_toml()?;
    Ok(ResultBundle {
        metadata: Metadata {
            tool: "dedact".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config: config.clone(),
            input_hash: ds.input_hash,
            config_hash: sha256_hex(config_toml.as_bytes()),
            columns: ds.data.column_names().to_vec(),
            target: ds.target_name,
            n_fit: split.fit_data.n_rows(),
            n_eval: split.eval_data.n_rows(),
            model: ModelSummary { support: support_names, weights: model.weights.clone(), intercept: model.intercept },
            blocks,
            tables,
        },
        importance,
        decompositions,
    })
}

pub fn decomposition_stem(name: &str) -> String {
    format!("decomposition_{name}")
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn join(v: &[String]) -> String {
    v.join(";")
}

pub const IMPORTANCE_HEADER: [&str; 12] = [
    "name",
    "measure",
    "interest",
    "baseline",
    "aux",
    "mode",
    "value",
    "std_error",
    "mc_std_error",
    "n_mc",
    "n_rows",
    "seed",
];

pub fn importance_rows(rows: &[NamedEstimate]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let e = &r.estimate;
            vec![
                r.name.clone(),
                enum_label(&e.sets.measure),
                join(&r.interest),
                join(&r.baseline),
                join(&r.aux),
                enum_label(&e.mode),
                fmt_f64(e.value),
                fmt_f64(e.std_error),
                fmt_f64(e.mc_std_error),
                e.n_mc.to_string(),
                e.n_rows.to_string(),
                e.seed.to_string(),
            ]
        })
        .collect()
}

pub const DECOMPOSITION_HEADER: [&str; 7] = ["row", "target", "context", "label", "value", "std_error", "method"];

pub fn decomposition_rows(d: &NamedDecomposition, columns: &[String]) -> Vec<Vec<String>> {
    let t = &d.table;
    let method = serde_json::to_string(&t.method).expect("method serializes").trim_matches('"').to_string();
    let row = |kind: &str, context: &str, label: &str, v: f64, se: f64| {
        vec![
            kind.to_string(),
            t.target_label.clone(),
            context.to_string(),
            label.to_string(),
            fmt_f64(v),
            fmt_f64(se),
            method.clone(),
        ]
    };
    let mut out = vec![row("total", "", &t.target_label, t.total.value, t.total.std_error)];
    out.extend(t.components.iter().map(|c| row("component", "", &c.label, c.value, c.std_error)));
    out.push(row("remainder", "", "", t.remainder, t.remainder_std_error));
    for cr in &t.contexts {
        let ctx = cr.context.iter().map(|j| columns[j].as_str()).collect::<Vec<_>>().join(";");
        out.push(row("context_surplus", &ctx, &t.target_label, cr.surplus, cr.surplus_std_error));
        out.extend(cr.components.iter().map(|c| row("context_component", &ctx, &c.label, c.value, c.std_error)));
    }
    out
}

fn enum_label<S: Serialize>(v: &S) -> String {
    serde_json::to_string(v).expect("enum serializes").trim_matches('"').to_string()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(CliError::io(path))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("bundle serializes");
    s.push('\n');
    std::fs::write(path, s).map_err(CliError::io(path))
}

/// One file per table plus `metadata.json` and the `config.toml` echo.
pub fn write_bundle(bundle: &ResultBundle, dir: &Path, formats: &[Format]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let csv = formats.contains(&Format::Csv);
    let json = formats.contains(&Format::Json);
    if !bundle.importance.is_empty() {
        if csv {
            write_csv(&dir.join(format!("{IMPORTANCE_TABLE}.csv")), &IMPORTANCE_HEADER, &importance_rows(&bundle.importance))?;
        }
        if json {
            write_json(&dir.join(format!("{IMPORTANCE_TABLE}.json")), &bundle.importance)?;
        }
    }
    for d in &bundle.decompositions {
        let stem = decomposition_stem(&d.name);
        if csv {
            let rows = decomposition_rows(d, &bundle.metadata.columns);
            write_csv(&dir.join(format!("{stem}.csv")), &DECOMPOSITION_HEADER, &rows)?;
        }
        if json {
            write_json(&dir.join(format!("{stem}.json")), d)?;
        }
    }
    write_json(&dir.join(METADATA_FILE), &bundle.metadata)?;
    let echo = bundle.metadata.config.to_toml()?;
    std::fs::write(dir.join(CONFIG_ECHO_FILE), echo).map_err(CliError::io(dir.join(CONFIG_ECHO_FILE)))
}
