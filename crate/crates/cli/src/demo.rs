//! The two reference experiments as preset configs.

use dedact::decompose::{Solver, DEFAULT_DECOMPOSITION_ORDERS, DEFAULT_SAGE_ORDERS};
use dedact::scm::census_scm;

use crate::config::{
    DataSource, DecompositionBlock, EvalOverrides, MeasureBlock, MeasureKind, MethodKind, RunConfig, TargetKind,
    DEFAULT_SPLIT,
};
use crate::error::Result;
use crate::run::{compute, ResultBundle};

pub const DEFAULT_DEMO_ROWS: usize = 20_000;
/// Orders for the census PFI decompositions.
pub const DEFAULT_PFI_ORDERS: usize = 50;
/// Variables whose SAGE values are decomposed in the census demo.
pub const CENSUS_SAGE_VARIABLES: [&str; 3] = ["race", "sex", "age"];

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn measure(name: &str, kind: MeasureKind, interest: &[&str], baseline: &[&str], aux: &[&str]) -> MeasureBlock {
    MeasureBlock {
        name: name.into(),
        measure: kind,
        interest: names(interest),
        baseline: names(baseline),
        aux: names(aux),
        mode: Default::default(),
        eval: EvalOverrides::default(),
    }
}

fn decomposition(name: &str, kind: TargetKind, method: MethodKind, target: &str) -> DecompositionBlock {
    DecompositionBlock {
        name: name.into(),
        kind,
        method,
        target: target.into(),
        sources: None,
        order: None,
        pathways: None,
        players: None,
        context: Vec::new(),
        solver: Solver::default(),
        n_sage_orders: None,
        eval: EvalOverrides::default(),
    }
}

fn base(name: &str, seed: u64, n: usize) -> RunConfig {
    RunConfig {
        seed,
        split: DEFAULT_SPLIT,
        gaussian: Default::default(),
        data: DataSource::Builtin { name: name.into(), n, seed: None },
        model: Default::default(),
        measures: Vec::new(),
        decompositions: Vec::new(),
        output: None,
    }
}

/// Biomarker B, cycling C, PSA P; the model reads B and C.
pub fn biomarker_demo_config(seed: u64, n: usize) -> RunConfig {
    use MeasureKind::*;
    let mut cfg = base("biomarker", seed, n);
    cfg.measures = vec![
        measure("ai_psa", Associative, &["P"], &[], &[]),
        measure("ai_psa_via_cycling", AssociativeVia, &["P"], &[], &["C"]),
        measure("ai_psa_via_biomarker", AssociativeVia, &["P"], &[], &["B"]),
        measure("pfi_cycling", Pfi, &["C"], &[], &[]),
        measure("pfi_biomarker", Pfi, &["B"], &[], &[]),
        measure("pfi_cycling_from_psa", DirectFrom, &["C"], &["B", "P"], &["P"]),
    ];
    cfg.decompositions = vec![
        decomposition("ai_psa_pathways", TargetKind::Ai, MethodKind::Fast, "P"),
        decomposition("pfi_cycling_sources", TargetKind::Pfi, MethodKind::Fast, "C"),
        decomposition("pfi_cycling_shapley", TargetKind::Pfi, MethodKind::Shapley, "C"),
        decomposition("pfi_biomarker_shapley", TargetKind::Pfi, MethodKind::Shapley, "B"),
    ];
    for v in ["P", "B", "C"] {
        let mut d = decomposition(&format!("sage_{v}"), TargetKind::Sage, MethodKind::Shapley, v);
        d.n_sage_orders = Some(DEFAULT_SAGE_ORDERS);
        cfg.decompositions.push(d);
    }
    cfg
}

/// Census system with every non-income node as a feature.
pub fn census_demo_config(
    seed: u64,
    n: usize,
    n_sage_orders: usize,
    n_decomp_orders: usize,
    n_pfi_orders: usize,
) -> RunConfig {
    let mut cfg = base("census", seed, n);
    let scm = census_scm();
    let features: Vec<String> =
        scm.feature_columns().iter().map(|j| scm.nodes[scm.observed_indices()[j]].name.clone()).collect();
    for f in &features {
        cfg.measures.push(measure(&format!("pfi_{f}"), MeasureKind::Pfi, &[f], &[], &[]));
    }
    for v in CENSUS_SAGE_VARIABLES {
        let mut d = decomposition(&format!("sage_{v}"), TargetKind::Sage, MethodKind::Shapley, v);
        d.n_sage_orders = Some(n_sage_orders);
        d.solver = Solver::Auto { n_orders: n_decomp_orders };
        cfg.decompositions.push(d);
    }
    for f in &features {
        let mut d = decomposition(&format!("pfi_{f}_shapley"), TargetKind::Pfi, MethodKind::Shapley, f);
        d.solver = Solver::Sampled { n_orders: n_pfi_orders };
        cfg.decompositions.push(d);
    }
    cfg
}

pub fn run_biomarker_demo(seed: u64, n: usize) -> Result<ResultBundle> {
    compute(&biomarker_demo_config(seed, n))
}

pub fn run_census_demo(seed: u64, n: usize, n_sage_orders: usize, n_decomp_orders: usize) -> Result<ResultBundle> {
    compute(&census_demo_config(seed, n, n_sage_orders, n_decomp_orders, DEFAULT_PFI_ORDERS))
}

/// Census demo with the default 60 SAGE and 25 decomposition orders.
pub fn run_census_demo_default(seed: u64, n: usize) -> Result<ResultBundle> {
    run_census_demo(seed, n, DEFAULT_SAGE_ORDERS, DEFAULT_DECOMPOSITION_ORDERS)
}
