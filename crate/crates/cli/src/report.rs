//! Pretty-printing of a written bundle.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::run::{
    decomposition_rows, decomposition_stem, importance_rows, Metadata, ResultBundle, NamedDecomposition, NamedEstimate, DECOMPOSITION_HEADER,
    IMPORTANCE_HEADER, IMPORTANCE_TABLE, METADATA_FILE,
};

type Table = (Vec<String>, Vec<Vec<String>>);

fn read_csv(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header = r
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((header, rows))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_table(dir: &Path, stem: &str, meta: &Metadata) -> Result<Table> {
    let csv = dir.join(format!("{stem}.csv"));
    if csv.exists() {
        return read_csv(&csv);
    }
    let json = dir.join(format!("{stem}.json"));
    if stem == IMPORTANCE_TABLE {
        let rows: Vec<NamedEstimate> = read_json(&json)?;
        Ok((owned(&IMPORTANCE_HEADER), importance_rows(&rows)))
    } else {
        let d: NamedDecomposition = read_json(&json)?;
        Ok((owned(&DECOMPOSITION_HEADER), decomposition_rows(&d, &meta.columns)))
    }
}

fn pretty_cell(s: &str) -> String {
    match s.parse::<f64>() {
        Ok(v) if s.contains(['.', 'e', 'E']) => {
            if v == 0.0 || (v.abs() >= 1e-3 && v.abs() < 1e6) {
                format!("{v:.4}")
            } else {
                format!("{v:.3e}")
            }
        }
        _ => s.to_string(),
    }
}

fn render(out: &mut String, title: &str, (header, rows): &Table, skip_contexts: bool) {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .filter(|r| !(skip_contexts && r.first().is_some_and(|k| k.starts_with("context"))))
        .map(|r| r.iter().map(|c| pretty_cell(c)).collect())
        .collect();
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "== {title} ==");
    let _ = writeln!(out, "{}", line(header));
    for r in &rows {
        let _ = writeln!(out, "{}", line(r));
    }
    let _ = writeln!(out);
}

fn owned(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

fn banner(out: &mut String, meta: &Metadata) {
    let _ = writeln!(
        out,
        "dedact {} | seed {} | target {} | n_fit {} | n_eval {} | input {}",
        meta.version,
        meta.seed,
        meta.target,
        meta.n_fit,
        meta.n_eval,
        &meta.input_hash[..12.min(meta.input_hash.len())]
    );
    let _ = writeln!(out);
}

/// Renders every table of the bundle in `dir`; per-context rows are shown
/// only when `contexts` is set.
pub fn report(dir: &Path, contexts: bool) -> Result<String> {
    let meta: Metadata = read_json(&dir.join(METADATA_FILE))?;
    let mut out = String::new();
    banner(&mut out, &meta);
    for stem in &meta.tables {
        let table = load_table(dir, stem, &meta)?;
        render(&mut out, stem, &table, !contexts);
    }
    Ok(out)
}

/// Same layout as [`report`] for an in-memory bundle.
pub fn render_bundle(bundle: &ResultBundle, contexts: bool) -> String {
    let mut out = String::new();
    banner(&mut out, &bundle.metadata);
    if !bundle.importance.is_empty() {
        let t = (owned(&IMPORTANCE_HEADER), importance_rows(&bundle.importance));
        render(&mut out, IMPORTANCE_TABLE, &t, !contexts);
    }
    for d in &bundle.decompositions {
        let t = (owned(&DECOMPOSITION_HEADER), decomposition_rows(d, &bundle.metadata.columns));
        render(&mut out, &decomposition_stem(&d.name), &t, !contexts);
    }
    out
}
