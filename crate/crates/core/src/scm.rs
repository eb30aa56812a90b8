//! Linear-Gaussian structural causal models: ancestral sampling, implied
//! moments, d-separation and the two reference systems.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, FeatureIndexSet, TargetVector};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{fill_normals, mix};
use crate::sampler::GaussianModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Observed and used as a model input.
    Feature,
    /// Supervision node (regression target).
    Target,
    /// Supervision node that differs from the underlying truth.
    Label,
    /// Unobserved; excluded from emitted data.
    Latent,
    /// Observed variable that is not a model input.
    Auxiliary,
}

impl Role {
    pub fn is_supervision(self) -> bool {
        matches!(self, Role::Target | Role::Label)
    }

    pub fn is_observed_variable(self) -> bool {
        matches!(self, Role::Feature | Role::Auxiliary)
    }
}

fn default_noise() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub role: Role,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub coefficient: f64,
}

/// `x_v = sum_p coef(p, v) x_p + noise_std(v) * eps_v`, eps iid standard normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScm {
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

impl LinearScm {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let scm = Self { nodes, edges };
        scm.validate()?;
        Ok(scm)
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.node_index(name).ok_or_else(|| Error::InvalidScm(format!("unknown node '{name}'")))
    }

    pub fn node_names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    /// Parent lists as (parent index, coefficient), per node.
    pub fn parents(&self) -> Result<Vec<Vec<(usize, f64)>>> {
        let mut parents = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let (from, to) = (self.require(&e.from)?, self.require(&e.to)?);
            parents[to].push((from, e.coefficient));
        }
        Ok(parents)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.name.as_str()) {
                return Err(Error::InvalidScm(format!("duplicate node '{}'", n.name)));
            }
            if !(n.noise_std.is_finite() && n.noise_std >= 0.0) {
                return Err(Error::InvalidScm(format!("node '{}' has invalid noise_std {}", n.name, n.noise_std)));
            }
        }
        for e in &self.edges {
            if !e.coefficient.is_finite() {
                return Err(Error::InvalidScm(format!("edge {} -> {} has a non-finite coefficient", e.from, e.to)));
            }
            if e.from == e.to {
                return Err(Error::CyclicGraph(format!("self-loop on '{}'", e.from)));
            }
        }
        let supervision = self.nodes.iter().filter(|n| n.role.is_supervision()).count();
        if supervision != 1 {
            return Err(Error::InvalidScm(format!("expected exactly one target or label node, found {supervision}")));
        }
        if !self.nodes.iter().any(|n| n.role == Role::Feature) {
            return Err(Error::InvalidScm("no feature nodes".into()));
        }
        self.topological_order().map(|_| ())
    }

    /// Kahn's algorithm, ties broken by declaration order.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let parents = self.parents()?;
        let n = self.nodes.len();
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (v, ps) in parents.iter().enumerate() {
            for &(p, _) in ps {
                children[p].push(v);
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() != n {
            let stuck: Vec<&str> = (0..n).filter(|&v| indeg[v] > 0).map(|v| self.nodes[v].name.as_str()).collect();
            return Err(Error::CyclicGraph(format!("cycle among {stuck:?}")));
        }
        Ok(order)
    }

    pub fn supervision_index(&self) -> usize {
        self.nodes.iter().position(|n| n.role.is_supervision()).expect("validated scm has a supervision node")
    }

    /// Node indices of observed variables (features and auxiliaries), in
    /// declaration order; this is the column order of sampled data.
    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].role.is_observed_variable()).collect()
    }

    /// Columns of the observed-variable matrix that are model features.
    pub fn feature_columns(&self) -> FeatureIndexSet {
        self.observed_indices()
            .iter()
            .enumerate()
            .filter(|(_, &v)| self.nodes[v].role == Role::Feature)
            .map(|(c, _)| c)
            .collect()
    }

    /// Loading matrix `M` with `x = M eps`, i.e. `(I - A)^{-1} diag(noise_std)`.
    fn loadings(&self) -> Result<Matrix<f64>> {
        let parents = self.parents()?;
        let n = self.nodes.len();
        let mut m = Matrix::zeros(n, n);
        for v in self.topological_order()? {
            m[(v, v)] = self.nodes[v].noise_std;
            for &(p, coef) in &parents[v] {
                for k in 0..n {
                    m[(v, k)] += coef * m[(p, k)];
                }
            }
        }
        Ok(m)
    }

    /// Closed-form covariance of all nodes, `(I - A)^{-1} D (I - A)^{-T}`.
    pub fn implied_covariance(&self) -> Result<Matrix<f64>> {
        let m = self.loadings()?;
        m.matmul(&m.transpose())
    }

    /// Exact zero-mean Gaussian of the observed variables, in data column order.
    pub fn observed_gaussian<T: Scalar>(&self) -> Result<GaussianModel<T>> {
        let cov = self.implied_covariance()?;
        let obs = self.observed_indices();
        let sel = cov.select(&obs, &obs);
        let cast: Vec<T> = sel.as_slice().iter().map(|&v| T::of(v)).collect();
        GaussianModel::new(vec![T::zero(); obs.len()], Matrix::from_vec(obs.len(), obs.len(), cast)?)
    }

    /// d-separation of node sets `x` and `y` given `z` (reachability /
    /// Bayes-ball). Nodes in `z` are never separated-from themselves: an
    /// overlap of `x` or `y` with `z` is ignored for that node.
    pub fn d_separated(&self, x: &[usize], z: &[usize], y: &[usize]) -> Result<bool> {
        let parents = self.parents()?;
        let n = self.nodes.len();
        for &v in x.iter().chain(z).chain(y) {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, len: n });
            }
        }
        let zset: HashSet<usize> = z.iter().copied().collect();
        let yset: HashSet<usize> = y.iter().copied().filter(|v| !zset.contains(v)).collect();
        let mut children = vec![Vec::new(); n];
        for (v, ps) in parents.iter().enumerate() {
            for &(p, _) in ps {
                children[p].push(v);
            }
        }
        // Ancestors of z (including z) decide whether colliders open.
        let mut anc_z: HashSet<usize> = HashSet::new();
        let mut stack: Vec<usize> = z.to_vec();
        while let Some(v) = stack.pop() {
            if anc_z.insert(v) {
                stack.extend(parents[v].iter().map(|&(p, _)| p));
            }
        }
        // (node, arrived_from_child): true = travelling up, false = down.
        let mut visited: HashSet<(usize, bool)> = HashSet::new();
        let mut queue: VecDeque<(usize, bool)> =
            x.iter().copied().filter(|v| !zset.contains(v)).map(|v| (v, true)).collect();
        while let Some((v, up)) = queue.pop_front() {
            if !visited.insert((v, up)) {
                continue;
            }
            let observed = zset.contains(&v);
            if !observed && yset.contains(&v) {
                return Ok(false);
            }
            if up {
                if !observed {
                    queue.extend(parents[v].iter().map(|&(p, _)| (p, true)));
                    queue.extend(children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !observed {
                    queue.extend(children[v].iter().map(|&c| (c, false)));
                }
                if anc_z.contains(&v) {
                    queue.extend(parents[v].iter().map(|&(p, _)| (p, true)));
                }
            }
        }
        Ok(true)
    }

    /// [`LinearScm::d_separated`] with node names.
    pub fn d_separated_by_name<S: AsRef<str>>(&self, x: &[S], z: &[S], y: &[S]) -> Result<bool> {
        let idx = |names: &[S]| names.iter().map(|s| self.require(s.as_ref())).collect::<Result<Vec<_>>>();
        self.d_separated(&idx(x)?, &idx(z)?, &idx(y)?)
    }

    /// Statements `supervision ⫫ J | C` over observed variables, for singleton
    /// J and contexts C in {∅, singletons, O \ J, O \ (J u {i})}.
    pub fn independence_statements(&self) -> Result<Vec<IndependenceStatement>> {
        let obs = self.observed_indices();
        let y = self.supervision_index();
        let name = |v: usize| self.nodes[v].name.clone();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for &j in &obs {
            let others: Vec<usize> = obs.iter().copied().filter(|&v| v != j).collect();
            let mut contexts: Vec<Vec<usize>> = vec![Vec::new(), others.clone()];
            for &i in &others {
                contexts.push(vec![i]);
                contexts.push(others.iter().copied().filter(|&v| v != i).collect());
            }
            for c in contexts {
                if !seen.insert((j, c.clone())) {
                    continue;
                }
                let holds = self.d_separated(&[j], &c, &[y])?;
                out.push(IndependenceStatement {
                    j: vec![name(j)],
                    c: c.iter().map(|&v| name(v)).collect(),
                    holds,
                });
            }
        }
        Ok(out)
    }
}

/// Whether the supervision node is independent of `j` given `c`, as decided
/// by d-separation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceStatement {
    pub j: Vec<String>,
    pub c: Vec<String>,
    pub holds: bool,
}

/// Data drawn from an SCM.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmSample<T> {
    /// Observed variables (features and auxiliaries).
    pub data: DataMatrix<T>,
    /// Columns of `data` that are model features.
    pub feature_columns: FeatureIndexSet,
    pub target: TargetVector<T>,
    pub target_name: String,
}

impl<T: Scalar> ScmSample<T> {
    /// The model-input columns only.
    pub fn features(&self) -> Result<DataMatrix<T>> {
        self.data.select_columns(&self.feature_columns)
    }
}

/// n x (all nodes) ancestral sample, node declaration order.
pub fn sample_nodes<T: Scalar>(scm: &LinearScm, n: usize, seed: u64) -> Result<Matrix<T>> {
    scm.validate()?;
    let parents = scm.parents()?;
    let order = scm.topological_order()?;
    let k = scm.nodes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x5C3_5A3F]));
    let mut eps = vec![0.0; k];
    let mut row = vec![0.0f64; k];
    let mut out = Matrix::zeros(n, k);
    for i in 0..n {
        fill_normals(&mut rng, &mut eps);
        for &v in &order {
            let mut x = scm.nodes[v].noise_std * eps[v];
            for &(p, coef) in &parents[v] {
                x += coef * row[p];
            }
            row[v] = x;
        }
        for (o, &x) in out.row_mut(i).iter_mut().zip(&row) {
            *o = T::of(x);
        }
    }
    Ok(out)
}

/// Observed-variable matrix and supervision vector; deterministic per seed.
pub fn sample_scm<T: Scalar>(scm: &LinearScm, n: usize, seed: u64) -> Result<ScmSample<T>> {
    let all = sample_nodes::<T>(scm, n, seed)?;
    let obs = scm.observed_indices();
    let y = scm.supervision_index();
    let rows: Vec<usize> = (0..n).collect();
    let values = all.select(&rows, &obs);
    let names = obs.iter().map(|&v| scm.nodes[v].name.clone()).collect();
    Ok(ScmSample {
        data: DataMatrix::new(values, names)?,
        feature_columns: scm.feature_columns(),
        target: TargetVector::new(all.column(y))?,
        target_name: scm.nodes[y].name.clone(),
    })
}

fn node(name: &str, role: Role, noise_std: f64) -> Node {
    Node { name: name.into(), role, noise_std }
}

fn edges(list: &[(&str, &str)]) -> Vec<Edge> {
    list.iter().map(|&(f, t)| Edge { from: f.into(), to: t.into(), coefficient: 1.0 }).collect()
}

/// Biomarker B, cycling C, PSA P, true outcome Y and historical label L;
/// the model sees B and C, PSA only reaches the label.
pub fn biomarker_scm() -> LinearScm {
    LinearScm::new(
        vec![
            node("B", Role::Feature, 1.0),
            node("C", Role::Feature, 1.0),
            node("P", Role::Auxiliary, 1.0),
            node("Y", Role::Latent, 0.0),
            node("L", Role::Label, 1.0),
        ],
        edges(&[("B", "Y"), ("B", "L"), ("P", "L"), ("C", "P")]),
    )
    .expect("biomarker scm is valid")
}

/// Hypothetical census-income system: age acts only through its mediators,
/// race and sex act directly and through mediators.
pub fn census_scm() -> LinearScm {
    let names = [
        "sex",
        "age",
        "race",
        "hours_pw",
        "nr_educ",
        "work_class",
        "occupation",
        "capital_gain",
        "marriage_status",
        "relationship",
    ];
    let mut nodes: Vec<Node> = names.iter().map(|n| node(n, Role::Feature, 1.0)).collect();
    nodes.push(node("income", Role::Target, 1.0));
    LinearScm::new(
        nodes,
        edges(&[
            ("sex", "relationship"),
            ("sex", "work_class"),
            ("age", "hours_pw"),
            ("age", "capital_gain"),
            ("age", "nr_educ"),
            ("race", "marriage_status"),
            ("race", "occupation"),
            ("race", "income"),
            ("sex", "income"),
            ("hours_pw", "income"),
            ("nr_educ", "income"),
            ("work_class", "income"),
            ("occupation", "income"),
            ("capital_gain", "income"),
            ("marriage_status", "income"),
            ("relationship", "income"),
        ]),
    )
    .expect("census scm is valid")
}

/// Name -> column lookup for an SCM's observed variables.
pub fn observed_columns(scm: &LinearScm) -> HashMap<String, usize> {
    scm.observed_indices().iter().enumerate().map(|(c, &v)| (scm.nodes[v].name.clone(), c)).collect()
}
