//! Seeded generators for the benchmark problem families.
//!
//! Every generator is a pure function of its parameters and seed. Cut
//! problems carry their weighted graph so cut values can be computed; the
//! stored model is normalized with the family default and `scale` records the
//! divisor, so `scale * energy` is the raw objective.

use std::collections::BTreeSet;
use std::path::Path;

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::format::InstanceDocument;
use crate::ising::{qubo_to_ising, IsingModel, Normalization, QuboModel};
use crate::rng;

/// Edge density used for weighted Maxcut simulations.
pub const WMAXCUT_EDGE_DENSITY: f64 = 0.7;
/// Edge density used for maximum independent set simulations.
pub const MIS_EDGE_DENSITY: f64 = 0.4;
/// Clause-to-variable ratio near the 3-SAT hardness peak.
pub const MAX3SAT_CLAUSE_RATIO: f64 = 4.16;
/// Edge penalty in the independent-set QUBO; any value above 1 is valid.
pub const MIS_PENALTY: f64 = 2.0;
/// Largest integer weight of fully connected weighted Maxcut.
pub const FC_WEIGHT_MAX: u32 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes];
        for &(i, j, _) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    /// `C(x) = sum w_kl (x_k + x_l - 2 x_k x_l)`: weight of edges whose
    /// endpoints differ.
    pub fn cut_value(&self, bits: &BitString) -> f64 {
        self.edges
            .iter()
            .filter(|&&(i, j, _)| bits.get(i) != bits.get(j))
            .map(|e| e.2)
            .sum()
    }

    pub fn cut_value_of_index(&self, k: u64) -> f64 {
        self.edges
            .iter()
            .filter(|&&(i, j, _)| ((k >> i) ^ (k >> j)) & 1 == 1)
            .map(|e| e.2)
            .sum()
    }

    /// Ising model with `J_kl = w_kl`, so `C(x) = (W - E(x)) / 2`.
    pub fn maxcut_model(&self) -> Result<IsingModel> {
        let mut m = IsingModel::new(self.num_nodes);
        for &(i, j, w) in &self.edges {
            m.add_quadratic(i, j, w)?;
        }
        Ok(m)
    }

    /// One `i j w` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(i, j, w) in &self.edges {
            out.push_str(&format!("{i} {j} {w}\n"));
        }
        out
    }

    pub fn from_edge_list(text: &str, num_nodes: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::param(format!("edge list line {}: expected \"i j w\"", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let i: usize = fields[0].parse().map_err(|_| bad())?;
            let j: usize = fields[1].parse().map_err(|_| bad())?;
            let w: f64 = fields[2].parse().map_err(|_| bad())?;
            if i >= num_nodes || j >= num_nodes || i == j {
                return Err(bad());
            }
            edges.push((i.min(j), i.max(j), w));
        }
        Ok(WeightedGraph { num_nodes, edges })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Wmaxcut,
    FcWmaxcut,
    Maxcut,
    Maxcut3reg,
    Mis,
    Max3sat,
    Imported,
}

impl Family {
    pub fn is_cut(self) -> bool {
        matches!(
            self,
            Family::Wmaxcut | Family::FcWmaxcut | Family::Maxcut | Family::Maxcut3reg
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Wmaxcut => "WMAXCUT",
            Family::FcWmaxcut => "FC_WMAXCUT",
            Family::Maxcut => "MAXCUT",
            Family::Maxcut3reg => "MAXCUT_3REG",
            Family::Mis => "MIS",
            Family::Max3sat => "MAX3SAT",
            Family::Imported => "IMPORTED",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Ok(match norm.as_str() {
            "WMAXCUT" => Family::Wmaxcut,
            "FC_WMAXCUT" => Family::FcWmaxcut,
            "MAXCUT" => Family::Maxcut,
            "MAXCUT_3REG" | "3REG_MAXCUT" | "3_MAXCUT" => Family::Maxcut3reg,
            "MIS" => Family::Mis,
            "MAX3SAT" | "MAX_3_SAT" => Family::Max3sat,
            "IMPORTED" => Family::Imported,
            _ => return Err(Error::param(format!("unknown problem family \"{s}\""))),
        })
    }
}

/// Edge-weight law for random weighted Maxcut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    /// Uniform on the open interval (0, 1).
    Uniform,
    /// Uniform over a finite set of values.
    Discrete(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

pub type Clause = [Literal; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemParams {
    Wmaxcut { edge_density: f64, weights: WeightLaw },
    FcWmaxcut,
    Maxcut { edge_density: f64 },
    Maxcut3reg,
    Mis { edge_density: f64, penalty: f64 },
    Max3sat { clause_ratio: f64, clauses: Vec<Clause> },
    Imported,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub model: IsingModel,
    pub graph: Option<WeightedGraph>,
    pub family: Family,
    pub seed: u64,
    pub params: ProblemParams,
    /// Divisor applied by normalization; `scale * energy` is the raw objective.
    pub scale: f64,
}

impl ProblemInstance {
    pub fn num_vars(&self) -> usize {
        self.model.num_vars()
    }

    pub fn metadata(&self) -> Map<String, Value> {
        let mut meta = Map::new();
        meta.insert("family".into(), Value::String(self.family.name().into()));
        meta.insert("seed".into(), Value::from(self.seed));
        meta.insert("scale".into(), Value::from(self.scale));
        meta.insert(
            "params".into(),
            serde_json::to_value(&self.params).expect("params serialize"),
        );
        meta
    }

    pub fn to_document(&self) -> InstanceDocument {
        InstanceDocument::from_model(&self.model, self.metadata())
    }

    /// Rebuilds an instance from a document and optional edge list.
    pub fn from_document(doc: &InstanceDocument, graph: Option<WeightedGraph>) -> Result<Self> {
        let model = doc.to_model()?;
        let meta = &doc.metadata;
        let family = match meta.get("family").and_then(Value::as_str) {
            Some(f) => Family::parse(f)?,
            None => Family::Imported,
        };
        let seed = meta.get("seed").and_then(Value::as_u64).unwrap_or(0);
        let scale = meta.get("scale").and_then(Value::as_f64).unwrap_or(1.0);
        let params = match meta.get("params") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => ProblemParams::Imported,
        };
        if let Some(g) = &graph {
            if g.num_nodes != model.num_vars() {
                return Err(Error::contract("graph and model disagree on size"));
            }
        }
        Ok(ProblemInstance {
            model,
            graph,
            family,
            seed,
            params,
            scale,
        })
    }

    /// Writes `<stem>.json` and, for graph problems, `<stem>.edges`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        self.to_document().write(&stem.with_extension("json"))?;
        if let Some(g) = &self.graph {
            std::fs::write(stem.with_extension("edges"), g.to_edge_list())?;
        }
        Ok(())
    }

    /// Reads an instance document; an `.edges` file next to it is picked up
    /// unless `graph_path` names one explicitly.
    pub fn read(json_path: &Path, graph_path: Option<&Path>) -> Result<Self> {
        let doc = InstanceDocument::read(json_path)?;
        let sidecar = json_path.with_extension("edges");
        let graph_file = match graph_path {
            Some(p) => Some(p.to_path_buf()),
            None if sidecar.exists() => Some(sidecar),
            None => None,
        };
        let graph = match graph_file {
            Some(p) => Some(WeightedGraph::from_edge_list(
                &std::fs::read_to_string(p)?,
                doc.num_vars,
            )?),
            None => None,
        };
        Self::from_document(&doc, graph)
    }

    /// Graph whose cut value is the objective. MIS graphs are excluded.
    pub fn cut_graph(&self) -> Option<&WeightedGraph> {
        match self.family {
            Family::Mis | Family::Max3sat => None,
            _ => self.graph.as_ref(),
        }
    }

    /// Raw objective of a bitstring (the value before normalization).
    pub fn raw_energy(&self, bits: &BitString) -> Result<f64> {
        Ok(self.scale * self.model.energy(bits)?)
    }
}

/// Normalizes with the first strategy that has a nonzero denominator.
/// Returns the model unchanged with scale 1 when every strategy fails,
/// which only happens for models without linear or pair terms.
fn normalize_with_fallback(model: IsingModel, strategies: &[Normalization]) -> (IsingModel, f64) {
    for &s in strategies {
        if let Ok(f) = model.normalization_factor(s) {
            return (model.scaled(1.0 / f), f);
        }
    }
    (model, 1.0)
}

fn check_density(edge_density: f64) -> Result<()> {
    if !(edge_density > 0.0 && edge_density <= 1.0) {
        return Err(Error::param(format!("edge density {edge_density} must lie in (0, 1]")));
    }
    Ok(())
}

fn bernoulli_pairs(n: usize, edge_density: f64, rng: &mut rng::Rng) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if edge_density >= 1.0 || rng.random::<f64>() < edge_density {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn cut_instance(graph: WeightedGraph, family: Family, seed: u64, params: ProblemParams) -> Result<ProblemInstance> {
    let raw = graph.maxcut_model()?;
    let (model, scale) = normalize_with_fallback(raw, &[Normalization::MaxAbsJ]);
    Ok(ProblemInstance {
        model,
        graph: Some(graph),
        family,
        seed,
        params,
        scale,
    })
}

/// Random weighted Maxcut: each pair kept with probability `edge_density`,
/// weights uniform in (0, 1).
pub fn gen_wmaxcut(n: usize, edge_density: f64, seed: u64) -> Result<ProblemInstance> {
    gen_wmaxcut_with(n, edge_density, WeightLaw::Uniform, seed)
}

pub fn gen_wmaxcut_with(n: usize, edge_density: f64, weights: WeightLaw, seed: u64) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::param("weighted Maxcut needs at least 2 nodes"));
    }
    check_density(edge_density)?;
    if let WeightLaw::Discrete(values) = &weights {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("discrete weight set must be non-empty and finite"));
        }
    }
    let mut rng = rng::seeded(seed);
    let pairs = bernoulli_pairs(n, edge_density, &mut rng);
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let w = match &weights {
                WeightLaw::Uniform => rng.sample(Open01),
                WeightLaw::Discrete(values) => values[rng.random_range(0..values.len())],
            };
            (i, j, w)
        })
        .collect();
    let graph = WeightedGraph { num_nodes: n, edges };
    cut_instance(
        graph,
        Family::Wmaxcut,
        seed,
        ProblemParams::Wmaxcut { edge_density, weights },
    )
}

/// Complete graph with integer weights drawn uniformly from `0..=1000`.
pub fn gen_fc_wmaxcut(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::param("weighted Maxcut needs at least 2 nodes"));
    }
    let mut rng = rng::seeded(seed);
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, rng.random_range(0..=FC_WEIGHT_MAX) as f64));
        }
    }
    let graph = WeightedGraph { num_nodes: n, edges };
    cut_instance(graph, Family::FcWmaxcut, seed, ProblemParams::FcWmaxcut)
}

/// Unit-weight Maxcut on an Erdos-Renyi graph.
pub fn gen_maxcut(n: usize, edge_density: f64, seed: u64) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::param("Maxcut needs at least 2 nodes"));
    }
    check_density(edge_density)?;
    let mut rng = rng::seeded(seed);
    let edges = bernoulli_pairs(n, edge_density, &mut rng)
        .into_iter()
        .map(|(i, j)| (i, j, 1.0))
        .collect();
    let graph = WeightedGraph { num_nodes: n, edges };
    cut_instance(graph, Family::Maxcut, seed, ProblemParams::Maxcut { edge_density })
}

const PAIRING_ATTEMPTS: usize = 100_000;

/// Unit-weight Maxcut on a random 3-regular simple graph, sampled with the
/// pairing model and rejection of loops and multi-edges.
pub fn gen_maxcut_3reg(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::param(format!(
            "a 3-regular graph needs an even node count of at least 4, got {n}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
    for _ in 0..PAIRING_ATTEMPTS {
        points.shuffle(&mut rng);
        let mut seen = BTreeSet::new();
        let ok = points.chunks(2).all(|pair| {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            a != b && seen.insert((a, b))
        });
        if ok {
            let edges = seen.into_iter().map(|(a, b)| (a, b, 1.0)).collect();
            let graph = WeightedGraph { num_nodes: n, edges };
            return cut_instance(graph, Family::Maxcut3reg, seed, ProblemParams::Maxcut3reg);
        }
    }
    Err(Error::param(format!(
        "no simple 3-regular pairing found for n = {n} after {PAIRING_ATTEMPTS} attempts"
    )))
}

/// QUBO `-sum x_i + P sum_{(i,j) in E} x_i x_j` of the maximum independent
/// set problem.
pub fn mis_qubo(graph: &WeightedGraph, penalty: f64) -> Result<QuboModel> {
    let mut q = QuboModel::new(graph.num_nodes);
    for i in 0..graph.num_nodes {
        q.add_term(i, i, -1.0)?;
    }
    for &(i, j, _) in &graph.edges {
        q.add_term(i, j, penalty)?;
    }
    Ok(q)
}

/// Random maximum independent set instance.
pub fn gen_mis(n: usize, edge_density: f64, seed: u64) -> Result<ProblemInstance> {
    if n < 1 {
        return Err(Error::param("MIS needs at least 1 node"));
    }
    check_density(edge_density)?;
    let mut rng = rng::seeded(seed);
    let edges = bernoulli_pairs(n, edge_density, &mut rng)
        .into_iter()
        .map(|(i, j)| (i, j, 1.0))
        .collect();
    let graph = WeightedGraph { num_nodes: n, edges };
    mis_instance(graph, seed, edge_density)
}

/// Independent-set instance on a given graph.
pub fn mis_instance(graph: WeightedGraph, seed: u64, edge_density: f64) -> Result<ProblemInstance> {
    let raw = qubo_to_ising(&mis_qubo(&graph, MIS_PENALTY)?)?;
    let (model, scale) = normalize_with_fallback(raw, &[Normalization::MaxAbsH, Normalization::MaxAbsHJ]);
    Ok(ProblemInstance {
        model,
        // kept for inspection; MIS has no cut metric
        graph: Some(graph),
        family: Family::Mis,
        seed,
        params: ProblemParams::Mis {
            edge_density,
            penalty: MIS_PENALTY,
        },
        scale,
    })
}

/// Whether `bits` selects an independent set of `graph`.
pub fn is_independent(graph: &WeightedGraph, bits: &BitString) -> bool {
    graph.edges.iter().all(|&(i, j, _)| !(bits.get(i) && bits.get(j)))
}

pub fn count_satisfied(clauses: &[Clause], bits: &BitString) -> usize {
    clauses
        .iter()
        .filter(|c| c.iter().any(|l| bits.get(l.var) != l.negated))
        .count()
}

/// Cubic spin model whose energy is `-(satisfied clauses)`.
///
/// With `x = (1 - s) / 2`, a clause is violated exactly when every literal is
/// false, which is `prod_a (1 + sigma_a s_a) / 2` with `sigma_a = +1` for a
/// plain literal and `-1` for a negated one.
pub fn max3sat_model(n_vars: usize, clauses: &[Clause]) -> Result<IsingModel> {
    let mut m = IsingModel::new(n_vars);
    for clause in clauses {
        let sign = |l: &Literal| if l.negated { -1.0 } else { 1.0 };
        let [a, b, c] = clause;
        let (sa, sb, sc) = (sign(a), sign(b), sign(c));
        m.add_offset(-7.0 / 8.0)?;
        m.add_linear(a.var, sa / 8.0)?;
        m.add_linear(b.var, sb / 8.0)?;
        m.add_linear(c.var, sc / 8.0)?;
        m.add_quadratic(a.var, b.var, sa * sb / 8.0)?;
        m.add_quadratic(a.var, c.var, sa * sc / 8.0)?;
        m.add_quadratic(b.var, c.var, sb * sc / 8.0)?;
        m.add_cubic(a.var, b.var, c.var, sa * sb * sc / 8.0)?;
    }
    Ok(m)
}

/// Random Max-3-SAT with `round(clause_ratio * n_vars)` clauses over three
/// distinct variables each, every literal negated with probability 1/2.
pub fn gen_max3sat(n_vars: usize, clause_ratio: f64, seed: u64) -> Result<ProblemInstance> {
    if n_vars < 3 {
        return Err(Error::param("Max-3-SAT needs at least 3 variables"));
    }
    if !(clause_ratio.is_finite() && clause_ratio > 0.0) {
        return Err(Error::param("clause ratio must be positive"));
    }
    let n_clauses = (clause_ratio * n_vars as f64).round() as usize;
    if n_clauses == 0 {
        return Err(Error::param("clause ratio yields no clauses"));
    }
    let mut rng = rng::seeded(seed);
    let mut clauses = Vec::with_capacity(n_clauses);
    for _ in 0..n_clauses {
        let mut vars = rand::seq::index::sample(&mut rng, n_vars, 3).into_vec();
        vars.sort_unstable();
        let lit = |var: usize, rng: &mut rng::Rng| Literal {
            var,
            negated: rng.random_bool(0.5),
        };
        clauses.push([lit(vars[0], &mut rng), lit(vars[1], &mut rng), lit(vars[2], &mut rng)]);
    }
    let raw = max3sat_model(n_vars, &clauses)?;
    let (model, scale) = normalize_with_fallback(raw, &[Normalization::MaxAbsJ, Normalization::MaxAbsHJ]);
    Ok(ProblemInstance {
        model,
        graph: None,
        family: Family::Max3sat,
        seed,
        params: ProblemParams::Max3sat { clause_ratio, clauses },
        scale,
    })
}

/// Generator family and its parameters, as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GeneratorSpec {
    Wmaxcut {
        #[serde(default = "default_wmaxcut_density")]
        edge_density: f64,
        #[serde(default = "default_weights")]
        weights: WeightLaw,
    },
    FcWmaxcut,
    Maxcut {
        edge_density: f64,
    },
    Maxcut3reg,
    Mis {
        #[serde(default = "default_mis_density")]
        edge_density: f64,
    },
    Max3sat {
        #[serde(default = "default_clause_ratio")]
        clause_ratio: f64,
    },
}

fn default_wmaxcut_density() -> f64 {
    WMAXCUT_EDGE_DENSITY
}

fn default_weights() -> WeightLaw {
    WeightLaw::Uniform
}

fn default_mis_density() -> f64 {
    MIS_EDGE_DENSITY
}

fn default_clause_ratio() -> f64 {
    MAX3SAT_CLAUSE_RATIO
}

impl GeneratorSpec {
    /// Family defaults; plain Maxcut uses density 0.5.
    pub fn default_for(family: Family) -> Result<GeneratorSpec> {
        Ok(match family {
            Family::Wmaxcut => GeneratorSpec::Wmaxcut {
                edge_density: WMAXCUT_EDGE_DENSITY,
                weights: WeightLaw::Uniform,
            },
            Family::FcWmaxcut => GeneratorSpec::FcWmaxcut,
            Family::Maxcut => GeneratorSpec::Maxcut { edge_density: 0.5 },
            Family::Maxcut3reg => GeneratorSpec::Maxcut3reg,
            Family::Mis => GeneratorSpec::Mis {
                edge_density: MIS_EDGE_DENSITY,
            },
            Family::Max3sat => GeneratorSpec::Max3sat {
                clause_ratio: MAX3SAT_CLAUSE_RATIO,
            },
            Family::Imported => return Err(Error::param("imported instances have no generator")),
        })
    }

    pub fn family(&self) -> Family {
        match self {
            GeneratorSpec::Wmaxcut { .. } => Family::Wmaxcut,
            GeneratorSpec::FcWmaxcut => Family::FcWmaxcut,
            GeneratorSpec::Maxcut { .. } => Family::Maxcut,
            GeneratorSpec::Maxcut3reg => Family::Maxcut3reg,
            GeneratorSpec::Mis { .. } => Family::Mis,
            GeneratorSpec::Max3sat { .. } => Family::Max3sat,
        }
    }

    /// Sets the edge density of graph families that have one.
    pub fn with_edge_density(self, density: f64) -> GeneratorSpec {
        match self {
            GeneratorSpec::Wmaxcut { weights, .. } => GeneratorSpec::Wmaxcut {
                edge_density: density,
                weights,
            },
            GeneratorSpec::Maxcut { .. } => GeneratorSpec::Maxcut { edge_density: density },
            GeneratorSpec::Mis { .. } => GeneratorSpec::Mis { edge_density: density },
            other => other,
        }
    }

    /// Instance of size `n`. For Max-3-SAT, `n` is the variable count.
    pub fn generate(&self, n: usize, seed: u64) -> Result<ProblemInstance> {
        match self {
            GeneratorSpec::Wmaxcut { edge_density, weights } => {
                gen_wmaxcut_with(n, *edge_density, weights.clone(), seed)
            }
            GeneratorSpec::FcWmaxcut => gen_fc_wmaxcut(n, seed),
            GeneratorSpec::Maxcut { edge_density } => gen_maxcut(n, *edge_density, seed),
            GeneratorSpec::Maxcut3reg => gen_maxcut_3reg(n, seed),
            GeneratorSpec::Mis { edge_density } => gen_mis(n, *edge_density, seed),
            GeneratorSpec::Max3sat { clause_ratio } => gen_max3sat(n, *clause_ratio, seed),
        }
    }
}
