//! Cuntz–Krieger algebras of finite directed graphs, in the spanning form
//! `s_μ s_ν*` with `r(μ) = r(ν)`.
//!
//! Products are reduced with the prefix rules only:
//! `(s_μ s_ν*)(s_α s_β*)` is `s_{μγ} s_β*` when `α = νγ`, `s_μ s_{βγ}*` when
//! `ν = αγ`, and zero otherwise. The completeness relation
//! `p_v = Σ_{s(e)=v} s_e s_e*` is only applied on request, with an explicit
//! depth bound ([`expand_to_depth`]), because unbounded rewriting does not
//! terminate on graphs with loops.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{c64, Algebra};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("edges `{0}` and `{1}` are not composable")]
    NotComposable(String, String),
    #[error("paths end at different vertices")]
    RangeMismatch,
    #[error("operation needs a path of positive length")]
    EmptyPath,
    #[error("elements live over different graphs")]
    GraphMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Edge {
    name: String,
    source: usize,
    range: usize,
}

/// A finite directed graph `E = (E⁰, E¹, r, s)`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DirectedGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl DirectedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: &str) -> Result<usize, GraphError> {
        if self.vertex_index.contains_key(name) || self.edge_index.contains_key(name) {
            return Err(GraphError::Duplicate(name.to_string()));
        }
        self.vertices.push(name.to_string());
        self.vertex_index
            .insert(name.to_string(), self.vertices.len() - 1);
        Ok(self.vertices.len() - 1)
    }

    pub fn add_edge(&mut self, name: &str, source: &str, range: &str) -> Result<usize, GraphError> {
        if self.vertex_index.contains_key(name) || self.edge_index.contains_key(name) {
            return Err(GraphError::Duplicate(name.to_string()));
        }
        let s = self.vertex(source)?;
        let r = self.vertex(range)?;
        self.edges.push(Edge {
            name: name.to_string(),
            source: s,
            range: r,
        });
        self.edge_index
            .insert(name.to_string(), self.edges.len() - 1);
        Ok(self.edges.len() - 1)
    }

    /// Parses the line format `vertex <name>` / `edge <name> <source> <range>`,
    /// with `#` comments. Edges may mention vertices declared later.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["vertex", name] => vertices.push((i + 1, *name)),
                ["edge", name, s, r] => edges.push((i + 1, *name, *s, *r)),
                _ => {
                    return Err(GraphError::Parse {
                        line: i + 1,
                        message: format!(
                        "expected `vertex <name>` or `edge <name> <source> <range>`, got `{line}`"
                    ),
                    })
                }
            }
        }
        let mut g = Self::new();
        for (line, name) in vertices {
            g.add_vertex(name).map_err(|e| GraphError::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        for (line, name, s, r) in edges {
            g.add_edge(name, s, r).map_err(|e| GraphError::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str(&format!("vertex {v}\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "edge {} {} {}\n",
                e.name, self.vertices[e.source], self.vertices[e.range]
            ));
        }
        out
    }

    pub fn vertex(&self, name: &str) -> Result<usize, GraphError> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    pub fn edge(&self, name: &str) -> Result<usize, GraphError> {
        self.edge_index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownEdge(name.to_string()))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn edge_name(&self, e: usize) -> &str {
        &self.edges[e].name
    }

    pub fn source(&self, e: usize) -> usize {
        self.edges[e].source
    }

    pub fn range(&self, e: usize) -> usize {
        self.edges[e].range
    }

    /// Edges leaving `v`.
    pub fn exits(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.source == v)
            .map(|(i, _)| i)
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.exits(v).count()
    }

    pub fn is_sink(&self, v: usize) -> bool {
        self.out_degree(v) == 0
    }

    pub fn is_source(&self, v: usize) -> bool {
        self.edges.iter().all(|e| e.range != v)
    }

    /// True when no path of positive length returns to its start.
    pub fn is_loop_free(&self) -> bool {
        // Kahn's algorithm
        let n = self.vertex_count();
        let mut indeg = vec![0usize; n];
        for e in &self.edges {
            indeg[e.range] += 1;
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for e in self.exits(v).collect::<Vec<_>>() {
                let w = self.edges[e].range;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        seen == n
    }

    /// Simple cycles (distinct vertices), each reported once, starting at its
    /// smallest vertex index.
    pub fn simple_cycles(&self) -> Vec<Path> {
        let mut out = Vec::new();
        for start in 0..self.vertex_count() {
            let mut edges = Vec::new();
            let mut on_path = vec![false; self.vertex_count()];
            self.cycle_dfs(start, start, &mut edges, &mut on_path, &mut out);
        }
        out
    }

    fn cycle_dfs(
        &self,
        start: usize,
        at: usize,
        edges: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Path>,
    ) {
        on_path[at] = true;
        for e in self.exits(at).collect::<Vec<_>>() {
            let w = self.edges[e].range;
            if w == start {
                let mut es = edges.clone();
                es.push(e);
                out.push(Path {
                    start,
                    edges: es,
                    end: start,
                });
            } else if w > start && !on_path[w] {
                edges.push(e);
                self.cycle_dfs(start, w, edges, on_path, out);
                edges.pop();
            }
        }
        on_path[at] = false;
    }

    /// All paths of length `0..=max_len`, vertices first.
    pub fn paths_up_to(&self, max_len: usize) -> Vec<Path> {
        let mut out: Vec<Path> = (0..self.vertex_count()).map(Path::vertex).collect();
        let mut frontier = out.clone();
        for _ in 0..max_len {
            let mut next = Vec::new();
            for p in &frontier {
                for e in self.exits(p.end).collect::<Vec<_>>() {
                    next.push(p.extended(self, e));
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
}

/// A path `μ = μ_1…μ_n`; length zero means a vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    start: usize,
    edges: Vec<usize>,
    end: usize,
}

impl Path {
    pub fn vertex(v: usize) -> Self {
        Self {
            start: v,
            edges: Vec::new(),
            end: v,
        }
    }

    pub fn from_edges(g: &DirectedGraph, edges: &[usize]) -> Result<Self, GraphError> {
        let (&first, rest) = edges.split_first().ok_or(GraphError::EmptyPath)?;
        let mut p = Self {
            start: g.source(first),
            edges: vec![first],
            end: g.range(first),
        };
        for &e in rest {
            if g.source(e) != p.end {
                return Err(GraphError::NotComposable(
                    g.edge_name(*p.edges.last().unwrap()).to_string(),
                    g.edge_name(e).to_string(),
                ));
            }
            p = p.extended(g, e);
        }
        Ok(p)
    }

    pub fn from_names(g: &DirectedGraph, names: &[&str]) -> Result<Self, GraphError> {
        if let [single] = names {
            if let Ok(v) = g.vertex(single) {
                return Ok(Self::vertex(v));
            }
        }
        let ids = names
            .iter()
            .map(|n| g.edge(n))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_edges(g, &ids)
    }

    fn extended(&self, g: &DirectedGraph, e: usize) -> Self {
        debug_assert_eq!(g.source(e), self.end);
        let mut edges = self.edges.clone();
        edges.push(e);
        Self {
            start: self.start,
            edges,
            end: g.range(e),
        }
    }

    pub fn source(&self) -> usize {
        self.start
    }

    pub fn range(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn is_loop(&self) -> bool {
        !self.edges.is_empty() && self.start == self.end
    }

    /// If `self = prefix·γ`, returns `γ`.
    fn strip_prefix(&self, prefix: &Path) -> Option<Path> {
        if self.start != prefix.start || !self.edges.starts_with(&prefix.edges) {
            return None;
        }
        Some(Path {
            start: prefix.end,
            edges: self.edges[prefix.edges.len()..].to_vec(),
            end: self.end,
        })
    }

    fn concat(&self, tail: &Path) -> Path {
        debug_assert_eq!(self.end, tail.start);
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&tail.edges);
        Path {
            start: self.start,
            edges,
            end: tail.end,
        }
    }

    pub fn display(&self, g: &DirectedGraph) -> String {
        if self.edges.is_empty() {
            g.vertex_name(self.start).to_string()
        } else {
            self.edges
                .iter()
                .map(|&e| g.edge_name(e))
                .collect::<Vec<_>>()
                .join(".")
        }
    }

    pub fn to_json(&self, g: &DirectedGraph) -> PathJson {
        PathJson {
            source: g.vertex_name(self.start).to_string(),
            edges: self
                .edges
                .iter()
                .map(|&e| g.edge_name(e).to_string())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathJson {
    pub source: String,
    pub edges: Vec<String>,
}

/// `s_μ s_ν*` with `r(μ) = r(ν)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CkTerm {
    mu: Path,
    nu: Path,
}

impl CkTerm {
    pub fn new(mu: Path, nu: Path) -> Result<Self, GraphError> {
        if mu.end != nu.end {
            return Err(GraphError::RangeMismatch);
        }
        Ok(Self { mu, nu })
    }

    pub fn projection(v: usize) -> Self {
        Self {
            mu: Path::vertex(v),
            nu: Path::vertex(v),
        }
    }

    /// `s_μ = s_μ p_{r(μ)}`.
    pub fn path(mu: Path) -> Self {
        let nu = Path::vertex(mu.end);
        Self { mu, nu }
    }

    pub fn mu(&self) -> &Path {
        &self.mu
    }

    pub fn nu(&self) -> &Path {
        &self.nu
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mu: self.nu.clone(),
            nu: self.mu.clone(),
        }
    }

    /// `s(μ) = s(ν)` (and `r(μ) = r(ν)`, which always holds).
    pub fn is_closed(&self) -> bool {
        self.mu.start == self.nu.start
    }

    pub fn display(&self, g: &DirectedGraph) -> String {
        format!("s[{}] s[{}]*", self.mu.display(g), self.nu.display(g))
    }
}

/// Product of two spanning terms; `None` is zero.
pub fn ck_mul(t1: &CkTerm, t2: &CkTerm) -> Option<CkTerm> {
    if let Some(gamma) = t2.mu.strip_prefix(&t1.nu) {
        return Some(CkTerm {
            mu: t1.mu.concat(&gamma),
            nu: t2.nu.clone(),
        });
    }
    if let Some(gamma) = t1.nu.strip_prefix(&t2.mu) {
        return Some(CkTerm {
            mu: t1.mu.clone(),
            nu: t2.nu.concat(&gamma),
        });
    }
    None
}

/// A finite linear combination of spanning terms.
#[derive(Clone, Debug)]
pub struct GraphElement {
    graph: Arc<DirectedGraph>,
    terms: BTreeMap<CkTerm, Complex64>,
}

const GRAPH_PRUNE: f64 = 1e-12;

impl GraphElement {
    pub fn zero(graph: &Arc<DirectedGraph>) -> Self {
        Self {
            graph: Arc::clone(graph),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_term(graph: &Arc<DirectedGraph>, t: CkTerm, c: Complex64) -> Self {
        let mut out = Self::zero(graph);
        out.terms.insert(t, c);
        out.prune();
        out
    }

    pub fn projection(graph: &Arc<DirectedGraph>, v: usize) -> Self {
        Self::from_term(graph, CkTerm::projection(v), c64(1.0, 0.0))
    }

    pub fn path(graph: &Arc<DirectedGraph>, mu: Path) -> Self {
        Self::from_term(graph, CkTerm::path(mu), c64(1.0, 0.0))
    }

    pub fn edge(graph: &Arc<DirectedGraph>, e: usize) -> Self {
        Self::path(graph, Path::from_edges(graph, &[e]).expect("single edge"))
    }

    pub fn graph(&self) -> &Arc<DirectedGraph> {
        &self.graph
    }

    pub fn terms(&self) -> &BTreeMap<CkTerm, Complex64> {
        &self.terms
    }

    pub fn coefficient(&self, t: &CkTerm) -> Complex64 {
        self.terms.get(t).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > GRAPH_PRUNE);
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, GraphError> {
        if !self.same_carrier(other) {
            return Err(GraphError::GraphMismatch);
        }
        let mut out = Self::zero(&self.graph);
        for (t1, c1) in &self.terms {
            for (t2, c2) in &other.terms {
                if let Some(t) = ck_mul(t1, t2) {
                    *out.terms.entry(t).or_default() += c1 * c2;
                }
            }
        }
        out.prune();
        Ok(out)
    }
}

/// `[p_v, x]`, termwise.
pub fn vertex_commutator(v: usize, x: &GraphElement) -> GraphElement {
    GraphElement::projection(&x.graph, v).commutator(x)
}

/// Whether `s_μ s_μ* = p_{s(μ)}`: every vertex the path leaves from
/// (`s(μ_1), …, s(μ_n)`) emits exactly one edge.
pub fn full_isometry_criterion(g: &DirectedGraph, mu: &Path) -> Result<bool, GraphError> {
    if mu.is_empty() {
        return Err(GraphError::EmptyPath);
    }
    Ok(mu.edges.iter().all(|&e| g.out_degree(g.source(e)) == 1))
}

/// Applies `s_α p_w s_β* = Σ_{s(e)=w} s_{αe} s_{βe}*` to every term whose
/// shorter path is below `depth` and whose range `w` is not a sink.
pub fn expand_to_depth(x: &GraphElement, depth: usize) -> GraphElement {
    let g = &x.graph;
    let mut current = x.clone();
    loop {
        let mut changed = false;
        let mut next = GraphElement::zero(g);
        for (t, c) in &current.terms {
            let w = t.mu.end;
            if t.mu.len().min(t.nu.len()) < depth && !g.is_sink(w) {
                changed = true;
                for e in g.exits(w) {
                    let term = CkTerm {
                        mu: t.mu.extended(g, e),
                        nu: t.nu.extended(g, e),
                    };
                    *next.terms.entry(term).or_default() += c;
                }
            } else {
                *next.terms.entry(t.clone()).or_default() += c;
            }
        }
        next.prune();
        current = next;
        if !changed {
            return current;
        }
    }
}

/// Checks `s_μ s_μ* = p_{s(μ)}` by expanding `p_{s(μ)}` to depth `|μ|`.
pub fn verify_full_isometry(graph: &Arc<DirectedGraph>, mu: &Path) -> bool {
    let lhs = GraphElement::from_term(
        graph,
        CkTerm::new(mu.clone(), mu.clone()).expect("same range"),
        c64(1.0, 0.0),
    );
    let rhs = expand_to_depth(&GraphElement::projection(graph, mu.start), mu.len());
    expand_to_depth(&lhs, mu.len()).max_abs_diff(&rhs) <= 1e-12
}

/// All closed terms with `|μ|, |ν| ≤ max_len`.
pub fn closed_terms(g: &DirectedGraph, max_len: usize) -> Vec<CkTerm> {
    let paths = g.paths_up_to(max_len);
    let mut out = Vec::new();
    for mu in &paths {
        for nu in &paths {
            if mu.start == nu.start && mu.end == nu.end {
                out.push(CkTerm {
                    mu: mu.clone(),
                    nu: nu.clone(),
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedTermJson {
    pub mu: PathJson,
    pub nu: PathJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleFlag {
    pub loop_edges: Vec<String>,
    pub vertices: Vec<String>,
}

/// Degree-zero cohomology data of a graph algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H0Report {
    pub closed_terms: Vec<ClosedTermJson>,
    /// Distinct projections `s_μ s_μ*`; only defined for loop-free graphs.
    pub projection_count: Option<usize>,
    /// Simple loops without exit: each contributes a copy of `C(T)`.
    pub circle_flags: Vec<CircleFlag>,
}

pub fn h0_report(g: &Arc<DirectedGraph>, max_len: usize) -> H0Report {
    let closed_terms = closed_terms(g, max_len)
        .iter()
        .map(|t| ClosedTermJson {
            mu: t.mu.to_json(g),
            nu: t.nu.to_json(g),
        })
        .collect();
    let projection_count = g.is_loop_free().then(|| distinct_projections(g));
    let circle_flags = g
        .simple_cycles()
        .into_iter()
        .filter(|c| c.edges.iter().all(|&e| g.out_degree(g.source(e)) == 1))
        .map(|c| CircleFlag {
            loop_edges: c
                .edges
                .iter()
                .map(|&e| g.edge_name(e).to_string())
                .collect(),
            vertices: c
                .edges
                .iter()
                .map(|&e| g.vertex_name(g.source(e)).to_string())
                .collect(),
        })
        .collect();
    H0Report {
        closed_terms,
        projection_count,
        circle_flags,
    }
}

/// On a loop-free graph every `s_μ s_μ*` expands completely into projections
/// onto sink-terminated paths; two projections are equal exactly when these
/// expansions agree.
fn distinct_projections(g: &Arc<DirectedGraph>) -> usize {
    let depth = g.vertex_count();
    let mut seen: BTreeSet<Vec<CkTerm>> = BTreeSet::new();
    for mu in g.paths_up_to(depth) {
        let p = GraphElement::from_term(
            g,
            CkTerm::new(mu.clone(), mu).expect("same range"),
            c64(1.0, 0.0),
        );
        let expanded = expand_to_depth(&p, depth);
        seen.insert(expanded.terms.keys().cloned().collect());
    }
    seen.len()
}

/// Random combination of spanning terms with paths of length `≤ max_len`.
pub fn random_graph_element<R: Rng + ?Sized>(
    g: &Arc<DirectedGraph>,
    rng: &mut R,
    max_terms: usize,
    max_len: usize,
) -> GraphElement {
    let paths = g.paths_up_to(max_len);
    let mut by_range: HashMap<usize, Vec<&Path>> = HashMap::new();
    for p in &paths {
        by_range.entry(p.end).or_default().push(p);
    }
    let mut out = GraphElement::zero(g);
    for _ in 0..rng.gen_range(1..=max_terms.max(1)) {
        let mu = paths[rng.gen_range(0..paths.len())].clone();
        let candidates = &by_range[&mu.end];
        let nu = candidates[rng.gen_range(0..candidates.len())].clone();
        let c = c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        *out.terms.entry(CkTerm { mu, nu }).or_default() += c;
    }
    out.prune();
    out
}

impl Algebra for GraphElement {
    fn zero_like(&self) -> Self {
        Self::zero(&self.graph)
    }

    /// `Σ_v p_v`, the unit of a finite graph algebra.
    fn one_like(&self) -> Self {
        let mut out = Self::zero(&self.graph);
        for v in 0..self.graph.vertex_count() {
            out.terms.insert(CkTerm::projection(v), c64(1.0, 0.0));
        }
        out
    }

    fn add(&self, other: &Self) -> Self {
        assert!(self.same_carrier(other), "graph mismatch");
        let mut out = self.clone();
        for (t, c) in &other.terms {
            *out.terms.entry(t.clone()).or_default() += c;
        }
        out.prune();
        out
    }

    fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out.prune();
        out
    }

    fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("graph mismatch")
    }

    fn adjoint(&self) -> Self {
        let mut out = Self::zero(&self.graph);
        for (t, c) in &self.terms {
            out.terms.insert(t.adjoint(), c.conj());
        }
        out
    }

    fn same_carrier(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.graph, &other.graph) || self.graph == other.graph
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (t, c) in &self.terms {
            worst = worst.max((c - other.coefficient(t)).norm());
        }
        for (t, c) in &other.terms {
            if !self.terms.contains_key(t) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(t, c)| {
                serde_json::json!({
                    "mu": t.mu.to_json(&self.graph),
                    "nu": t.nu.to_json(&self.graph),
                    "re": c.re,
                    "im": c.im,
                })
            })
            .collect();
        serde_json::Value::Array(terms)
    }
}

impl PartialEq for GraphElement {
    fn eq(&self, other: &Self) -> bool {
        self.same_carrier(other) && self.max_abs_diff(other) <= 1e-10
    }
}

impl fmt::Display for GraphElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (t, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({}{:+}i) {}", c.re, c.im, t.display(&self.graph))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(text: &str) -> Arc<DirectedGraph> {
        Arc::new(DirectedGraph::parse(text).unwrap())
    }

    fn one() -> Complex64 {
        c64(1.0, 0.0)
    }

    #[test]
    fn parse_and_print() {
        let g = DirectedGraph::parse("# a graph\nvertex a\nvertex b\n\nedge e a b # trailing\n")
            .unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(DirectedGraph::parse(&g.to_text()).unwrap(), g);
        assert!(matches!(
            DirectedGraph::parse("vertex a\nedge e a zz\n"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            DirectedGraph::parse("vertx a"),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            DirectedGraph::parse("vertex a\nvertex a"),
            Err(GraphError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn cuntz_krieger_products() {
        let g = graph("vertex v\nvertex w\nedge e v w\nedge f v w\n");
        let e = g.edge("e").unwrap();
        let f = g.edge("f").unwrap();
        let se = GraphElement::edge(&g, e);
        let sf = GraphElement::edge(&g, f);
        let pw = GraphElement::projection(&g, g.vertex("w").unwrap());
        assert_eq!(se.adjoint().mul(&se), pw);
        assert!(se.adjoint().mul(&sf).is_zero());
        assert_eq!(se.mul(&pw), se);
        let pv = GraphElement::projection(&g, g.vertex("v").unwrap());
        assert_eq!(pv.mul(&se), se);
        assert!(se.mul(&pv).is_zero());
    }

    #[test]
    fn adjoint_examples() {
        let g = graph("vertex v\nvertex w\nedge e v w\n");
        let pv = GraphElement::projection(&g, 0);
        assert_eq!(pv.adjoint(), pv);
        let mu = Path::from_names(&g, &["e"]).unwrap();
        let se = GraphElement::path(&g, mu.clone());
        let expected =
            GraphElement::from_term(&g, CkTerm::new(Path::vertex(1), mu).unwrap(), one());
        assert_eq!(se.adjoint(), expected);
        let x = se.scale(c64(0.3, 0.7)).add(&pv);
        assert_eq!(x.adjoint().adjoint(), x);
    }

    #[test]
    fn lemma_vertex_commutators() {
        let g = graph("vertex v\nvertex w\nvertex u\nedge e v w\nedge l u u\n");
        let (v, w, u) = (0, 1, 2);
        let se = GraphElement::edge(&g, g.edge("e").unwrap());
        assert_eq!(vertex_commutator(v, &se), se);
        assert_eq!(vertex_commutator(w, &se), se.scale(c64(-1.0, 0.0)));
        assert!(vertex_commutator(u, &se).is_zero());
        let sl = GraphElement::edge(&g, g.edge("l").unwrap());
        assert!(vertex_commutator(u, &sl).is_zero());
    }

    #[test]
    fn closedness() {
        let g = graph("vertex v\nvertex w\nedge e v w\n");
        assert!(CkTerm::projection(0).is_closed());
        let mu = Path::from_names(&g, &["e"]).unwrap();
        assert!(!CkTerm::path(mu.clone()).is_closed());
        assert!(CkTerm::new(mu.clone(), mu).unwrap().is_closed());
    }

    #[test]
    fn full_isometry_line_graph() {
        let line = graph("vertex v1\nvertex v2\nvertex v3\nedge a v1 v2\nedge b v2 v3\n");
        let mu = Path::from_names(&line, &["a", "b"]).unwrap();
        assert!(full_isometry_criterion(&line, &mu).unwrap());
        assert!(verify_full_isometry(&line, &mu));

        let branched = graph(
            "vertex v1\nvertex v2\nvertex v3\nvertex x\nedge a v1 v2\nedge b v2 v3\nedge c v1 x\n",
        );
        let mu = Path::from_names(&branched, &["a", "b"]).unwrap();
        assert!(!full_isometry_criterion(&branched, &mu).unwrap());
        assert!(!verify_full_isometry(&branched, &mu));

        let single = Path::from_names(&line, &["a"]).unwrap();
        assert!(full_isometry_criterion(&line, &single).unwrap());
        assert_eq!(
            full_isometry_criterion(&line, &Path::vertex(0)),
            Err(GraphError::EmptyPath)
        );
    }

    #[test]
    fn exit_at_last_source_breaks_the_identity() {
        // v2 has two exits, so s_{ab} s_{ab}* is strictly below p_{v1}
        let g = graph(
            "vertex v1\nvertex v2\nvertex v3\nvertex y\nedge a v1 v2\nedge b v2 v3\nedge d v2 y\n",
        );
        let mu = Path::from_names(&g, &["a", "b"]).unwrap();
        assert!(!full_isometry_criterion(&g, &mu).unwrap());
        assert!(!verify_full_isometry(&g, &mu));
        let e = Path::from_names(&g, &["b"]).unwrap();
        assert!(!verify_full_isometry(&g, &e));
    }

    #[test]
    fn star_tree_projection_count() {
        for n in 2..7 {
            let mut text = String::from("vertex root\n");
            for i in 1..n {
                text.push_str(&format!("vertex leaf{i}\nedge e{i} leaf{i} root\n"));
            }
            let g = graph(&text);
            let r = h0_report(&g, 2);
            assert_eq!(r.projection_count, Some(n));
            assert!(r.circle_flags.is_empty());
        }
    }

    #[test]
    fn single_vertex_and_loop() {
        let g = graph("vertex v\n");
        let r = h0_report(&g, 3);
        assert_eq!(r.closed_terms.len(), 1);
        assert_eq!(r.projection_count, Some(1));

        let g = graph("vertex v\nedge l v v\n");
        let r = h0_report(&g, 2);
        assert_eq!(r.projection_count, None);
        assert_eq!(r.circle_flags.len(), 1);
        assert_eq!(r.circle_flags[0].loop_edges, vec!["l".to_string()]);

        let g = graph("vertex v\nvertex w\nedge l v v\nedge out v w\n");
        assert!(h0_report(&g, 2).circle_flags.is_empty());
    }

    #[test]
    fn two_cycle_without_exit() {
        let g = graph("vertex a\nvertex b\nvertex c\nedge x a b\nedge y b a\nedge z c a\n");
        let cycles = g.simple_cycles();
        assert_eq!(cycles.len(), 1);
        let r = h0_report(&g, 2);
        assert_eq!(r.circle_flags.len(), 1);
        assert_eq!(
            r.circle_flags[0].vertices,
            vec!["a".to_string(), "b".to_string()]
        );
    }

    #[test]
    fn products_respect_range_condition() {
        let g =
            graph("vertex a\nvertex b\nvertex c\nedge x a b\nedge y b c\nedge z a c\nedge w c a\n");
        let terms: Vec<CkTerm> = {
            let paths = g.paths_up_to(2);
            let mut out = Vec::new();
            for mu in &paths {
                for nu in &paths {
                    if let Ok(t) = CkTerm::new(mu.clone(), nu.clone()) {
                        out.push(t);
                    }
                }
            }
            out
        };
        for t1 in &terms {
            for t2 in &terms {
                if let Some(t) = ck_mul(t1, t2) {
                    assert_eq!(t.mu.end, t.nu.end);
                }
            }
        }
    }

    #[test]
    fn loop_free_detection() {
        assert!(graph("vertex a\nvertex b\nedge x a b\n").is_loop_free());
        assert!(!graph("vertex a\nedge x a a\n").is_loop_free());
    }
}
