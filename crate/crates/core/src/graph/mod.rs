//! Causal DAGs, acyclic directed mixed graphs and selection diagrams.
//!
//! Vertices are addressed by dense ids in declaration order. An [`Admg`] holds
//! observed and selection vertices; unobserved vertices only live in a
//! [`CausalDag`] and disappear through [`CausalDag::latent_project`].
//!
//! All graph values are immutable once built. Every query is a pure function.

mod dag;
pub mod format;
mod project;
mod separation;
mod set;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use dag::CausalDag;
pub use set::{VertexSet, MAX_VERTICES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex name `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("invalid vertex name `{0}`")]
    InvalidName(String),
    #[error("graph has more than {MAX_VERTICES} vertices")]
    TooManyVertices,
    #[error("directed cycle through `{0}`")]
    Cycle(String),
    #[error("self loop on `{0}`")]
    SelfLoop(String),
    #[error("edge {0} -> {1} is not allowed: {2}")]
    BadEdge(String, String, &'static str),
    #[error("selection vertex `{sel}` points at unobserved vertex `{child}`")]
    SelectionIntoLatent { sel: String, child: String },
    #[error("vertex `{0}` is not observed")]
    NotObserved(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexKind {
    Observed,
    Unobserved,
    Selection,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub name: String,
    pub kind: VertexKind,
}

/// Names must be usable as expression variables and CSV headers.
pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '-')
        && !name.ends_with('\'')
}

/// Edges to strip when building a mutilated graph.
///
/// `overline` vertices lose every incoming directed edge, every incident
/// bidirected edge and every incoming selection edge. `underline` vertices lose
/// every outgoing directed edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MutilationSpec {
    pub overline: VertexSet,
    pub underline: VertexSet,
}

impl MutilationSpec {
    pub fn overline(x: VertexSet) -> Self {
        MutilationSpec {
            overline: x,
            underline: VertexSet::empty(),
        }
    }

    pub fn underline(x: VertexSet) -> Self {
        MutilationSpec {
            overline: VertexSet::empty(),
            underline: x,
        }
    }
}

/// An acyclic directed mixed graph over observed vertices, optionally
/// augmented with root-only selection vertices.
#[derive(Clone, PartialEq, Eq)]
pub struct Admg {
    vertices: Vec<Vertex>,
    index: HashMap<String, usize>,
    parents: Vec<VertexSet>,
    children: Vec<VertexSet>,
    siblings: Vec<VertexSet>,
}

impl fmt::Debug for Admg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format::to_text(self, None))
    }
}

/// Incremental construction of an [`Admg`]; [`AdmgBuilder::build`] validates.
#[derive(Default, Clone, Debug)]
pub struct AdmgBuilder {
    vertices: Vec<Vertex>,
    directed: Vec<(String, String)>,
    bidirected: Vec<(String, String)>,
    selection_edges: Vec<(String, String)>,
}

impl AdmgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observed(mut self, name: &str) -> Self {
        self.vertices.push(Vertex {
            name: name.to_string(),
            kind: VertexKind::Observed,
        });
        self
    }

    pub fn observed_all(mut self, names: &[&str]) -> Self {
        for n in names {
            self = self.observed(n);
        }
        self
    }

    /// Declares a selection vertex (if new) with an edge into `child`.
    pub fn selection(mut self, name: &str, child: &str) -> Self {
        if !self.vertices.iter().any(|v| v.name == name) {
            self.vertices.push(Vertex {
                name: name.to_string(),
                kind: VertexKind::Selection,
            });
        }
        self.selection_edges
            .push((name.to_string(), child.to_string()));
        self
    }

    /// Declares a selection vertex with no children.
    pub fn selection_vertex(mut self, name: &str) -> Self {
        self.vertices.push(Vertex {
            name: name.to_string(),
            kind: VertexKind::Selection,
        });
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.directed.push((from.to_string(), to.to_string()));
        self
    }

    pub fn bidirected(mut self, a: &str, b: &str) -> Self {
        self.bidirected.push((a.to_string(), b.to_string()));
        self
    }

    pub fn build(self) -> Result<Admg, GraphError> {
        let mut g = Admg::with_vertices(self.vertices)?;
        for (a, b) in &self.directed {
            let (i, j) = (g.id(a)?, g.id(b)?);
            g.check_observed(i)?;
            g.check_observed(j)?;
            if i == j {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            g.add_directed(i, j);
        }
        for (a, b) in &self.bidirected {
            let (i, j) = (g.id(a)?, g.id(b)?);
            g.check_observed(i)?;
            g.check_observed(j)?;
            if i == j {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            g.add_bidirected(i, j);
        }
        for (s, c) in &self.selection_edges {
            let (i, j) = (g.id(s)?, g.id(c)?);
            if g.vertices[i].kind != VertexKind::Selection {
                return Err(GraphError::BadEdge(
                    s.clone(),
                    c.clone(),
                    "source is not a selection vertex",
                ));
            }
            g.check_observed(j)?;
            g.add_directed(i, j);
        }
        g.check_acyclic()?;
        Ok(g)
    }
}

impl Admg {
    pub(crate) fn with_vertices(vertices: Vec<Vertex>) -> Result<Self, GraphError> {
        if vertices.len() > MAX_VERTICES {
            return Err(GraphError::TooManyVertices);
        }
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if !valid_name(&v.name) {
                return Err(GraphError::InvalidName(v.name.clone()));
            }
            if v.kind == VertexKind::Unobserved {
                return Err(GraphError::BadEdge(
                    v.name.clone(),
                    v.name.clone(),
                    "an ADMG cannot hold unobserved vertices",
                ));
            }
            if index.insert(v.name.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.name.clone()));
            }
        }
        let n = vertices.len();
        Ok(Admg {
            vertices,
            index,
            parents: vec![VertexSet::empty(); n],
            children: vec![VertexSet::empty(); n],
            siblings: vec![VertexSet::empty(); n],
        })
    }

    pub(crate) fn add_directed(&mut self, from: usize, to: usize) {
        self.parents[to].insert(from);
        self.children[from].insert(to);
    }

    pub(crate) fn add_bidirected(&mut self, a: usize, b: usize) {
        self.siblings[a].insert(b);
        self.siblings[b].insert(a);
    }

    fn check_observed(&self, v: usize) -> Result<(), GraphError> {
        if self.vertices[v].kind == VertexKind::Observed {
            Ok(())
        } else {
            Err(GraphError::NotObserved(self.vertices[v].name.clone()))
        }
    }

    fn check_acyclic(&self) -> Result<(), GraphError> {
        let order = self.topological_order_within(self.all());
        if order.len() == self.len() {
            return Ok(());
        }
        let placed: VertexSet = order.into_iter().collect();
        let stuck = self.all().difference(placed).first().unwrap_or(0);
        Err(GraphError::Cycle(self.vertices[stuck].name.clone()))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn name(&self, v: usize) -> &str {
        &self.vertices[v].name
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.vertices[v].kind
    }

    pub fn id(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    /// Resolves a list of names into a set.
    pub fn set<S: AsRef<str>>(&self, names: &[S]) -> Result<VertexSet, GraphError> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    /// Names of a set, in declaration order.
    pub fn names(&self, s: VertexSet) -> Vec<String> {
        s.iter().map(|v| self.vertices[v].name.clone()).collect()
    }

    pub fn all(&self) -> VertexSet {
        VertexSet::full(self.len())
    }

    pub fn observed(&self) -> VertexSet {
        self.of_kind(VertexKind::Observed)
    }

    pub fn selection(&self) -> VertexSet {
        self.of_kind(VertexKind::Selection)
    }

    fn of_kind(&self, kind: VertexKind) -> VertexSet {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Directed edges among observed vertices, as `(from, to)` pairs.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let obs = self.observed();
        obs.iter()
            .flat_map(|v| {
                self.children[v]
                    .intersection(obs)
                    .iter()
                    .map(move |c| (v, c))
            })
            .collect()
    }

    /// Bidirected edges as `(a, b)` pairs with `a < b`.
    pub fn bidirected_edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|a| {
                self.siblings[a]
                    .iter()
                    .filter(move |&b| b > a)
                    .map(move |b| (a, b))
            })
            .collect()
    }

    /// Selection edges as `(selection, child)` pairs.
    pub fn selection_edges(&self) -> Vec<(usize, usize)> {
        self.selection()
            .iter()
            .flat_map(|s| self.children[s].iter().map(move |c| (s, c)))
            .collect()
    }

    pub fn parents_of(&self, v: usize) -> VertexSet {
        self.parents[v]
    }

    pub fn children_of(&self, v: usize) -> VertexSet {
        self.children[v]
    }

    pub fn siblings_of(&self, v: usize) -> VertexSet {
        self.siblings[v]
    }

    /// `pa(s)`, excluding `s` itself.
    pub fn parents(&self, s: VertexSet) -> VertexSet {
        s.iter()
            .fold(VertexSet::empty(), |acc, v| acc.union(self.parents[v]))
            .difference(s)
    }

    /// `ch(s)`, excluding `s` itself.
    pub fn children(&self, s: VertexSet) -> VertexSet {
        s.iter()
            .fold(VertexSet::empty(), |acc, v| acc.union(self.children[v]))
            .difference(s)
    }

    /// `an(s)`, including `s`.
    pub fn ancestors(&self, s: VertexSet) -> VertexSet {
        self.ancestors_within(s, self.all())
    }

    /// `de(s)`, including `s`.
    pub fn descendants(&self, s: VertexSet) -> VertexSet {
        let mut seen = s;
        let mut frontier = s;
        while !frontier.is_empty() {
            let next = self.children(frontier).difference(seen);
            seen = seen.union(next);
            frontier = next;
        }
        seen
    }

    /// Ancestors of `s` in the subgraph induced by `within` (reflexive).
    pub fn ancestors_within(&self, s: VertexSet, within: VertexSet) -> VertexSet {
        let s = s.intersection(within);
        let mut seen = s;
        let mut frontier = s;
        while !frontier.is_empty() {
            let mut next = VertexSet::empty();
            for v in frontier {
                next = next.union(self.parents[v]);
            }
            next = next.intersection(within).difference(seen);
            seen = seen.union(next);
            frontier = next;
        }
        seen
    }

    /// Topological order of the subgraph induced by `within`; ties go to the
    /// earliest declared vertex. Shorter than `within` iff there is a cycle.
    pub fn topological_order_within(&self, within: VertexSet) -> Vec<usize> {
        let mut remaining = within;
        let mut order = Vec::with_capacity(within.len());
        loop {
            let next = remaining
                .iter()
                .find(|&v| self.parents[v].intersection(remaining).is_empty());
            match next {
                Some(v) => {
                    order.push(v);
                    remaining.remove(v);
                }
                None => break,
            }
        }
        order
    }

    pub fn topological_order(&self) -> Vec<usize> {
        self.topological_order_within(self.all())
    }

    /// C-components of the subgraph induced by `restrict`, ordered by their
    /// smallest member.
    pub fn c_components(&self, restrict: VertexSet) -> Vec<VertexSet> {
        let mut left = restrict;
        let mut out = Vec::new();
        while let Some(start) = left.first() {
            let comp = self.c_component_of(start, restrict);
            left = left.difference(comp);
            out.push(comp);
        }
        out
    }

    /// The c-component containing `v` in the subgraph induced by `restrict`.
    pub fn c_component_of(&self, v: usize, restrict: VertexSet) -> VertexSet {
        let mut comp = VertexSet::singleton(v);
        let mut frontier = comp;
        while !frontier.is_empty() {
            let mut next = VertexSet::empty();
            for u in frontier {
                next = next.union(self.siblings[u]);
            }
            next = next.intersection(restrict).difference(comp);
            comp = comp.union(next);
            frontier = next;
        }
        comp
    }

    /// Returns a copy with the edges named by `spec` removed.
    pub fn mutilate(&self, spec: &MutilationSpec) -> Admg {
        let mut g = self.clone();
        for v in spec.overline {
            for p in self.parents[v] {
                g.children[p].remove(v);
            }
            g.parents[v] = VertexSet::empty();
            for s in self.siblings[v] {
                g.siblings[s].remove(v);
            }
            g.siblings[v] = VertexSet::empty();
        }
        for v in spec.underline {
            for c in g.children[v] {
                g.parents[c].remove(v);
            }
            g.children[v] = VertexSet::empty();
        }
        g
    }

    /// The ADMG with every selection vertex and selection edge dropped.
    /// Observed ids are renumbered densely.
    pub fn without_selection(&self) -> Admg {
        if self.selection().is_empty() {
            return self.clone();
        }
        self.induced(self.observed())
    }

    /// Subgraph induced by `keep`, with ids renumbered in declaration order.
    pub fn induced(&self, keep: VertexSet) -> Admg {
        let old: Vec<usize> = keep.iter().collect();
        let mut remap = vec![usize::MAX; self.len()];
        for (new, &o) in old.iter().enumerate() {
            remap[o] = new;
        }
        let vertices = old.iter().map(|&o| self.vertices[o].clone()).collect();
        let mut g = Admg::with_vertices(vertices).expect("subset of a valid graph");
        for &o in &old {
            for c in self.children[o].intersection(keep) {
                g.add_directed(remap[o], remap[c]);
            }
            for s in self.siblings[o].intersection(keep) {
                g.add_bidirected(remap[o], remap[s]);
            }
        }
        g
    }

    /// Splits every multi-child selection vertex into one vertex per child and
    /// drops childless ones. The observed subgraph is untouched.
    ///
    /// A split vertex `S` with child `A` is named `S_A`, with a numeric suffix
    /// added if that name is taken.
    pub fn normalize_selection(&self) -> Admg {
        let sel = self.selection();
        if sel.iter().all(|s| self.children[s].len() == 1) {
            return self.clone();
        }
        let mut vertices: Vec<Vertex> = Vec::new();
        let mut sel_edges: Vec<(String, String)> = Vec::new();
        let mut taken: std::collections::HashSet<String> =
            self.vertices.iter().map(|v| v.name.clone()).collect();
        for (i, v) in self.vertices.iter().enumerate() {
            match v.kind {
                VertexKind::Selection => {
                    let kids = self.children[i];
                    match kids.len() {
                        0 => {}
                        1 => {
                            vertices.push(v.clone());
                            sel_edges.push((v.name.clone(), self.name(kids.first().unwrap()).into()));
                        }
                        _ => {
                            for c in kids {
                                let child = self.name(c);
                                let mut name = format!("{}_{}", v.name, child);
                                let mut k = 2;
                                while taken.contains(&name) {
                                    name = format!("{}_{}_{}", v.name, child, k);
                                    k += 1;
                                }
                                taken.insert(name.clone());
                                vertices.push(Vertex {
                                    name: name.clone(),
                                    kind: VertexKind::Selection,
                                });
                                sel_edges.push((name, child.to_string()));
                            }
                        }
                    }
                }
                _ => vertices.push(v.clone()),
            }
        }
        let mut g = Admg::with_vertices(vertices).expect("names were made unique");
        for (a, b) in self.directed_edges() {
            let (i, j) = (g.index[self.name(a)], g.index[self.name(b)]);
            g.add_directed(i, j);
        }
        for (a, b) in self.bidirected_edges() {
            let (i, j) = (g.index[self.name(a)], g.index[self.name(b)]);
            g.add_bidirected(i, j);
        }
        for (s, c) in sel_edges {
            let (i, j) = (g.index[&s], g.index[&c]);
            g.add_directed(i, j);
        }
        g
    }

    /// Mutable variables: the children of the selection vertices.
    pub fn mutable_set(&self) -> VertexSet {
        self.children(self.selection())
    }

    /// True iff `x` and `y` are m-separated given `z`.
    ///
    /// Each bidirected edge is replaced by a fresh hidden common parent and
    /// ordinary d-separation is run on the result. Selection vertices are
    /// treated as parentless vertices.
    pub fn m_separated(&self, x: VertexSet, y: VertexSet, z: VertexSet) -> bool {
        separation::m_separated(self, x, y, z)
    }
}
