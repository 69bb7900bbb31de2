use std::collections::HashMap;

use super::{valid_name, GraphError, Vertex, VertexKind, VertexSet, MAX_VERTICES};

/// A causal DAG over observed, unobserved and selection vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalDag {
    pub(super) vertices: Vec<Vertex>,
    index: HashMap<String, usize>,
    pub(super) parents: Vec<VertexSet>,
    pub(super) children: Vec<VertexSet>,
}

impl CausalDag {
    /// Builds a DAG from declared vertices and `(from, to)` edges by name.
    pub fn new(vertices: Vec<Vertex>, edges: &[(String, String)]) -> Result<Self, GraphError> {
        if vertices.len() > MAX_VERTICES {
            return Err(GraphError::TooManyVertices);
        }
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if !valid_name(&v.name) {
                return Err(GraphError::InvalidName(v.name.clone()));
            }
            if index.insert(v.name.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.name.clone()));
            }
        }
        let n = vertices.len();
        let mut dag = CausalDag {
            vertices,
            index,
            parents: vec![VertexSet::empty(); n],
            children: vec![VertexSet::empty(); n],
        };
        for (a, b) in edges {
            let (i, j) = (dag.id(a)?, dag.id(b)?);
            if i == j {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            if dag.vertices[j].kind == VertexKind::Selection {
                return Err(GraphError::BadEdge(
                    a.clone(),
                    b.clone(),
                    "selection vertices cannot have parents",
                ));
            }
            dag.parents[j].insert(i);
            dag.children[i].insert(j);
        }
        let order = dag.topological_order();
        if order.len() != n {
            let placed: VertexSet = order.into_iter().collect();
            let stuck = VertexSet::full(n).difference(placed).first().unwrap_or(0);
            return Err(GraphError::Cycle(dag.vertices[stuck].name.clone()));
        }
        Ok(dag)
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

    pub fn parents_of(&self, v: usize) -> VertexSet {
        self.parents[v]
    }

    pub fn children_of(&self, v: usize) -> VertexSet {
        self.children[v]
    }

    pub fn of_kind(&self, kind: VertexKind) -> VertexSet {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Edges as `(from, to)` pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|v| self.children[v].iter().map(move |c| (v, c)))
            .collect()
    }

    /// Topological order with ties broken by declaration order.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut remaining = VertexSet::full(self.len());
        let mut order = Vec::with_capacity(self.len());
        while let Some(v) = remaining
            .iter()
            .find(|&v| self.parents[v].intersection(remaining).is_empty())
        {
            order.push(v);
            remaining.remove(v);
        }
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str, kind: VertexKind) -> Vertex {
        Vertex {
            name: name.into(),
            kind,
        }
    }

    #[test]
    fn rejects_selection_parents_and_cycles() {
        let vs = vec![v("A", VertexKind::Observed), v("S", VertexKind::Selection)];
        let err = CausalDag::new(vs, &[("A".into(), "S".into())]).unwrap_err();
        assert!(matches!(err, GraphError::BadEdge(..)));
        let vs = vec![v("A", VertexKind::Observed), v("U", VertexKind::Unobserved)];
        let err = CausalDag::new(
            vs,
            &[("A".into(), "U".into()), ("U".into(), "A".into())],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Cycle(_)));
    }
}
