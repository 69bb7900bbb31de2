use super::{Admg, CausalDag, GraphError, Vertex, VertexKind, VertexSet};

impl CausalDag {
    /// Latent projection onto the vertices of kind `Observed`.
    pub fn latent_project(&self) -> Result<Admg, GraphError> {
        self.project_onto(self.of_kind(VertexKind::Observed))
    }

    /// Latent projection keeping `observed` plus every selection vertex.
    /// All other vertices are treated as unobserved.
    ///
    /// `O_i -> O_j` is kept iff some directed path from `O_i` to `O_j` has only
    /// unobserved internal vertices. `O_i <-> O_j` is added iff some unobserved
    /// vertex reaches both through such paths.
    pub fn project_onto(&self, observed: VertexSet) -> Result<Admg, GraphError> {
        let sel = self.of_kind(VertexKind::Selection);
        let observed = observed.difference(sel);
        let hidden = VertexSet::full(self.len()).difference(observed).difference(sel);

        for s in sel {
            if let Some(c) = self.children[s].intersection(hidden).first() {
                return Err(GraphError::SelectionIntoLatent {
                    sel: self.name(s).to_string(),
                    child: self.name(c).to_string(),
                });
            }
        }

        let keep = observed.union(sel);
        let old: Vec<usize> = keep.iter().collect();
        let mut remap = vec![usize::MAX; self.len()];
        for (new, &o) in old.iter().enumerate() {
            remap[o] = new;
        }
        let vertices: Vec<Vertex> = old
            .iter()
            .map(|&o| Vertex {
                name: self.vertices[o].name.clone(),
                kind: if sel.contains(o) {
                    VertexKind::Selection
                } else {
                    VertexKind::Observed
                },
            })
            .collect();
        let mut g = Admg::with_vertices(vertices)?;

        for s in sel {
            for c in self.children[s] {
                g.add_directed(remap[s], remap[c]);
            }
        }
        for o in observed {
            for target in self.reach_through(self.children[o], hidden).intersection(observed) {
                g.add_directed(remap[o], remap[target]);
            }
        }
        for u in hidden {
            let reached = self
                .reach_through(self.children[u], hidden)
                .intersection(observed);
            let list: Vec<usize> = reached.iter().collect();
            for (i, &a) in list.iter().enumerate() {
                for &b in &list[i + 1..] {
                    g.add_bidirected(remap[a], remap[b]);
                }
            }
        }
        Ok(g)
    }

    /// Vertices reachable from `start` by directed paths whose internal
    /// vertices all lie in `through`. Includes `start`.
    fn reach_through(&self, start: VertexSet, through: VertexSet) -> VertexSet {
        let mut seen = start;
        let mut frontier = start.intersection(through);
        while !frontier.is_empty() {
            let mut next = VertexSet::empty();
            for v in frontier {
                next = next.union(self.children[v]);
            }
            next = next.difference(seen);
            seen = seen.union(next);
            frontier = next.intersection(through);
        }
        seen
    }
}
