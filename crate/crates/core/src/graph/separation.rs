use super::{Admg, VertexSet};

/// Plain DAG used for d-separation: the ADMG's vertices followed by one
/// hidden parent per bidirected edge.
struct Canonical {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Canonical {
    fn from_admg(g: &Admg) -> Self {
        let n = g.len();
        let bi = g.bidirected_edges();
        let total = n + bi.len();
        let mut parents = vec![Vec::new(); total];
        let mut children = vec![Vec::new(); total];
        for v in 0..n {
            for c in g.children_of(v) {
                parents[c].push(v);
                children[v].push(c);
            }
        }
        for (k, (a, b)) in bi.into_iter().enumerate() {
            let l = n + k;
            children[l].extend([a, b]);
            parents[a].push(l);
            parents[b].push(l);
        }
        Canonical { parents, children }
    }

    /// Vertices connected to `x` by an active trail given `z`.
    fn reachable(&self, x: &[usize], z: &[bool]) -> Vec<bool> {
        let total = self.parents.len();
        // ancestors of z, reflexive
        let mut anc_z = z.to_vec();
        let mut stack: Vec<usize> = (0..total).filter(|&v| z[v]).collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc_z[p] {
                    anc_z[p] = true;
                    stack.push(p);
                }
            }
        }

        // (vertex, arrived_from_child)
        let mut visited = vec![[false; 2]; total];
        let mut reached = vec![false; total];
        let mut queue: Vec<(usize, bool)> = x.iter().map(|&v| (v, true)).collect();
        while let Some((v, up)) = queue.pop() {
            let slot = usize::from(up);
            if visited[v][slot] {
                continue;
            }
            visited[v][slot] = true;
            if !z[v] {
                reached[v] = true;
            }
            if up {
                if !z[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !z[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
                if anc_z[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        reached
    }
}

pub(super) fn m_separated(g: &Admg, x: VertexSet, y: VertexSet, z: VertexSet) -> bool {
    let x = x.difference(z);
    let y = y.difference(z);
    if x.is_empty() || y.is_empty() {
        return true;
    }
    if !x.is_disjoint(y) {
        return false;
    }
    let c = Canonical::from_admg(g);
    let mut zmask = vec![false; c.parents.len()];
    for v in z {
        zmask[v] = true;
    }
    let xs: Vec<usize> = x.iter().collect();
    let reached = c.reachable(&xs, &zmask);
    y.iter().all(|v| !reached[v])
}
