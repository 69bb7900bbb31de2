use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Admg, AdmgBuilder};

/// Parameters of the random selection-diagram generator.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub min_observed: usize,
    pub max_observed: usize,
    /// Probability of each forward directed edge.
    pub p_directed: f64,
    /// Probability of a bidirected edge between non-adjacent vertices.
    pub p_bidirected: f64,
    /// Graphs with more bidirected edges are redrawn.
    pub max_bidirected: usize,
    pub max_selection: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_observed: 2,
            max_observed: 6,
            p_directed: 0.4,
            p_bidirected: 0.2,
            max_bidirected: 3,
            max_selection: 2,
        }
    }
}

/// Draws a random selection ADMG.
///
/// Vertices are named `V1..Vn` in declaration order; the topological order is
/// a random permutation of them. Selection vertices `S1, S2` each point at a
/// uniformly chosen observed vertex.
pub fn random_admg<R: Rng + ?Sized>(cfg: &CorpusConfig, rng: &mut R) -> Admg {
    loop {
        let n = rng.random_range(cfg.min_observed..=cfg.max_observed);
        let names: Vec<String> = (1..=n).map(|i| format!("V{i}")).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut adjacent = vec![vec![false; n]; n];
        let mut b = AdmgBuilder::new();
        for name in &names {
            b = b.observed(name);
        }
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(cfg.p_directed) {
                    let (a, c) = (order[i], order[j]);
                    adjacent[a][c] = true;
                    adjacent[c][a] = true;
                    b = b.edge(&names[a], &names[c]);
                }
            }
        }
        let mut n_bi = 0;
        for a in 0..n {
            for c in a + 1..n {
                if !adjacent[a][c] && rng.random_bool(cfg.p_bidirected) {
                    n_bi += 1;
                    b = b.bidirected(&names[a], &names[c]);
                }
            }
        }
        if n_bi > cfg.max_bidirected {
            continue;
        }
        let n_sel = rng.random_range(0..=cfg.max_selection);
        for k in 1..=n_sel {
            let child = rng.random_range(0..n);
            b = b.selection(&format!("S{k}"), &names[child]);
        }
        return b.build().expect("generator emits valid graphs");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_limits() {
        let cfg = CorpusConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let g = random_admg(&cfg, &mut rng);
            assert!(g.observed().len() <= 6);
            assert!(g.bidirected_edges().len() <= 3);
            assert!(g.selection().len() <= 2);
            for (a, b) in g.bidirected_edges() {
                assert!(!g.children_of(a).contains(b) && !g.children_of(b).contains(a));
            }
        }
    }
}
