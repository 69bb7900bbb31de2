use rand::Rng;

use super::SimError;
use crate::estimate::{Column, Dataset};
use crate::graph::{Admg, CausalDag, Vertex, VertexKind, VertexSet};
use crate::identify::Table;

/// Largest joint state space enumerated exactly.
pub const MAX_STATES: usize = 1 << 20;

/// A discrete structural model over a DAG with latent vertices.
///
/// Each vertex has a conditional probability table indexed by the joint state
/// of its parents (in id order, last parent fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSem {
    dag: CausalDag,
    card: Vec<usize>,
    cpt: Vec<Vec<f64>>,
}

/// The DAG that realizes an ADMG: its observed vertices and directed edges
/// plus one latent common parent `U_a_b` per bidirected edge `a <-> b`.
/// Selection vertices are dropped.
pub fn dag_for_admg(g: &Admg) -> CausalDag {
    let mut vertices: Vec<Vertex> = g
        .observed()
        .iter()
        .map(|v| Vertex {
            name: g.name(v).to_string(),
            kind: VertexKind::Observed,
        })
        .collect();
    let mut edges: Vec<(String, String)> = g
        .directed_edges()
        .into_iter()
        .map(|(a, b)| (g.name(a).to_string(), g.name(b).to_string()))
        .collect();
    for (a, b) in g.bidirected_edges() {
        let (a, b) = (g.name(a), g.name(b));
        let mut name = format!("U_{a}_{b}");
        while vertices.iter().any(|v| v.name == name) {
            name.push('_');
        }
        vertices.push(Vertex {
            name: name.clone(),
            kind: VertexKind::Unobserved,
        });
        edges.push((name.clone(), a.to_string()));
        edges.push((name, b.to_string()));
    }
    CausalDag::new(vertices, &edges).expect("an ADMG always has a realizing DAG")
}

fn random_distribution<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

impl DiscreteSem {
    /// A model with every CPT row drawn at random and strictly positive.
    pub fn random_positive<R: Rng + ?Sized>(dag: CausalDag, card: usize, rng: &mut R) -> Result<Self, SimError> {
        if dag.vertices().iter().any(|v| v.kind == VertexKind::Selection) {
            return Err(SimError::SelectionInModel);
        }
        let card = vec![card; dag.len()];
        let mut sem = DiscreteSem {
            cpt: vec![Vec::new(); dag.len()],
            dag,
            card,
        };
        for v in 0..sem.dag.len() {
            sem.cpt[v] = sem.random_cpt(v, rng);
        }
        Ok(sem)
    }

    /// A model with given tables. `cpt[v]` has one row of `card[v]` entries per
    /// parent state.
    pub fn from_tables(dag: CausalDag, card: Vec<usize>, cpt: Vec<Vec<f64>>) -> Result<Self, SimError> {
        let sem = DiscreteSem { dag, card, cpt };
        for v in 0..sem.dag.len() {
            let rows = sem.parent_states(v);
            if sem.cpt[v].len() != rows * sem.card[v] {
                return Err(SimError::BadTable(sem.dag.name(v).to_string()));
            }
            for r in sem.cpt[v].chunks(sem.card[v]) {
                if (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 || r.iter().any(|&p| p < 0.0) {
                    return Err(SimError::BadTable(sem.dag.name(v).to_string()));
                }
            }
        }
        Ok(sem)
    }

    fn random_cpt<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> Vec<f64> {
        (0..self.parent_states(v))
            .flat_map(|_| random_distribution(self.card[v], rng))
            .collect()
    }

    fn parent_states(&self, v: usize) -> usize {
        self.dag.parents_of(v).iter().map(|p| self.card[p]).product()
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn cpt(&self, v: usize) -> &[f64] {
        &self.cpt[v]
    }

    /// Copy with the mechanism of `var` redrawn; every other table is shared bit for bit.
    pub fn with_new_mechanism<R: Rng + ?Sized>(&self, var: &str, rng: &mut R) -> Result<Self, SimError> {
        let v = self.dag.id(var)?;
        let mut out = self.clone();
        out.cpt[v] = self.random_cpt(v, rng);
        Ok(out)
    }

    fn observed(&self) -> Vec<usize> {
        self.dag.of_kind(VertexKind::Observed).iter().collect()
    }

    fn state_space(&self) -> Result<usize, SimError> {
        let mut n: usize = 1;
        for &c in &self.card {
            n = n.checked_mul(c).filter(|&n| n <= MAX_STATES).ok_or(SimError::StateSpaceTooLarge)?;
        }
        Ok(n)
    }

    fn prob(&self, v: usize, state: &[usize]) -> f64 {
        let row = self
            .dag
            .parents_of(v)
            .iter()
            .fold(0, |acc, p| acc * self.card[p] + state[p]);
        self.cpt[v][row * self.card[v] + state[v]]
    }

    /// Sum of `∏_{v ∉ clamped} P(v | pa(v))` over all states consistent with
    /// `clamp`, accumulated onto the variables `keep`.
    fn truncated(&self, clamp: &[(usize, usize)], keep: &[usize]) -> Result<Vec<f64>, SimError> {
        let total = self.state_space()?;
        let clamped: VertexSet = clamp.iter().map(|&(v, _)| v).collect();
        let out_len: usize = keep.iter().map(|&k| self.card[k]).product();
        let mut out = vec![0.0; out_len];
        let mut state = vec![0usize; self.dag.len()];
        let order = self.dag.topological_order();
        'outer: for _ in 0..total {
            let consistent = clamp.iter().all(|&(v, s)| state[v] == s);
            if consistent {
                let mut w = 1.0;
                for &v in &order {
                    if !clamped.contains(v) {
                        w *= self.prob(v, &state);
                    }
                }
                let idx = keep.iter().fold(0, |acc, &k| acc * self.card[k] + state[k]);
                out[idx] += w;
            }
            for i in (0..state.len()).rev() {
                state[i] += 1;
                if state[i] < self.card[i] {
                    continue 'outer;
                }
                state[i] = 0;
            }
        }
        Ok(out)
    }

    fn ids(&self, names: &[String]) -> Result<Vec<usize>, SimError> {
        names.iter().map(|n| Ok(self.dag.id(n)?)).collect()
    }

    /// Exact joint over the observed vertices, in declaration order.
    pub fn observational_joint(&self) -> Result<Table, SimError> {
        let obs = self.observed();
        let values = self.truncated(&[], &obs)?;
        Ok(Table::new(
            obs.iter().map(|&v| self.dag.name(v).to_string()).collect(),
            obs.iter().map(|&v| self.card[v]).collect(),
            values,
        ))
    }

    /// `P_x(outcome)` by truncated factorization with `x` clamped.
    pub fn oracle_interventional(&self, x: &[(String, usize)], outcome: &[String]) -> Result<Table, SimError> {
        let clamp: Vec<(usize, usize)> = x
            .iter()
            .map(|(n, s)| Ok((self.dag.id(n)?, *s)))
            .collect::<Result<_, SimError>>()?;
        let keep = self.ids(outcome)?;
        let values = self.truncated(&clamp, &keep)?;
        Ok(Table::new(
            outcome.to_vec(),
            keep.iter().map(|&v| self.card[v]).collect(),
            values,
        ))
    }

    /// `P_x(outcome)` for every value of `x`, as a table over `outcome ∪ x`.
    pub fn oracle_table(&self, x: &[String], outcome: &[String]) -> Result<Table, SimError> {
        let xs = self.ids(x)?;
        let ys = self.ids(outcome)?;
        let mut vars: Vec<String> = outcome.to_vec();
        vars.extend(x.iter().cloned());
        let card: Vec<usize> = ys.iter().chain(&xs).map(|&v| self.card[v]).collect();
        let nx: usize = xs.iter().map(|&v| self.card[v]).product();
        let ny: usize = ys.iter().map(|&v| self.card[v]).product();
        let mut slices = Vec::with_capacity(nx);
        let mut xstate = vec![0usize; xs.len()];
        for _ in 0..nx {
            let clamp: Vec<(usize, usize)> = xs.iter().copied().zip(xstate.iter().copied()).collect();
            slices.push(self.truncated(&clamp, &ys)?);
            for i in (0..xstate.len()).rev() {
                xstate[i] += 1;
                if xstate[i] < self.card[xs[i]] {
                    break;
                }
                xstate[i] = 0;
            }
        }
        // outcome-major layout with x fastest
        let mut values = Vec::with_capacity(nx * ny);
        for yi in 0..ny {
            for s in &slices {
                values.push(s[yi]);
            }
        }
        Ok(Table::new(vars, card, values))
    }

    /// Ancestral sampling of the observed vertices.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        let order = self.dag.topological_order();
        let obs = self.observed();
        let mut codes: Vec<Vec<usize>> = vec![Vec::with_capacity(n); self.dag.len()];
        let mut state = vec![0usize; self.dag.len()];
        for _ in 0..n {
            for &v in &order {
                let row = self
                    .dag
                    .parents_of(v)
                    .iter()
                    .fold(0, |acc, p| acc * self.card[p] + state[p]);
                let probs = &self.cpt[v][row * self.card[v]..(row + 1) * self.card[v]];
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut s = probs.len() - 1;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        s = k;
                        break;
                    }
                }
                state[v] = s;
            }
            for &v in &obs {
                codes[v].push(state[v]);
            }
        }
        let columns = obs
            .iter()
            .map(|&v| Column::categorical(self.dag.name(v), self.card[v], std::mem::take(&mut codes[v])))
            .collect();
        Dataset::new(columns).expect("columns have equal length")
    }
}
