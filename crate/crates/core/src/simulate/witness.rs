//! Pairs of binary models that agree observationally but disagree on an
//! interventional query, demonstrating that the query is not identifiable.

use super::discrete::{dag_for_admg, DiscreteSem};
use super::SimError;
use crate::graph::{Admg, AdmgBuilder, CausalDag};

/// Two models over the same graph with equal observational joints.
#[derive(Clone, Debug)]
pub struct WitnessPair {
    pub graph: Admg,
    pub intervene: Vec<String>,
    pub outcome: Vec<String>,
    pub first: DiscreteSem,
    pub second: DiscreteSem,
}

impl WitnessPair {
    /// Largest absolute difference between the two observational joints.
    pub fn observational_gap(&self) -> Result<f64, SimError> {
        Ok(self
            .first
            .observational_joint()?
            .max_abs_diff(&self.second.observational_joint()?))
    }

    /// Largest total-variation distance between the two interventional
    /// distributions, over every value of the intervened variables.
    pub fn interventional_gap(&self) -> Result<f64, SimError> {
        let mut worst: f64 = 0.0;
        let n_x = 1usize << self.intervene.len();
        for xi in 0..n_x {
            let x: Vec<(String, usize)> = self
                .intervene
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), (xi >> (self.intervene.len() - 1 - i)) & 1))
                .collect();
            let a = self.first.oracle_interventional(&x, &self.outcome)?;
            let b = self.second.oracle_interventional(&x, &self.outcome)?;
            let tv = 0.5 * a.values().iter().zip(b.values()).map(|(p, q)| (p - q).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
        Ok(worst)
    }
}

/// Binary model in which every vertex copies one parent (`None`: fair coin).
fn copying_model(dag: CausalDag, copies: &[(&str, Option<&str>)]) -> Result<DiscreteSem, SimError> {
    let mut cpt = Vec::with_capacity(dag.len());
    for v in 0..dag.len() {
        let parents: Vec<usize> = dag.parents_of(v).iter().collect();
        let source = copies
            .iter()
            .find(|(n, _)| *n == dag.name(v))
            .ok_or_else(|| SimError::BadTable(dag.name(v).to_string()))?
            .1;
        let k = match source {
            None => None,
            Some(p) => Some(
                parents
                    .iter()
                    .position(|&q| dag.name(q) == p)
                    .ok_or_else(|| SimError::BadTable(format!("{} has no parent {p}", dag.name(v))))?,
            ),
        };
        let mut table = Vec::with_capacity(2 << parents.len());
        for row in 0..1usize << parents.len() {
            match k {
                None => table.extend([0.5, 0.5]),
                Some(k) => {
                    let bit = (row >> (parents.len() - 1 - k)) & 1;
                    table.extend(if bit == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
                }
            }
        }
        cpt.push(table);
    }
    let card = vec![2; dag.len()];
    DiscreteSem::from_tables(dag, card, cpt)
}

/// Bow graph `X -> Y`, `X <-> Y`: `Y` copies the confounder in one model and
/// `X` in the other; `P_X(Y)` differs.
pub fn bow_witness() -> Result<WitnessPair, SimError> {
    let graph = AdmgBuilder::new()
        .observed_all(&["X", "Y"])
        .edge("X", "Y")
        .bidirected("X", "Y")
        .build()?;
    let dag = dag_for_admg(&graph);
    let first = copying_model(dag.clone(), &[("U_X_Y", None), ("X", Some("U_X_Y")), ("Y", Some("U_X_Y"))])?;
    let second = copying_model(dag, &[("U_X_Y", None), ("X", Some("U_X_Y")), ("Y", Some("X"))])?;
    Ok(WitnessPair {
        graph,
        intervene: vec!["X".into()],
        outcome: vec!["Y".into()],
        first,
        second,
    })
}

/// `X -> T -> Y`, `X <-> T`, `S -> X`: the query `P_X(T)` sits on a bow.
pub fn instrument_witness() -> Result<WitnessPair, SimError> {
    let graph = AdmgBuilder::new()
        .observed_all(&["X", "T", "Y"])
        .edge("X", "T")
        .edge("T", "Y")
        .bidirected("X", "T")
        .selection("S", "X")
        .build()?;
    let dag = dag_for_admg(&graph);
    let shared = [("U_X_T", None), ("X", Some("U_X_T")), ("Y", Some("T"))];
    let mut a = shared.to_vec();
    a.push(("T", Some("U_X_T")));
    let mut b = shared.to_vec();
    b.push(("T", Some("X")));
    Ok(WitnessPair {
        graph,
        intervene: vec!["X".into()],
        outcome: vec!["T".into()],
        first: copying_model(dag.clone(), &a)?,
        second: copying_model(dag, &b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_agree_observationally_and_differ_by_one_half() {
        for w in [bow_witness().unwrap(), instrument_witness().unwrap()] {
            assert_eq!(w.observational_gap().unwrap(), 0.0);
            assert!((w.interventional_gap().unwrap() - 0.5).abs() < 1e-12);
        }
    }
}
