//! Runs the surgery search on a binary version of the diagnosis example and
//! compares the chosen estimator with the full conditional `P(T|A,C)` in
//! environments with a different prescription policy `P(A|K)`.

use std::collections::HashMap;

use graph_surgery::estimate::{fit, FitConfig};
use graph_surgery::graph::format::read_graph_file;
use graph_surgery::graph::CausalDag;
use graph_surgery::identify::parse_expr;
use graph_surgery::simulate::{dag_for_admg, DiscreteSem};
use graph_surgery::surgery::{pruning_search, surgery_search, SearchConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Binary model from `P(v = 1 | parents)` given by name.
fn binary_sem(dag: &CausalDag, p_one: impl Fn(&str, &HashMap<&str, f64>) -> f64) -> DiscreteSem {
    let mut cpt = Vec::new();
    for v in 0..dag.len() {
        let parents: Vec<usize> = dag.parents_of(v).iter().collect();
        let mut table = Vec::new();
        for row in 0..1usize << parents.len() {
            let values: HashMap<&str, f64> = parents
                .iter()
                .enumerate()
                .map(|(i, &p)| (dag.name(p), ((row >> (parents.len() - 1 - i)) & 1) as f64))
                .collect();
            let p = p_one(dag.name(v), &values);
            table.extend([1.0 - p, p]);
        }
        cpt.push(table);
    }
    DiscreteSem::from_tables(dag.clone(), vec![2; dag.len()], cpt).expect("valid tables")
}

/// Smoker `K` raises cancer `T` and, with strength `policy`, aspirin `A`.
fn diagnosis(dag: &CausalDag, policy: f64) -> DiscreteSem {
    binary_sem(dag, |v, pa| match v {
        "T" => 0.2 + 0.6 * pa.values().sum::<f64>(),
        "A" => 0.5 + policy * (pa.values().sum::<f64>() - 0.5),
        "C" => 0.1 + 0.6 * pa["T"] + 0.25 * pa["A"],
        _ => 0.5,
    })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/graphs/diagnosis_latent.graph");
    let g = read_graph_file(path.as_ref())?.graph;
    let t = g.id("T")?;
    println!("stable conditioning sets: {:?}", pruning_search(&g, t));

    let dag = dag_for_admg(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let source = diagnosis(&dag, 0.8);
    let train = source.sample(5_000, &mut rng);
    let valid = source.sample(1_000, &mut rng);

    let cfg = FitConfig::new(7);
    let res = surgery_search(&g, t, &train, &valid, &cfg, &SearchConfig::default())?;
    for c in &res.all_candidates {
        println!("Z={:?} do{:?}: {}  loss {:.4}", c.conditioning, c.intervene, c.expr, c.validation_loss);
    }
    println!("chosen: {}", res.chosen.expr);
    let surgery = res.chosen.predictor.as_ref().expect("chosen is fitted");
    let full = fit(&parse_expr("P(T|A,C)")?, "T", &train, &cfg)?;

    println!("\npolicy   surgery NLL   P(T|A,C) NLL");
    for policy in [0.8, 0.4, 0.0, -0.4, -0.8] {
        let test = diagnosis(&dag, policy).sample(5_000, &mut rng);
        println!("{policy:>6}   {:>11.4}   {:>12.4}", surgery.loss(&test)?, full.loss(&test)?);
    }
    Ok(())
}
