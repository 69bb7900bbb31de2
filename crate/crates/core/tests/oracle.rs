mod common;

use graph_surgery::graph::VertexSet;
use graph_surgery::identify::{evaluate_discrete, id};
use graph_surgery::simulate::{dag_for_admg, random_admg, CorpusConfig, DiscreteSem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn identified_queries_match_truncated_factorization() {
    let rep = common::oracle_suite(240, 11);
    println!(
        "{} pairs, {} queries, {} identified, {} conditional identified, max diff {:.2e}, {:?}",
        rep.pairs, rep.queries, rep.identified, rep.conditional_identified, rep.max_diff, rep.elapsed
    );
    assert!(rep.max_diff < 1e-9, "{:?}", rep.worst);
    assert!(rep.identified > 200);
    assert!(rep.conditional_identified > 50);
}

#[test]
fn empty_intervention_is_the_observational_marginal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let g = random_admg(&CorpusConfig::default(), &mut rng);
        let sem = DiscreteSem::random_positive(dag_for_admg(&g), 2, &mut rng).unwrap();
        let joint = sem.observational_joint().unwrap();
        let y: Vec<String> = g.names(g.observed()).into_iter().filter(|_| rng.random_bool(0.5)).collect();
        if y.is_empty() {
            continue;
        }
        let o = sem.oracle_table(&[], &y).unwrap();
        assert!(o.max_abs_diff(&joint.marginal(&y)) < 1e-12);
    }
}

#[test]
fn intervening_on_an_unconfounded_root_equals_conditioning() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    while checked < 30 {
        let g = random_admg(&CorpusConfig::default(), &mut rng);
        let Some(r) = g
            .observed()
            .iter()
            .find(|&v| g.parents_of(v).is_empty() && g.siblings_of(v).is_empty())
        else {
            continue;
        };
        let sem = DiscreteSem::random_positive(dag_for_admg(&g), 2, &mut rng).unwrap();
        let joint = sem.observational_joint().unwrap();
        let rest = g.names(g.observed().without(r));
        if rest.is_empty() {
            continue;
        }
        let x = vec![g.name(r).to_string()];
        let conditional = joint.div(&joint.marginal(&x));
        let o = sem.oracle_table(&x, &rest).unwrap();
        assert!(o.max_abs_diff(&conditional) < 1e-12);
        checked += 1;
    }
}

#[test]
fn every_query_on_a_confounder_free_graph_is_identified() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = CorpusConfig {
        p_bidirected: 0.0,
        ..CorpusConfig::default()
    };
    for _ in 0..50 {
        let g = random_admg(&cfg, &mut rng);
        let sem = DiscreteSem::random_positive(dag_for_admg(&g), 2, &mut rng).unwrap();
        let joint = sem.observational_joint().unwrap();
        let (mut x, mut y) = (VertexSet::empty(), VertexSet::empty());
        for v in g.observed().iter() {
            if rng.random_bool(0.4) {
                x.insert(v)
            } else {
                y.insert(v)
            }
        }
        if y.is_empty() {
            continue;
        }
        let e = id(&g, x, y).expect("no confounding");
        let t = evaluate_discrete(&e, &joint).unwrap();
        assert!(t.max_abs_diff(&sem.oracle_table(&g.names(x), &g.names(y)).unwrap()) < 1e-9);
    }
}
