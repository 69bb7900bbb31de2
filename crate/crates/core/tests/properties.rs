use std::collections::BTreeSet;

use graph_surgery::graph::{Admg, VertexSet};
use graph_surgery::identify::{evaluate_discrete, id, parse_expr, simplify, uq, Expr, VarOrder};
use graph_surgery::simulate::{dag_for_admg, random_admg, CorpusConfig, DiscreteSem, EnvironmentFamily, Handle, LinearGaussianSem};
use graph_surgery::surgery::pruning_search;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(seed: u64) -> (Admg, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_admg(&CorpusConfig::default(), &mut rng), rng)
}

fn subset(g: &Admg, rng: &mut ChaCha8Rng, p: f64) -> VertexSet {
    g.observed().iter().filter(|_| rng.random_bool(p)).collect()
}

fn as_set(s: VertexSet) -> BTreeSet<usize> {
    s.iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn set_algebra_matches_btreeset(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (VertexSet::from_bits(a), VertexSet::from_bits(b));
        let (sx, sy) = (as_set(x), as_set(y));
        prop_assert_eq!(as_set(x.union(y)), sx.union(&sy).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(as_set(x.intersection(y)), sx.intersection(&sy).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(as_set(x.difference(y)), sx.difference(&sy).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(x.is_subset(y), sx.is_subset(&sy));
        prop_assert_eq!(x.len(), sx.len());
    }

    #[test]
    fn m_separation_is_symmetric(seed in any::<u64>()) {
        let (g, mut rng) = graph(seed);
        let x = subset(&g, &mut rng, 0.3);
        let y = subset(&g, &mut rng, 0.3).difference(x);
        let z = subset(&g, &mut rng, 0.3).difference(x).difference(y);
        prop_assert_eq!(g.m_separated(x, y, z), g.m_separated(y, x, z));
    }

    #[test]
    fn c_components_partition_the_observed_vertices(seed in any::<u64>()) {
        let (g, _) = graph(seed);
        let comps = g.c_components(g.observed());
        let mut union = VertexSet::empty();
        for c in &comps {
            prop_assert!(union.is_disjoint(*c));
            union = union.union(*c);
            for v in c.iter() {
                prop_assert_eq!(g.c_component_of(v, g.observed()), *c);
            }
        }
        prop_assert_eq!(union, g.observed());
    }

    #[test]
    fn identified_expressions_round_trip_and_resimplify_soundly(seed in any::<u64>()) {
        let (g, mut rng) = graph(seed);
        let x = subset(&g, &mut rng, 0.3);
        let y = g.observed().difference(x).iter().filter(|_| rng.random_bool(0.6)).collect::<VertexSet>();
        prop_assume!(!y.is_empty());
        let Ok(e) = id(&g, x, y) else { return Ok(()); };
        let json = serde_json::to_string(&e).unwrap();
        prop_assert_eq!(&serde_json::from_str::<Expr>(&json).unwrap(), &e);
        let text = e.to_string();
        prop_assert_eq!(parse_expr(&text).unwrap().to_string(), text);

        let sem = DiscreteSem::random_positive(dag_for_admg(&g), 2, &mut rng).unwrap();
        let joint = sem.observational_joint().unwrap();
        let again = simplify(e.clone(), &VarOrder::from_graph(&g));
        let d = evaluate_discrete(&again, &joint).unwrap().max_abs_diff(&evaluate_discrete(&e, &joint).unwrap());
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn rule_two_reduction_only_grows_the_sets(seed in any::<u64>()) {
        let (g, mut rng) = graph(seed);
        let x = subset(&g, &mut rng, 0.3);
        let y = subset(&g, &mut rng, 0.5).difference(x);
        let z = g.observed().difference(x).difference(y);
        prop_assume!(!y.is_empty());
        let (x2, y2) = uq(&g, x, y, z);
        prop_assert!(x.is_subset(x2) && y.is_subset(y2));
        prop_assert_eq!(x2.union(y2), x.union(y).union(z));
        prop_assert!(x2.is_disjoint(y2));
    }

    #[test]
    fn pruning_sets_separate_the_target(seed in any::<u64>()) {
        let (g, _) = graph(seed);
        for t in g.observed().iter() {
            for z in pruning_search(&g, t) {
                let z = g.set(&z).unwrap();
                prop_assert!(!z.contains(t));
                prop_assert!(g.m_separated(VertexSet::singleton(t), g.selection(), z));
            }
        }
    }

    #[test]
    fn oracle_tables_are_distributions(seed in any::<u64>()) {
        let (g, mut rng) = graph(seed);
        let sem = DiscreteSem::random_positive(dag_for_admg(&g), 2, &mut rng).unwrap();
        let x = subset(&g, &mut rng, 0.3);
        let y = g.observed().difference(x);
        prop_assume!(!y.is_empty());
        let t = sem.oracle_table(&g.names(x), &g.names(y)).unwrap();
        let totals = t.sum_out(&g.names(y));
        prop_assert!(totals.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn environment_members_differ_only_in_the_handle(w in prop::array::uniform4(-2.0f64..2.0), v in -50.0f64..50.0) {
        let base = LinearGaussianSem::diagnosis(w, 0.1);
        let handle = Handle::Intercept { var: "A".into() };
        let fam = EnvironmentFamily { base: base.clone(), handle: handle.clone(), values: vec![v] };
        let m = fam.member(v).unwrap();
        prop_assert_eq!(m.get(&handle).unwrap(), v);
        prop_assert_eq!(m.with(&handle, w[1]).unwrap(), base);
    }
}
