mod common;

#[test]
fn failures_come_with_observationally_equivalent_models() {
    for w in common::witness_checks() {
        println!(
            "{}: id fails {}, observational gap {:.1e}, interventional TV {:.3}",
            w.name, w.id_fails, w.observational_gap, w.interventional_gap
        );
        assert!(w.passed(), "{}", w.name);
    }
}

#[test]
fn failure_names_the_hedge() {
    let w = graph_surgery::simulate::bow_witness().unwrap();
    let g = &w.graph;
    let f = graph_surgery::identify::id(g, g.set(&w.intervene).unwrap(), g.set(&w.outcome).unwrap()).unwrap_err();
    let sub = f.subgraph_admg(g);
    assert_eq!(sub.names(sub.observed()), vec!["X", "Y"]);
    assert_eq!(sub.bidirected_edges().len(), 1);
}
