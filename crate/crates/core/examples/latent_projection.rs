//! Projects a causal DAG with hidden variables onto its observed vertices and
//! inspects the resulting selection ADMG.

use graph_surgery::graph::format::{parse_graph, to_text};
use graph_surgery::graph::VertexSet;

const DAG: &str = "
obs T A C D
lat K L
K -> T
K -> A
T -> C
A -> C
C -> L
L -> D
S sel -> A
target T
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let file = parse_graph(DAG)?;
    let g = &file.graph;
    println!("projected graph:\n{}", to_text(g, file.target.as_deref()));

    println!("mutable: {:?}", g.names(g.mutable_set()));
    for c in g.c_components(g.observed()) {
        println!("c-component: {:?}", g.names(c));
    }

    let t = VertexSet::singleton(g.id("T")?);
    for z in [vec![], vec!["A"], vec!["C"]] {
        let zs = g.set(&z)?;
        println!("T ⊥ S | {z:?}: {}", g.m_separated(t, g.selection(), zs));
    }
    Ok(())
}
