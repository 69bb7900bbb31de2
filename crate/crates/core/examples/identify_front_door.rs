//! Identifies interventional queries, checks one numerically against a
//! truncated-factorization oracle, and shows what a failure reports.

use graph_surgery::graph::AdmgBuilder;
use graph_surgery::identify::{evaluate_discrete, id, id_conditional, Query};
use graph_surgery::simulate::{dag_for_admg, DiscreteSem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // M -> Z -> T with M <-> T
    let g = AdmgBuilder::new()
        .observed_all(&["M", "Z", "T"])
        .edge("M", "Z")
        .edge("Z", "T")
        .bidirected("M", "T")
        .build()?;

    let e = id(&g, g.set(&["M"])?, g.set(&["T"])?)?;
    println!("P_M(T) = {e}");
    let (reduced, c) = id_conditional(&g, &Query::new(g.set(&["M"])?, g.set(&["T"])?, g.set(&["Z"])?))?;
    println!("P_M(T | Z) = {c}   (intervening on {:?})", g.names(reduced.intervene));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sem = DiscreteSem::random_positive(dag_for_admg(&g), 2, &mut rng)?;
    let joint = sem.observational_joint()?;
    let oracle = sem.oracle_table(&["M".into()], &["T".into()])?;
    let gap = evaluate_discrete(&e, &joint)?.max_abs_diff(&oracle);
    println!("largest gap to the oracle: {gap:.1e}");

    // the bow graph is the smallest non-identifiable case
    let bow = AdmgBuilder::new()
        .observed_all(&["X", "Y"])
        .edge("X", "Y")
        .bidirected("X", "Y")
        .build()?;
    match id(&bow, bow.set(&["X"])?, bow.set(&["Y"])?) {
        Ok(e) => println!("unexpected: {e}"),
        Err(f) => println!("{f}; hedge bidirected edges {:?}", f.bidirected),
    }
    Ok(())
}
