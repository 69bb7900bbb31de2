//! Over random selection diagrams, counts targets that have a stable
//! conditioning set and targets that have a surgery estimator.

use graph_surgery::simulate::{random_admg, CorpusConfig};
use graph_surgery::surgery::{pruning_search, surgery_search_by, Scored, SearchConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut targets, mut pruning, mut surgery, mut only_surgery) = (0, 0, 0, 0);
    for _ in 0..200 {
        let g = random_admg(&CorpusConfig::default(), &mut rng);
        if g.selection().is_empty() {
            continue;
        }
        for t in g.observed().iter() {
            targets += 1;
            let p = !pruning_search(&g, t).is_empty();
            let s = surgery_search_by(&g, t, &SearchConfig::default(), |_| {
                Ok(Scored {
                    loss: 0.0,
                    predictor: None,
                })
            })
            .is_ok();
            pruning += p as usize;
            surgery += s as usize;
            only_surgery += (s && !p) as usize;
            assert!(!p || s, "a stable set without a surgery estimator");
        }
    }
    println!("{targets} targets: {pruning} with a stable conditioning set, {surgery} with a surgery estimator");
    println!("{only_surgery} targets are served by surgery alone");
}
