//! Desk-scale mutable-A experiment under both readings of the varied
//! mechanism: the intercept of A, and a K coefficient in the equation of A.

use graph_surgery::simulate::{run_experiment, AMechanism, ExperimentConfig, Method, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for mechanism in [AMechanism::Intercept, AMechanism::KCoefficient] {
        let cfg = ExperimentConfig {
            a_mechanism: mechanism,
            ..ExperimentConfig::desk(Scenario::MutableA, 0)
        };
        let res = run_experiment(&cfg)?;
        println!("{mechanism:?}");
        println!("     w2   surgery MSE      OLS MSE");
        let s = res.mean_curve(Method::Surgery);
        let o = res.mean_curve(Method::Ols);
        for ((v, a), (_, b)) in s.iter().zip(&o).step_by(4) {
            println!("{v:>7.1}   {a:>11.4}   {b:>10.4}");
        }
        println!(
            "surgery max/min {:.2}, OLS max/min {:.2}\n",
            res.curve_ratio(Method::Surgery),
            res.curve_ratio(Method::Ols)
        );
    }
    Ok(())
}
