mod common;

#[test]
fn population_predictors_do_not_move_across_environments() {
    let rep = common::stability_population(150, 21);
    println!("{} graphs, {} candidates, max diff {:.2e}", rep.graphs, rep.candidates, rep.max_diff);
    assert!(rep.graphs >= 30);
    assert!(rep.max_diff < 1e-9);
}

#[test]
fn sampled_predictors_agree_within_three_standard_errors() {
    let rep = common::stability_sampled(40, 10_000, 22);
    println!(
        "{} graphs, {} candidates, worst RMS z {:.2}, unstable controls detected {:.2}",
        rep.graphs, rep.candidates, rep.worst_rms_z, rep.control_detected
    );
    assert!(rep.graphs >= 10);
    assert!(rep.worst_rms_z < 3.0);
    assert!(rep.control_detected.is_nan() || rep.control_detected > 0.5);
}
