//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::time::Instant;

use graph_surgery::simulate::{run_experiment, ExperimentConfig, Method, Scenario};

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn check(&mut self, id: &str, passed: bool, detail: String) {
        let line = format!("{} {id}: {detail}", if passed { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((passed, line));
    }
}

#[test]
fn acceptance() {
    let mut r = Report { lines: Vec::new() };

    let o = common::oracle_suite(240, 11);
    r.check(
        "1 identification oracle",
        o.pairs >= 200 && o.max_diff < 1e-9 && o.elapsed.as_secs_f64() < 60.0,
        format!(
            "{} pairs, {} identified queries, max |id - oracle| {:.2e}, {:.2?}",
            o.pairs,
            o.identified + o.conditional_identified,
            o.max_diff,
            o.elapsed
        ),
    );

    let goldens = common::golden_identities();
    for (g, tag) in goldens.iter().zip(["a", "b", "c"]) {
        r.check(&format!("2{tag} golden"), g.passed, format!("{}: {}", g.name, g.detail));
    }

    for w in common::witness_checks() {
        r.check(
            &format!("3 witness {}", w.name),
            w.passed(),
            format!(
                "id fails {}, observational gap {:.1e}, interventional TV {:.3}",
                w.id_fails, w.observational_gap, w.interventional_gap
            ),
        );
    }

    let p = common::stability_population(150, 21);
    r.check(
        "4 stability (population)",
        p.graphs > 0 && p.max_diff < 1e-9,
        format!("{} graphs, {} estimators, max diff {:.2e}", p.graphs, p.candidates, p.max_diff),
    );
    let s = common::stability_sampled(40, 10_000, 22);
    r.check(
        "4 stability (n=10000)",
        s.graphs > 0 && s.worst_rms_z < 3.0,
        format!(
            "{} graphs, {} estimators, worst RMS z {:.2} (unstable controls flagged {:.0}%)",
            s.graphs,
            s.candidates,
            s.worst_rms_z,
            100.0 * s.control_detected
        ),
    );

    let pr = common::pruning_subsumption(150, 31);
    r.check(
        "5 pruning subsumption",
        pr.graphs >= 100 && pr.counterexamples.is_empty(),
        format!(
            "{} graphs, {} targets with a stable set, {} counterexamples",
            pr.graphs,
            pr.with_stable_set,
            pr.counterexamples.len()
        ),
    );

    let start = Instant::now();
    let a = run_experiment(&ExperimentConfig::desk(Scenario::MutableA, 0)).unwrap();
    let b = run_experiment(&ExperimentConfig::desk(Scenario::TargetShift, 0)).unwrap();
    let elapsed = start.elapsed();
    let (sa, oa) = (a.curve_ratio(Method::Surgery), a.curve_ratio(Method::Ols));
    r.check(
        "6a mutable-A experiment",
        sa < 2.0 && oa > 50.0,
        format!("surgery max/min {sa:.2} (< 2), OLS max/min {oa:.2} (> 50)"),
    );
    let (sb, ob) = (b.curve_ratio(Method::Surgery), b.extremes_ratio(Method::Ols));
    r.check(
        "6b target-shift experiment",
        sb < 2.0 && ob > 10.0,
        format!("surgery max/min {sb:.2} (< 2), OLS extremes/min {ob:.2} (> 10)"),
    );
    r.check(
        "6 experiment runtime",
        elapsed.as_secs_f64() < 120.0,
        format!("{elapsed:.2?} for both scenarios"),
    );

    let rec = common::parameter_recovery(10_000, 0);
    r.check(
        "7 parameter recovery",
        rec.passed(),
        format!(
            "w3 {:.4} vs {:.4} ± {:.4}, w4 {:.4} vs {:.4} ± {:.4}",
            rec.w[2], rec.coef_t.0, rec.coef_t.1, rec.w[3], rec.coef_a.0, rec.coef_a.1
        ),
    );

    let det = common::determinism_check();
    let differing: Vec<&str> = det.iter().filter(|(_, same)| !same).map(|(c, _)| c.as_str()).collect();
    r.check(
        "8 determinism",
        differing.is_empty(),
        format!("{} commands run twice, differing: {differing:?}", det.len()),
    );

    let failed: Vec<&String> = r.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}
