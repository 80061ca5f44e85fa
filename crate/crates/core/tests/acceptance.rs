//! Runs the ten acceptance criteria and prints one PASS/FAIL line each.
//! Exits nonzero when any criterion fails. Select a subset with
//! `cargo test --test acceptance -- 4 7`.

mod common;

use common::{timed, Outcome};

type Criterion = (u8, &'static str, fn() -> Outcome, f64);

const CRITERIA: [Criterion; 10] = [
    (1, "gradient fidelity", common::criterion_1, 10.0),
    (2, "metric oracles", common::criterion_2, 5.0),
    (3, "uncertainty closed forms", common::criterion_3, f64::INFINITY),
    (4, "toy direction preservation", common::criterion_4, 120.0),
    (5, "noise-tolerance ordering", common::criterion_5, 900.0),
    (6, "SSL noise reduction", common::criterion_6, 600.0),
    (7, "SSL common-vs-all ablation", common::criterion_7, 600.0),
    (8, "SPCR robustness", common::criterion_8, 1200.0),
    (9, "alpha sensitivity", common::criterion_9, 600.0),
    (10, "determinism and plumbing", common::criterion_10, f64::INFINITY),
];

fn main() {
    let picked: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run, budget) in CRITERIA {
        if !picked.is_empty() && !picked.contains(&id) {
            continue;
        }
        let (out, secs) = timed(run);
        let in_time = secs < budget;
        let pass = out.pass && in_time;
        let budget_note = if in_time { String::new() } else { format!(" [over {budget:.0}s budget]") };
        println!(
            "criterion {id:>2} {name:<28} {}  ({secs:.1}s{budget_note}) {}",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
