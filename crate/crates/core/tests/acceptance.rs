//! Acceptance criteria, one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the log.
//! `ACCEPTANCE_ONLY=1,4` restricts the run to the listed criteria.

use std::process::ExitCode;

use firstdetect::verify::{run_criterion, CRITERIA};

fn main() -> ExitCode {
    let only: Option<Vec<u8>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|p| p.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let report = run_criterion(id, 1.0);
        println!("{}", report.summary());
        for check in &report.checks {
            println!(
                "    {:<60} {:>14.6e}  [{}, {}] {}",
                check.label,
                check.measured,
                check.lower.map_or("-".into(), |v| format!("{v:e}")),
                check.upper.map_or("-".into(), |v| format!("{v:e}")),
                if check.passed { "ok" } else { "FAIL" }
            );
        }
        if !report.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
