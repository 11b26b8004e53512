//! Runs every acceptance criterion at the published suite seed and prints one
//! PASS/FAIL line per criterion.

use std::io::Write;

use stubline::suite::{run_suite, SUITE_SEED};

// Goes straight to the stdout handle so the lines show up without --nocapture.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

#[test]
fn acceptance_suite() {
    let report = run_suite(SUITE_SEED, None, |r| emit(&r.to_string()));
    let failed: Vec<&str> = report
        .criteria
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();
    emit(&format!(
        "{} of {} criteria passed",
        report.criteria.len() - failed.len(),
        report.criteria.len()
    ));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
