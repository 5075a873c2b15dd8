//! Acceptance battery: runs every verification criterion at its stated
//! tolerance and prints one pass/fail line per criterion. The test fails if
//! any criterion fails.

use szt::verify::run_all;

#[test]
fn acceptance() {
    let results = run_all(7);
    assert_eq!(results.len(), 12, "battery must cover all twelve criteria");
    let mut failures = Vec::new();
    for r in &results {
        println!("{} {} - {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        if !r.pass {
            failures.push(r.name);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
