//! Acceptance suite: runs every verification criterion at its pinned sample
//! counts and tolerances and prints one pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use oscavg::verify;

#[test]
fn acceptance_criteria() {
    let results = verify::run_all(0);
    assert_eq!(results.len(), 11);

    let mut failed_gating = Vec::new();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let gate = if r.gating { "" } else { " (non-gating)" };
        println!("criterion {:2}: {status}{gate} — {}", r.id, r.name);
        for line in &r.detail {
            println!("    {line}");
        }
        if !r.passed && r.gating {
            failed_gating.push(r.id);
        }
    }
    assert!(
        failed_gating.is_empty(),
        "gating criteria failed: {failed_gating:?} (see lines above)"
    );
}
