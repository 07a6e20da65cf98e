//! End-to-end acceptance gate: runs the built-in verification suite and
//! prints one pass/fail line per item. The lines are written to the raw
//! stdout handle so they show up in plain `cargo test` output, not only
//! under `--nocapture`.

use std::io::Write;

use smale_cli::run_suite;

#[test]
fn acceptance_suite() {
    let items = run_suite();
    let mut all_passed = true;
    let mut out = std::io::stdout().lock();
    // The harness has already printed `test acceptance_suite ... ` without a
    // newline; break the line so every item line starts at column 0.
    writeln!(out).expect("stdout is writable");
    for item in &items {
        let status = if item.passed { "PASS" } else { "FAIL" };
        writeln!(out, "[{status}] item {}: {} — {}", item.id, item.title, item.detail)
            .expect("stdout is writable");
        all_passed &= item.passed;
    }
    drop(out);
    assert!(all_passed, "at least one verification item failed");
}
