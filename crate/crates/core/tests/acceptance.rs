//! Acceptance criteria, one test each. Every test prints a single PASS/FAIL line.

use std::sync::Mutex;
use std::time::Instant;

use extremal::verify::{run_criterion, run_verify, VerifyLevel, VerifyOptions};

// Criteria carry wall-clock budgets, so they run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

const FULL: VerifyOptions = VerifyOptions {
    level: VerifyLevel::Full,
    corrupt_gram: false,
};

fn criterion(id: &str) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let outcome = run_criterion(id, &FULL).expect("registered criterion");
    println!("{outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn gram_oracle() {
    criterion("gram-oracle");
}

#[test]
fn c01_unitary_flatness() {
    criterion("1");
}

#[test]
fn c02_unit_bandwidth_coincidence() {
    criterion("2");
}

#[test]
fn c03_cross_route_agreement() {
    criterion("3");
}

#[test]
fn c04_large_shift_limit() {
    criterion("4");
}

#[test]
fn c05_evenness_and_positivity() {
    criterion("5");
}

#[test]
fn c06_monotone_convergence() {
    criterion("6");
}

#[test]
fn c07_general_k_determinant_route() {
    criterion("7");
}

#[test]
fn c08_midpoint_exactness() {
    criterion("8");
}

#[test]
fn c09_identity_suite() {
    criterion("9");
}

#[test]
fn c10_continuity() {
    criterion("10");
}

#[test]
fn c11_sweep_regeneration() {
    criterion("11");
}

#[test]
fn quick_level_within_two_minutes() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcomes = run_verify(&VerifyOptions {
        level: VerifyLevel::Quick,
        corrupt_gram: false,
    });
    let secs = start.elapsed().as_secs_f64();
    let passed = outcomes.iter().all(|o| o.passed) && secs < 120.0;
    println!(
        "{} [quick] {} criteria in {secs:.1}s",
        if passed { "PASS" } else { "FAIL" },
        outcomes.len()
    );
    assert!(passed);
}

#[test]
fn corrupted_gram_fails_by_name() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let outcomes = run_verify(&VerifyOptions {
        level: VerifyLevel::Quick,
        corrupt_gram: true,
    });
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    let passed = failed == ["Gram oracle"];
    println!("{} [corrupt] failing criteria: {failed:?}", if passed { "PASS" } else { "FAIL" });
    assert!(passed);
}
