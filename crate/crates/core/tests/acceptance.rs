//! Acceptance suite: one test per criterion, one PASS/FAIL line per check.

use std::io::Write;

use latdyn::harness::verify::{self, CheckResult};

fn report(checks: &[CheckResult]) {
    let mut out = std::io::stdout().lock();
    for c in checks {
        let _ = writeln!(out, "{c}");
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}

#[test]
fn weyl_algebra_exactness() {
    report(&[verify::weyl_exactness().unwrap()]);
}

#[test]
fn gns_structure() {
    report(&[verify::gns_structure().unwrap()]);
}

#[test]
fn shift_projector_fixes_disjoint_operators() {
    report(&[verify::shift_projector().unwrap()]);
}

#[test]
fn obstruction_criterion() {
    let checks = verify::obstruction_criterion().unwrap();
    report(&checks[..3]);
}

#[test]
fn obstruction_hilbert_schmidt_form_matches_block_sum() {
    let checks = verify::obstruction_criterion().unwrap();
    report(&checks[3..]);
}

#[test]
fn twist_covariance() {
    report(&[verify::twist_covariance().unwrap()]);
}

#[test]
fn emch_radin_counterexample() {
    report(&verify::emch_radin_counterexample().unwrap());
}

#[test]
fn light_cone() {
    report(&[verify::light_cone().unwrap()]);
}

#[test]
fn dynamics_engines_agree() {
    report(&[verify::engines().unwrap()]);
}

#[test]
fn averaging_identity() {
    report(&[verify::averaging().unwrap()]);
}

#[test]
fn determinism() {
    report(&[verify::determinism().unwrap()]);
}
