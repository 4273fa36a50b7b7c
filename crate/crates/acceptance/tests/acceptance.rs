//! Acceptance suite: one test and one printed verdict line per criterion.
//!
//! Every seed is fixed in advance (master seed 1). The residual ensembles
//! for m = 7, 8 and 12 are simulated once and shared by the covariance and
//! normality criteria. Run with `--nocapture` to see the lines of passing
//! criteria as well.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use cyclic_urn::verify::{
    bn_check, clt_suite, moments_suite, rate_and_fixed_point_checks, residual_clt_checks, Check,
    VerifyConfig,
};

const SEED: u64 = 1;

fn report(id: u32, title: &str, checks: &[&Check]) {
    let pass = checks.iter().all(|c| c.pass);
    println!("criterion {id:>2} [{}] {title}", if pass { "PASS" } else { "FAIL" });
    for c in checks {
        if !c.pass {
            let s = c.details.to_string();
            let cut = s.char_indices().nth(4000).map_or(s.len(), |(i, _)| i);
            println!("    {} failed: {}", c.name, &s[..cut]);
        }
    }
    assert!(pass, "criterion {id} failed: {title}");
}

fn moments() -> &'static BTreeMap<String, Check> {
    static CELL: OnceLock<BTreeMap<String, Check>> = OnceLock::new();
    CELL.get_or_init(|| {
        moments_suite(&VerifyConfig::new(7, SEED))
            .expect("moments suite runs")
            .into_iter()
            .map(|c| (c.name.clone(), c))
            .collect()
    })
}

/// Covariance, normality and negative-control checks for each `m`.
fn clt(m: usize) -> &'static [Check] {
    static CELLS: [OnceLock<Vec<Check>>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = match m {
        7 => 0,
        8 => 1,
        12 => 2,
        _ => panic!("no shared ensemble for m = {m}"),
    };
    CELLS[slot].get_or_init(|| clt_suite(&VerifyConfig::new(m, SEED)).expect("clt suite runs"))
}

fn rates() -> &'static [Check] {
    static CELL: OnceLock<Vec<Check>> = OnceLock::new();
    CELL.get_or_init(|| rate_and_fixed_point_checks(&VerifyConfig::new(7, SEED)).expect("rate checks run"))
}

fn find<'a>(checks: &'a [Check], name: &str) -> &'a Check {
    checks.iter().find(|c| c.name == name).expect("check present")
}

#[test]
fn criterion_01_oracle_equivalence() {
    report(1, "product and recursion moments equal the rational enumeration", &[&moments()["oracle_equivalence"]]);
}

#[test]
fn criterion_02_closed_forms() {
    report(2, "closed-form second moments and the n = 1 half-case value", &[&moments()["closed_forms"]]);
}

#[test]
fn criterion_03_ranks() {
    report(3, "covariance ranks and rotation invariance", &[&moments()["rank_checks"]]);
}

#[test]
fn criterion_04_mean_expansion() {
    report(4, "mean expansion remainder ratios", &[&moments()["mean_expansion"]]);
}

#[test]
fn criterion_05_two_colour_variance() {
    let mut cfg = VerifyConfig::new(2, SEED);
    cfg.n = 10_000;
    let (cov, _) = residual_clt_checks(&cfg).expect("two-colour ensemble runs");
    report(5, "two-colour variance at n = 10^4 equals 1/3", &[&cov]);
}

#[test]
fn criterion_06_rate_law() {
    report(6, "martingale convergence rate and series asymptote", &[find(rates(), "rate_law")]);
}

#[test]
fn criterion_07_residual_covariance() {
    let checks: Vec<&Check> = [7, 8, 12].iter().map(|&m| find(clt(m), "residual_covariance")).collect();
    report(7, "residual covariance at n = 2000 for m = 7, 8, 12", &checks);
}

#[test]
fn criterion_08_normality() {
    let mut checks: Vec<&Check> = [7, 8, 12].iter().map(|&m| find(clt(m), "residual_normality")).collect();
    checks.push(find(clt(7), "normality_negative_control"));
    report(8, "residual normality for m = 7, 8, 12 and exponential rejection", &checks);
}

#[test]
fn criterion_09_fixed_point() {
    report(9, "fixed-point pool, trajectory and series second moments agree", &[find(rates(), "fixed_point_cross_oracle")]);
}

#[test]
fn criterion_10_error_term() {
    let check = bn_check(&VerifyConfig::new(7, SEED)).expect("error-term diagnostic runs");
    report(10, "split error-term third moment decreases and halves", &[&check]);
}

#[test]
fn criterion_11_split_embedding() {
    report(11, "split construction equals the urn law", &[&moments()["split_embedding"]]);
}
