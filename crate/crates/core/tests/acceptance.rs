//! Acceptance harness: runs the full verification bundle once, then prints a
//! PASS/FAIL line per criterion plus one for the wall-time budget.
//!
//! Lines go straight to stdout so they show without `--nocapture`.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use fracbs::analysis::CheckReport;
use fracbs::suites::{run_suite, SUITE_NAMES};

const BUDGET: Duration = Duration::from_secs(600);

struct Bundle(BTreeMap<String, CheckReport>);

impl Bundle {
    fn matching(&self, prefixes: &[&str]) -> Vec<&CheckReport> {
        self.0
            .values()
            .filter(|r| prefixes.iter().any(|p| r.name.starts_with(p)))
            .collect()
    }
}

fn line(out: &mut impl Write, id: &str, title: &str, pass: bool, note: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "{tag} {id:>6} {title}: {note}").unwrap();
}

fn verdict(reports: &[&CheckReport]) -> (bool, String) {
    if reports.is_empty() {
        return (false, "no reports".into());
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    let worst = reports.iter().map(|r| r.constant).fold(f64::NEG_INFINITY, f64::max);
    if failed.is_empty() {
        (true, format!("checks = {}, max constant {worst:.3e}", reports.len()))
    } else {
        (false, format!("failed {failed:?}"))
    }
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let mut all = BTreeMap::new();
    // report names repeat across configurations; keep them distinct
    for suite in SUITE_NAMES {
        for (i, r) in run_suite(suite, 1).expect("known suite").into_iter().enumerate() {
            all.insert(format!("{suite}/{i:03}/{}", r.name), r);
        }
    }
    let elapsed = start.elapsed();
    let bundle = Bundle(all);

    let criteria: [(&str, &str, &[&str]); 10] = [
        ("1", "classical regression", &["classical_regression"]),
        ("2", "Cesaro oracle equivalence", &["cesaro_equivalence"]),
        ("3", "two-path Hille consistency", &["hille_two_path"]),
        (
            "4",
            "semigroup law and strong continuity",
            &["semigroup_law", "strong_continuity"],
        ),
        ("5", "PDE residual", &["pde_residual_multiplier", "pde_residual_direct"]),
        ("6", "Balakrishnan consistency", &["balakrishnan"]),
        ("7", "sector-angle scan", &["resolvent_scan_fracpower"]),
        (
            "8",
            "scalar suites",
            &["sector_distance", "ineq_lemma", "integral_bound", "uniform_family"],
        ),
        ("9", "gamma asymptotics", &["gamma_ratio"]),
        ("10", "weak-pairing continuity", &["weak_pairing"]),
    ];

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out).unwrap();
    let mut failures = Vec::new();
    for (id, title, prefixes) in criteria {
        let reports = bundle.matching(prefixes);
        let (mut pass, mut note) = verdict(&reports);
        if id == "7" && reports.len() != 3 {
            pass = false;
            note = format!("expected scans at three alphas, got {}", reports.len());
        }
        if id == "8" {
            let exact = bundle
                .matching(&["integral_bound_symmetric_s1"])
                .first()
                .map(|r| (r.constant - 2.0).abs());
            match exact {
                Some(d) if d <= 1e-9 => note.push_str(&format!(", s=1 bound |C-2| = {d:.1e}")),
                other => {
                    pass = false;
                    note = format!("s=1 integral bound deviates from 2: {other:?}");
                }
            }
        }
        line(&mut out, id, title, pass, &note);
        if !pass {
            failures.push(id);
        }
    }
    let in_budget = elapsed <= BUDGET;
    line(
        &mut out,
        "budget",
        "full verify bundle within 10 min",
        in_budget,
        &format!("{:.1} s", elapsed.as_secs_f64()),
    );
    if !in_budget {
        failures.push("budget");
    }
    out.flush().unwrap();
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
