use std::path::PathBuf;
use std::process::{Command, Output};

use qlr_cli::WitnessReport;

fn instance(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn qlr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlr")).args(args).output().expect("qlr runs")
}

fn solve(name: &str) -> (i32, WitnessReport) {
    let path = instance(name);
    let out = qlr(&["solve", path.to_str().unwrap()]);
    let report = WitnessReport::from_json(&String::from_utf8_lossy(&out.stdout)).expect("JSON report");
    (out.status.code().unwrap(), report)
}

#[test]
fn ant_colony_prints_a_distribution() {
    let (code, report) = solve("ant.psat");
    assert_eq!(code, 0);
    assert_eq!(report.verdict, "sat");
    assert!(!report.witness.is_empty());
    assert!(report.witness.iter().all(|e| e.weight.is_some()));
}

#[test]
fn genes_print_a_dutch_book() {
    let (code, report) = solve("genes.psat");
    assert_eq!(code, 1);
    assert_eq!(report.verdict, "unsat");
    assert_eq!(report.dutch_book.len(), 6);
    assert_eq!(report.dutch_book_verified, Some(true));
}

#[test]
fn genes_are_coherent_with_partial_truth() {
    let (code, report) = solve("genes.lipsat");
    assert_eq!(code, 0);
    assert!(report.witness.len() <= 4);
}

#[test]
fn counting_instances() {
    assert_eq!(solve("grandparents.cquel").0, 0);
    assert_eq!(solve("grandparents_unsat.cquel").0, 1);
    let (code, report) = solve("parents_data.cquel");
    assert_eq!(code, 0);
    let model = report.model.expect("model printed");
    assert_eq!(model.constants.len(), 2);
    assert!(model.roles["parentOf"].contains(&[model.constants["ann"], model.constants["bob"]]));
}

#[test]
fn verify_only_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["ant.psat", "genes.psat", "genes.lipsat", "parents.cquel"] {
        let path = instance(name);
        let out = qlr(&["solve", path.to_str().unwrap()]);
        let saved = dir.path().join(format!("{name}.json"));
        std::fs::write(&saved, &out.stdout).unwrap();
        let check = qlr(&["solve", path.to_str().unwrap(), "--verify-only", saved.to_str().unwrap()]);
        assert_eq!(check.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&check.stdout));

        // corrupt the certificate
        let mut report = WitnessReport::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
        match report.witness.first_mut() {
            Some(e) if e.count.is_some() => e.count = Some(e.count.unwrap() + 100),
            Some(e) => e.weight = Some("1/7".into()),
            None => report.dutch_book[0].stake = "100".into(),
        }
        std::fs::write(&saved, report.to_json()).unwrap();
        let check = qlr(&["solve", path.to_str().unwrap(), "--verify-only", saved.to_str().unwrap()]);
        assert_eq!(check.status.code(), Some(1), "{name} accepted a corrupted report");
    }
}

#[test]
fn parse_errors_name_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.psat");
    std::fs::write(&path, "logic psat\nprob x1 | >= 0.5\n").unwrap();
    let out = qlr(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.psat:2:"), "{err}");
}

#[test]
fn budget_exhaustion_is_not_unsat() {
    let path = instance("genes.psat");
    let out = qlr(&["solve", path.to_str().unwrap(), "--budget-iterations", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn oracle_flag() {
    let path = instance("ant.psat");
    let out = qlr(&["solve", path.to_str().unwrap(), "--oracle"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"oracle\": true"));
    let path = instance("grandparents.cquel");
    assert_eq!(qlr(&["solve", path.to_str().unwrap(), "--oracle"]).status.code(), Some(2), "beyond oracle limits");
}

#[test]
fn dimacs_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = instance("genes.psat");
    let out = qlr(&["solve", path.to_str().unwrap(), "--emit-dimacs-debug", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert!(!files.is_empty());
}

#[test]
fn generate_is_reproducible() {
    let a = qlr(&["generate", "--logic", "psat", "--seed", "1", "--symbols", "4", "--constraints", "2"]);
    let b = qlr(&["generate", "--logic", "psat", "--seed", "1", "--symbols", "4", "--constraints", "2"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("logic psat\n"));
}

#[test]
fn corpus_command_reports_agreement() {
    let out = qlr(&["corpus", "--logic", "cquel", "--count", "20", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("agreement 20/20"));
}
