use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lsmdual::report::recompute_verdict;
use lsmdual::scenario::Expect;
use lsmdual::{Check, Verdict};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lsmdual"));
    c.env_remove("LSMDUAL_OUT");
    c
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.scn"))
}

fn lsmdual(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL_MC: &str = r#"
name = "small-laws"
kind = "VERIFY_MC"
seed = 5

[params]
check = "law"
t = 0.5
n_samples = 2000

[[params.cases]]
model = "cvp:1,3,2"
kernel = "pair"
x0 = [1, 1]
y0 = []

[thresholds]
ks = 0.2
"#;

const FAILING: &str = r#"
name = "broken-self-duality"
kind = "VERIFY_EXACT"

[params]
check = "duality"
eta = ["1/2"]

[[params.cases]]
model = "cvp:1,1,0"
dual = "cvp:1,1,0"
kernels = [{ n_sites = 2, pairs = [[0, 1, 1], [1, 0, 2]], raw = true }]
"#;

#[test]
fn passing_scenario_exits_zero_and_writes_reports() {
    let out = tempfile::tempdir().unwrap();
    let o = lsmdual(&["--out", p(out.path()), "verify-exact", p(&bundled("voter-crw"))]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("verdict: pass"));
    for f in ["voter-crw.report.json", "voter-crw.checks.csv", "voter-crw.table.csv"] {
        assert!(out.path().join(f).is_file(), "missing {f}");
    }
}

#[test]
fn expected_failure_passes() {
    let out = tempfile::tempdir().unwrap();
    let o = lsmdual(&["--out", p(out.path()), "verify-exact", p(&bundled("asymmetric-q-negative"))]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("raw fail"));
}

#[test]
fn unexpected_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("broken.scn");
    fs::write(&f, FAILING).unwrap();
    let o = lsmdual(&["run", p(&f)]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn missing_seed_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("no-seed.scn");
    fs::write(&f, SMALL_MC.replace("seed = 5\n", "")).unwrap();
    let o = lsmdual(&["verify-mc", p(&f)]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("`seed`") && err.contains("no-seed.scn"), "{err}");
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("typo.scn");
    fs::write(&f, SMALL_MC.replace("n_samples", "samples")).unwrap();
    let o = lsmdual(&["run", p(&f)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("typo.scn"), "{}", stderr(&o));
}

#[test]
fn wrong_subcommand_for_kind_is_rejected() {
    let o = lsmdual(&["verify-mc", p(&bundled("voter-crw"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("VERIFY_EXACT"));
}

#[test]
fn empty_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = lsmdual(&["suite", p(dir.path())]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0 scenarios"));
    assert!(dir.path().join("suite-summary.csv").is_file());
}

#[test]
fn one_failure_among_ten_fails_the_suite() {
    let dir = tempfile::tempdir().unwrap();
    let voter = fs::read_to_string(bundled("voter-crw")).unwrap();
    for i in 0..9 {
        fs::write(dir.path().join(format!("ok-{i}.scn")), voter.replace("name = \"voter-crw\"", &format!("name = \"ok-{i}\""))).unwrap();
    }
    fs::write(dir.path().join("zz-broken.scn"), FAILING).unwrap();
    let o = lsmdual(&["--jobs", "3", "suite", p(dir.path())]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("10 scenarios: 9 pass, 1 fail"), "{}", stdout(&o));
    let summary = fs::read_to_string(dir.path().join("suite-summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 11);
    assert!(summary.lines().any(|l| l.starts_with("broken-self-duality,fail")));
}

#[test]
fn config_error_in_suite_exits_two_and_others_still_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(bundled("voter-crw"), dir.path().join("a.scn")).unwrap();
    fs::write(dir.path().join("b.scn"), "name = \"b\"\n").unwrap();
    let o = lsmdual(&["suite", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("2 scenarios: 1 pass, 0 fail, 0 unresolved, 1 errors"), "{}", stdout(&o));
}

fn without_metadata(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("metadata");
    v
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("small.scn");
    fs::write(&f, SMALL_MC).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = lsmdual(&["--out", p(out), "run", p(&f)]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
    let ja = without_metadata(&a.join("small.report.json"));
    assert_eq!(ja, without_metadata(&b.join("small.report.json")));
    assert_eq!(serde_json::to_string(&ja).unwrap(), serde_json::to_string(&without_metadata(&b.join("small.report.json"))).unwrap());
    for f in ["small.checks.csv", "small.table.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    let o = lsmdual(&["--seed", "6", "--out", p(&c), "run", p(&f)]);
    assert_eq!(code(&o), 0);
    assert_ne!(ja["data"], without_metadata(&c.join("small.report.json"))["data"]);
}

#[test]
fn persisted_verdict_follows_from_persisted_checks() {
    let out = tempfile::tempdir().unwrap();
    for name in ["voter-crw", "asymmetric-q-negative", "oracle-ssm-self"] {
        let o = lsmdual(&["--out", p(out.path()), "run", p(&bundled(name))]);
        assert_eq!(code(&o), 0);
        let v: Value = serde_json::from_str(&fs::read_to_string(out.path().join(format!("{name}.report.json"))).unwrap()).unwrap();
        let checks: Vec<Check> = serde_json::from_value(v["checks"].clone()).unwrap();
        for c in &checks {
            assert_eq!(c.evaluate(), c.verdict, "{name}: {}", c.name);
        }
        let expect: Expect = serde_json::from_value(v["scenario"]["expect"].clone()).unwrap();
        let (raw, fin) = recompute_verdict(&checks, expect);
        let stored: Verdict = serde_json::from_value(v["verdict"].clone()).unwrap();
        let stored_raw: Verdict = serde_json::from_value(v["raw_verdict"].clone()).unwrap();
        assert_eq!((raw, fin), (stored_raw, stored), "{name}");
    }
}

#[test]
fn suite_results_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..4 {
        fs::write(dir.path().join(format!("s{i}.scn")), SMALL_MC.replace("small-laws", &format!("s{i}"))).unwrap();
    }
    let (a, b) = (dir.path().join("one"), dir.path().join("four"));
    assert_eq!(code(&lsmdual(&["--jobs", "1", "--out", p(&a), "suite", p(dir.path())])), 0);
    assert_eq!(code(&lsmdual(&["--jobs", "4", "--out", p(&b), "suite", p(dir.path())])), 0);
    for i in 0..4 {
        let f = format!("s{i}.report.json");
        assert_eq!(without_metadata(&a.join(&f)), without_metadata(&b.join(&f)), "{f}");
    }
    // different names draw from different streams
    assert_ne!(without_metadata(&a.join("s0.report.json"))["data"], without_metadata(&a.join("s1.report.json"))["data"]);
}

#[test]
fn output_directory_from_environment() {
    let out = tempfile::tempdir().unwrap();
    let o = bin().env("LSMDUAL_OUT", out.path()).args(["run", p(&bundled("voter-arw"))]).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.path().join("voter-arw.report.json").is_file());
}

#[test]
fn mode_flag_overrides_the_file() {
    let out = tempfile::tempdir().unwrap();
    let o = lsmdual(&["--mode", "float", "--out", p(out.path()), "run", p(&bundled("voter-crw"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("float mode"));
    let v = without_metadata(&out.path().join("voter-crw.report.json"));
    assert_eq!(v["provenance"]["mode"], "float");
}

#[test]
fn dual_prints_rates_for_one_parameter() {
    let o = lsmdual(&["dual", "--model", "cvp:1,0,0", "--eta", "-1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("eta = -1"), "{text}");
    assert!(text.contains("valid"), "{text}");
}

#[test]
fn dual_scan_and_bad_model() {
    let o = lsmdual(&["dual", "--model", "cvp:1,3,2", "--eta-scan", "-1:0:1/4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("eta =")).count(), 5);
    assert!(stdout(&o).contains("self-dual at eta = 1/4"));
    assert_eq!(code(&lsmdual(&["dual", "--model", "cvp:1", "--eta", "0"])), 2);
}

#[test]
fn simulate_writes_a_trajectory() {
    let o = lsmdual(&["--seed", "3", "simulate", "--model", "cvp:1,1,1", "--kernel", "ring:3", "--x0", "1,0,1", "--t", "1", "--times", "0,0.5,1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,site0,site1,site2");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[1], "0,1,0,1");
    let again = lsmdual(&["--seed", "3", "simulate", "--model", "cvp:1,1,1", "--kernel", "ring:3", "--x0", "1,0,1", "--t", "1", "--times", "0,0.5,1"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn simulate_diffusion_needs_dt() {
    let o = lsmdual(&["simulate", "--model", "ssm:1,1,0", "--x0", "0.5", "--t", "0.1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--dt"));
}
