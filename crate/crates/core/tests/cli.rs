use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polyopt::certify::{verify_certificate, Certificate};
use polyopt::polyring::parse_polynomial;
use polyopt::{InstanceFile, InstanceMetadata, PopInstance};
use serde_json::Value;

fn polyopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_instance(dir: &Path, name: &str, f: &str, h: &[&str], g: &[&str], n: usize) -> PathBuf {
    let p = |s: &&str| parse_polynomial(s, n).unwrap();
    let inst = PopInstance::new(p(&f), h.iter().map(p).collect(), g.iter().map(p).collect()).unwrap();
    let path = dir.join(name);
    InstanceFile::from_instance(&inst, InstanceMetadata::default()).write(&path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_local_on_the_ball() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "lin.json", "-x1", &[], &["1 - x1^2 - x2^2"], 2);
    let o = polyopt(&["check-local", s(&inst), "--point", "1,0", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["mu"][0].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert_eq!(v["kkt"], true);
    assert_eq!(v["scc"]["holds"], true);
    assert_eq!(v["second_order"]["sosc"], "holds");

    let o = polyopt(&["check-local", s(&inst), "--point", "0,0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).to_lowercase().contains("not a kkt point"), "{}", stdout(&o));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&polyopt(&["hierarchy", s(&bad)])), 2);
    assert_eq!(code(&polyopt(&["hierarchy", s(&dir.path().join("missing.json"))])), 2);

    let inst = write_instance(dir.path(), "q.json", "x1^4", &[], &[], 1);
    let o = polyopt(&["hierarchy", s(&inst), "--level", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains('2'));
    assert_eq!(code(&polyopt(&["check-local", s(&inst), "--point", "a"])), 2);
    assert_eq!(code(&polyopt(&["check-local", s(&inst), "--point", "1,2"])), 2);
    assert_eq!(code(&polyopt(&["gallery", "no-such-entry"])), 2);
}

#[test]
fn solver_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "m.json", "x1^4 - x1^2", &[], &["1 - x1^2"], 1);
    let o = polyopt(&["solve", s(&inst), "--max-iter", "1"]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
}

#[test]
fn solve_roundtrips_through_sdp_text() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "q.json", "x1^2 - 2 * x1 + 1", &[], &[], 1);
    let sdp = dir.path().join("q.sdp");
    let trace = dir.path().join("trace.csv");
    let o = polyopt(&["solve", s(&inst), "--write-sdp", s(&sdp), "--json"]);
    assert_eq!(code(&o), 0);
    let a: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(a["value"].as_f64().unwrap().abs() < 1e-6);

    let o = polyopt(&["solve", s(&sdp), "--solver-trace", s(&trace), "--json"]);
    assert_eq!(code(&o), 0);
    let b: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(a["primal_objective"], b["primal_objective"]);
    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("iter,mu,pobj,dobj"));
    assert_eq!(lines.count(), b["iterations"].as_u64().unwrap() as usize + 1);
}

#[test]
fn hierarchy_writes_certificates_that_reverify() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "q.json", "x1^2 - 2 * x1 + x2^2 + 4 * x2 + 5", &[], &[], 2);
    let certs = dir.path().join("certs");
    let csv = dir.path().join("bounds.csv");
    let o = polyopt(&[
        "hierarchy", s(&inst), "--ball", "10", "--cert-dir", s(&certs), "--csv", s(&csv), "--json",
    ]);
    assert_eq!(code(&o), 0);
    let run: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(run["stop_reason"], "flat");
    let u = run["minimizer"].as_array().unwrap();
    assert!((u[0].as_f64().unwrap() - 1.0).abs() < 1e-5);
    assert!((u[1].as_f64().unwrap() + 2.0).abs() < 1e-5);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("k,f_k"));

    let mut n = 0;
    for e in std::fs::read_dir(&certs).unwrap() {
        let path = e.unwrap().path();
        let cert = Certificate::read(&path).unwrap();
        assert!(verify_certificate(&cert, &cert.instance().unwrap()).passed);
        assert_eq!(code(&polyopt(&["verify", s(&path)])), 0);
        n += 1;
    }
    assert_eq!(n, 1);
}

#[test]
fn certify_then_verify_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "l.json", "x1 + x2", &[], &["1 - x1^2 - x2^2"], 2);
    let cert = dir.path().join("c.json");
    let o = polyopt(&["certify", s(&inst), "-o", s(&cert)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("VERIFIED"));
    let o = polyopt(&["verify", s(&cert), "--instance", s(&inst)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("PASS"));

    let mut c = Certificate::read(&cert).unwrap();
    c.grams[0].matrix[0][0] += 0.1;
    c.write(&cert).unwrap();
    let o = polyopt(&["verify", s(&cert), "--json"]);
    assert_eq!(code(&o), 4);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn ensemble_is_reproducible() {
    let args = ["random-ensemble", "--count", "6", "--seed", "3", "--json"];
    let a = polyopt(&args);
    let b = polyopt(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["count"], 6);
    let c = polyopt(&["random-ensemble", "--count", "6", "--seed", "4", "--json"]);
    assert_ne!(stdout(&a), stdout(&c));

    let o = polyopt(&["random-ensemble", "--count", "0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("count = 0"));
}

#[test]
fn gallery_lists_runs_and_exports() {
    let o = polyopt(&["gallery"]);
    assert_eq!(code(&o), 0);
    for name in ["motzkin-ball", "quadratic-ball", "linear-ball", "quartic-double-well"] {
        assert!(stdout(&o).contains(name));
    }
    let o = polyopt(&["gallery", "quartic-double-well"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("stop reason: flat"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("motzkin.json");
    assert_eq!(code(&polyopt(&["gallery", "motzkin-ball", "--export", s(&path)])), 0);
    let file = InstanceFile::read(&path).unwrap();
    assert_eq!(file.metadata.f_min, Some(0.0));
    assert_eq!(file.to_instance().unwrap().nvars(), 3);
}
