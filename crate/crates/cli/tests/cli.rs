use std::process::{Command, Output};

fn vistrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vistrace"))
        .args(args)
        .env_remove("VISTRACE_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_writes_a_mask() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("comb.txt");
    let o = vistrace(&[
        "generate",
        "comb",
        "--param",
        "cells=84",
        "--param",
        "teeth=4",
        "-o",
        file.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.lines().count() > 100);
    assert!(String::from_utf8_lossy(&o.stderr).contains("interior cells"));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = vistrace(&[
        "run", "--domain", "disk", "--param", "cells=40", "--out", out, "--format", "json,csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("c2 = "), "{s}");
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("trace_atoms.csv").exists());
    assert!(!dir.path().join("plot").exists());

    let r = vistrace(&["report", out]);
    assert!(r.status.success());
    assert!(stdout(&r).contains("john certificates ok = true"));
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vistrace"))
        .args([
            "run", "--domain", "disk", "--param", "cells=32", "--format", "json",
        ])
        .env("VISTRACE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn verify_prints_one_line_per_case() {
    let o = vistrace(&["verify", "co-dim-change", "--instances", "5"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(
        s.lines().filter(|l| l.starts_with("PASS")).count(),
        5,
        "{s}"
    );
    assert!(s.ends_with("co-dim-change: ok\n"));
}

#[test]
fn bad_input_fails_cleanly() {
    let o = vistrace(&["verify", "no-such-lemma"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown lemma"));

    let o = vistrace(&[
        "run", "--domain", "disk", "--eta", "0.9", "--format", "json",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta must lie in"));

    let o = vistrace(&["run", "--param", "cells=10"]);
    assert!(!o.status.success());
}
