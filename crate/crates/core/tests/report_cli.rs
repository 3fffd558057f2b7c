//! End-to-end checks of the command-line front end through `cli::run`.

use std::path::{Path, PathBuf};

use control_curvature::report::{cli, load_system, load_system_str, LoadError};

fn systems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("systems")
}

fn shipped(name: &str) -> String {
    systems_dir().join(name).to_string_lossy().into_owned()
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ctrlcurv(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("ctrlcurv").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn write_temp(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn every_shipped_system_loads_and_checks() {
    let mut names: Vec<_> = std::fs::read_dir(systems_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    assert!(names.len() >= 8, "{names:?}");
    for name in names {
        let path = shipped(&name);
        load_system(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        let r = ctrlcurv(&["check", &path, "--grid", "3", "--u-samples", "8"]);
        assert_eq!(r.code, cli::EXIT_OK, "{name}: {}", r.stderr);
        let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
        assert_eq!(v["excluded"], 0, "{name}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"], &["check", "--help"]] {
        let r = ctrlcurv(args);
        assert_eq!(r.code, cli::EXIT_OK);
        assert!(!r.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let flat = shipped("flat.json");
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["check", &flat, "--bogus"],
        vec!["check", &flat, "--tol", "-1"],
        vec!["check", &flat, "--fd-step", "2"],
        vec!["check", &flat, "--grid", "2"],
        vec!["check", &flat, "--format", "xml"],
        vec!["check", "/nonexistent/system.json"],
        vec!["extremals", &flat, "--init", "0,0"],
        vec!["extremals", &flat, "--t-end", "0"],
        vec!["generate", "--a1", "sin(", "--a2", "0"],
    ];
    for args in cases {
        let r = ctrlcurv(&args);
        assert_eq!(r.code, cli::EXIT_USAGE, "{args:?}: {}", r.stderr);
        assert!(!r.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn malformed_files_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"kind":"riemannian","e1":["1","0"],"e2":["0","1"],"extra":1}"#, "extra"),
        (r#"{"kind":"riemannian","e1":["1","0"],"e2":["0","1+"]}"#, "e2[1]"),
        (r#"{"kind":"warp","f":["1","0"]}"#, "warp"),
        (r#"{"schema":"2","kind":"general","f":["cos(u)","sin(u)"]}"#, "schema"),
        (r#"{"kind":"zermelo","e1":["1","0"],"e2":["0","1"],"x":["0","0"],"drift":["0","0"]}"#, "drift"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let err = load_system_str(text).unwrap_err();
        assert!(!matches!(err, LoadError::Regularity { .. }), "{text}");
        assert!(err.to_string().contains(needle), "`{err}` should mention {needle}");
        let path = write_temp(dir.path(), &format!("bad{i}.json"), text);
        assert_eq!(ctrlcurv(&["invariants", &path]).code, cli::EXIT_USAGE);
    }
}

#[test]
fn irregular_system_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(dir.path(), "line.json", r#"{"kind":"general","f":["cos(u)","0"]}"#);
    let r = ctrlcurv(&["check", &path]);
    assert_eq!(r.code, cli::EXIT_NUMERICAL);
    assert!(r.stderr.contains("regular"), "{}", r.stderr);
}

#[test]
fn mostly_excluded_grid_is_unreliable() {
    // |X| < 1 holds only for |q1| < 1; the widened region leaves most samples out.
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"kind":"zermelo","e1":["1","0"],"e2":["0","1"],"drift":["q1","0"],
                   "region":{"q1":[-0.5,0.5],"q2":[-0.5,0.5]}}"#;
    let path = write_temp(dir.path(), "wide.json", text);
    let region = ["--region", "-2,2,-1,1", "--grid", "9", "--u-samples", "8"];
    let mut args = vec!["check", path.as_str()];
    args.extend(region);
    let r = ctrlcurv(&args);
    assert_eq!(r.code, cli::EXIT_UNRELIABLE, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["unreliable"], true);
    assert!(v["excluded_reasons"]["navigation"].as_u64().unwrap() > 0);
    args[0] = "invariants";
    let r = ctrlcurv(&args);
    assert_eq!(r.code, cli::EXIT_UNRELIABLE);
    assert!(r.stdout.contains("excluded:navigation"));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = shipped("sphere.json");
    for (cmd, fmt) in [("invariants", "csv"), ("invariants", "json"), ("check", "json"), ("check", "csv")] {
        let a = dir.path().join(format!("{cmd}_a.{fmt}"));
        let b = dir.path().join(format!("{cmd}_b.{fmt}"));
        for p in [&a, &b] {
            let r = ctrlcurv(&[cmd, &sphere, "--grid", "3", "--u-samples", "8", "--format", fmt, "--out", p.to_str().unwrap()]);
            assert_eq!(r.code, cli::EXIT_OK, "{}", r.stderr);
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{cmd} {fmt}");
    }
}

#[test]
fn invariants_csv_has_one_row_per_sample() {
    let r = ctrlcurv(&["invariants", &shipped("flat.json"), "--grid", "3", "--u-samples", "8"]);
    assert_eq!(r.code, cli::EXIT_OK);
    let mut lines = r.stdout.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("q1,q2,u,c,b,kappa"), "{header}");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 3 * 8);
    assert!(rows.iter().all(|r| r.ends_with(",ok")));
}

#[test]
fn flat_extremals_are_straight_rays() {
    let r = ctrlcurv(&["extremals", &shipped("flat.json"), "--from", "-0.1,-0.2", "--angles", "8", "--t-end", "0.8"]);
    assert_eq!(r.code, cli::EXIT_OK, "{}", r.stderr);
    let mut rows = r.stdout.lines();
    assert_eq!(rows.next().unwrap(), "trajectory,t,q1,q2,u,status");
    let mut starts = std::collections::BTreeMap::new();
    let mut worst: f64 = 0.0;
    for line in rows {
        let cols: Vec<&str> = line.split(',').collect();
        let k: usize = cols[0].parse().unwrap();
        let x: Vec<f64> = cols[1..5].iter().map(|c| c.parse().unwrap()).collect();
        let u0 = *starts.entry(k).or_insert(x[3]);
        // Collinear with the start and moving in direction u0 at unit speed.
        let (d1, d2) = (x[1] + 0.1, x[2] + 0.2);
        worst = worst.max((d1 * u0.sin() - d2 * u0.cos()).abs());
        worst = worst.max((d1 * u0.cos() + d2 * u0.sin() - x[0]).abs());
        worst = worst.max((x[3] - u0).abs());
    }
    assert_eq!(starts.len(), 8);
    assert!(worst < 1e-9, "deviation {worst:e}");
}

#[test]
fn extremals_write_one_file_per_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let r = ctrlcurv(&[
        "extremals",
        &shipped("sphere.json"),
        "--init",
        "1.5,0,0.3",
        "--init",
        "1.2,0.2,2",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, cli::EXIT_OK, "{}", r.stderr);
    let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files, ["trajectory_000.json", "trajectory_001.json"]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("trajectory_001.json")).unwrap()).unwrap();
    assert!(v.to_string().contains("completed"));
}

#[test]
fn generated_system_file_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    let r = ctrlcurv(&[
        "generate",
        "--a1",
        "0.2*sin(u)",
        "--a2",
        "0.1*cos(u) + 0.3*q2^2",
        "--span",
        "2",
        "--grid",
        "3",
        "--u-samples",
        "8",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(r.code, cli::EXIT_OK, "{}", r.stderr);
    let loaded = load_system(&path).unwrap();
    assert_eq!(loaded.file.to_json() + "\n", std::fs::read_to_string(&path).unwrap());
    let csv = ctrlcurv(&["generate", "--a1", "0.2", "--a2", "-0.3*cos(u)", "--sign", "-1", "--format", "csv"]);
    assert_eq!(csv.code, cli::EXIT_OK, "{}", csv.stderr);
    assert!(csv.stdout.starts_with("q1,q2,u,f1,f2,fu1,fu2"));
}

#[test]
fn selftest_detects_injected_fault() {
    let good = ctrlcurv(&["selftest", "--quick"]);
    assert_eq!(good.code, cli::EXIT_OK, "{}", good.stderr);
    let v: serde_json::Value = serde_json::from_str(&good.stdout).unwrap();
    assert_eq!(v["passed"], true);
    let bad = ctrlcurv(&["selftest", "--quick", "--inject-fault"]);
    assert_eq!(bad.code, cli::EXIT_NUMERICAL);
    assert!(bad.stderr.contains("FAIL"));
}

#[test]
fn binary_propagates_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ctrlcurv");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["--version"]), Some(cli::EXIT_OK));
    assert_eq!(status(&["check", "--grid"]), Some(cli::EXIT_USAGE));
    let flat = shipped("flat.json");
    assert_eq!(status(&["check", &flat, "--grid", "3", "--u-samples", "8"]), Some(cli::EXIT_OK));
}
