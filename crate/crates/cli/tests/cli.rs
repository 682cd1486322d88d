use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mhess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhess")).args(args).output().expect("binary runs")
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    out: PathBuf,
}

impl Run {
    fn manifest(&self) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out.join("manifest.json")).unwrap()).unwrap()
    }
}

fn run_cmd(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{cmd}-{}.cfg", fs::read_dir(dir).unwrap().count()));
    fs::write(&cfg, config).unwrap();
    run_path(dir, cmd, &cfg, extra)
}

fn run_path(dir: &Path, cmd: &str, cfg: &Path, extra: &[&str]) -> Run {
    let out = dir.join(format!("out-{}", fs::read_dir(dir).unwrap().count()));
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = mhess(&args);
    Run {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        out,
    }
}

const MANUFACTURED: &str = "n = 3\nm = 2\nk = 2\nmanufactured = quartic:0.05\ncells = 32\n";

#[test]
fn solve_manufactured_radial_succeeds_with_error_report() {
    let d = TempDir::new().unwrap();
    let r = run_cmd(d.path(), "solve", MANUFACTURED, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = r.manifest();
    assert_eq!(m["status"], "converged");
    assert!(m["error_report"]["linf"].as_f64().unwrap() < 1e-3);
    assert_eq!(m["diagnostics"]["passed"], true);
    assert!(!m["steps"].as_array().unwrap().is_empty());
    let csv = fs::read_to_string(r.out.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x1,x2,x3,u,margin"));
    assert_eq!(lines.count(), 33);
    // boundary rows carry no cone margin
    assert!(csv.lines().last().unwrap().ends_with(','));
}

#[test]
fn solve_t0_trivial_problem_takes_no_newton_iterations() {
    let d = TempDir::new().unwrap();
    let r = run_cmd(d.path(), "solve", "n = 3\nm = 2\nk = 2\nf = 12\na = 1\nb = r + 0.5*r^2\n", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.manifest()["summary"]["newton_iterations"], 0);
}

#[test]
fn exit_code_matrix() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    let cases: &[(&str, &str, i32, &str)] = &[
        ("solve", MANUFACTURED, 0, ""),
        ("solve", "n = 3\nm = 2\nk = 2\nf = 1 - 2*r\nb = 1\n", 1, "must be positive"),
        ("solve", "n = 3\nm = 2\nk = 2\nf = 12 + 40*r^2\nb = 3\ntol = 1e-300\ndt_min = 0.05\ncells = 16\n", 2, "stalled"),
        ("solve", "n = 3\nm = 2\nk = 2\nf = 1\nb = 1\ncolour = red\n", 1, "colour"),
        ("solve", "n = 3\nm = 2\nk = 2\nf = 2 + x1\nb = 1\n", 1, "radially symmetric"),
        ("solve", "n = 3\nm = 2\nk = 2\nf = 2 +\nb = 1\n", 1, ""),
        ("solve", "n = 3\nn = 3\n", 1, "duplicate"),
        ("verify", "suite = prop24\nn = 5\nk = 3\n", 0, ""),
        ("verify", "suite = prop26\nn = 3\nm = 2\n", 1, "no k satisfies 2 <= k <= (n-m)/n*C(n,m)"),
        ("verify", "suite = prop99\n", 1, "unknown suite"),
        ("barrier-check", "n = 4\nm = 2\nk = 2\n", 0, ""),
        ("barrier-check", "n = 4\nm = 2\nk = 5\nlemma = 53\n", 1, "lemma53"),
    ];
    for (cmd, cfg, code, needle) in cases {
        let r = run_cmd(p, cmd, cfg, &[]);
        assert_eq!(r.code, *code, "{cmd} with {cfg:?}: {}{}", r.stdout, r.stderr);
        assert!(r.stderr.contains(needle) || r.stdout.contains(needle), "{cmd} {cfg:?}: {}", r.stderr);
    }
    let r = mhess(&["solve", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(r.status.code(), Some(1));
    let r = mhess(&["solve", "--format", "xml"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn nonconvergence_still_writes_manifest() {
    let d = TempDir::new().unwrap();
    let cfg = "n = 3\nm = 2\nk = 2\nf = 12 + 40*r^2\nb = 3\ntol = 1e-300\ndt_min = 0.05\ncells = 16\n";
    let r = run_cmd(d.path(), "solve", cfg, &[]);
    assert_eq!(r.code, 2);
    let m = r.manifest();
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("continuation stalled"));
}

#[test]
fn manifest_replay_is_bit_identical() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    for (cmd, cfg, file) in [
        ("solve", MANUFACTURED, "solution.csv"),
        ("verify", "suite = prop23\nn = 4\ntrials = 500\n", "report.csv"),
        ("verify", "suite = jacobian\nn = 3\nm = 2\nk = 2\ntrials = 3\n", "report.csv"),
        ("barrier-check", "n = 4\nm = 2\nlemma = 55\nk0 = 1\n", "report.csv"),
    ] {
        let a = run_cmd(p, cmd, cfg, &["--seed", "11"]);
        assert_eq!(a.code, 0, "{}", a.stderr);
        assert_eq!(a.manifest()["seed"], 11);
        assert_eq!(a.manifest()["config"]["seed"], "11");
        let b = run_path(p, cmd, &a.out.join("manifest.json"), &[]);
        assert_eq!(b.code, 0, "{}", b.stderr);
        for f in ["manifest.json", file] {
            assert_eq!(fs::read(a.out.join(f)).unwrap(), fs::read(b.out.join(f)).unwrap(), "{cmd}: {f} differs");
        }
    }
}

#[test]
fn manifest_from_another_command_is_rejected() {
    let d = TempDir::new().unwrap();
    let a = run_cmd(d.path(), "verify", "suite = prop21\nn = 3\ntrials = 10\n", &[]);
    assert_eq!(a.code, 0);
    let b = run_path(d.path(), "solve", &a.out.join("manifest.json"), &[]);
    assert_eq!(b.code, 1);
}

#[test]
fn seed_changes_verify_report() {
    let d = TempDir::new().unwrap();
    let cfg = "suite = prop21\nn = 4\ntrials = 50\n";
    let a = run_cmd(d.path(), "verify", cfg, &["--seed", "1"]);
    let b = run_cmd(d.path(), "verify", cfg, &["--seed", "2"]);
    assert_ne!(a.manifest()["cases"], b.manifest()["cases"]);
}

#[test]
fn verify_spectral_lift_desk_sweep() {
    let d = TempDir::new().unwrap();
    let r = run_cmd(d.path(), "verify", "suite = spectral-lift\ntrials = 1000\n", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = r.manifest();
    assert_eq!(m["totals"]["cases"], 10);
    assert_eq!(m["totals"]["violations"], 0);
}

#[test]
fn cone_check_classifies_rows() {
    let d = TempDir::new().unwrap();
    let input = d.path().join("h.csv");
    fs::write(&input, "# identity, then diag(1, 1, -1)\n1,0,0,0,1,0,0,0,1\n1,0,0,0,1,0,0,0,-1\n").unwrap();
    let cfg = format!("input = {}\nm = 2\n", input.display());
    let r = run_cmd(d.path(), "cone-check", &cfg, &["--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows: Value = serde_json::from_str(&fs::read_to_string(r.out.join("report.json")).unwrap()).unwrap();
    assert_eq!(rows[0]["row"], 2);
    assert_eq!(rows[0]["largest_admissible_k"], 3);
    assert_eq!(rows[1]["largest_admissible_k"], 1);
    assert!(r.stdout.contains("largest admissible k = 1"));
}

#[test]
fn cone_check_empty_and_malformed() {
    let d = TempDir::new().unwrap();
    let empty = d.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let r = run_cmd(d.path(), "cone-check", &format!("input = {}\n", empty.display()), &[]);
    assert_eq!(r.code, 0);
    assert_eq!(r.manifest()["rows"], Value::Array(vec![]));
    let bad = d.path().join("bad.csv");
    fs::write(&bad, "1,0,0,1\n1,0,0\n").unwrap();
    let r = run_cmd(d.path(), "cone-check", &format!("input = {}\n", bad.display()), &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("row 2"), "{}", r.stderr);
}

#[test]
fn solve_json_format() {
    let d = TempDir::new().unwrap();
    let r = run_cmd(d.path(), "solve", "n = 3\nm = 2\nk = 2\nmanufactured = bowl\ncells = 8\n", &["--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows: Value = serde_json::from_str(&fs::read_to_string(r.out.join("solution.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 9);
    assert_eq!(rows[8]["margin"], Value::Null);
    assert!(!r.out.join("solution.csv").exists());
}

#[test]
fn solve_box_mode() {
    let d = TempDir::new().unwrap();
    let r = run_cmd(d.path(), "solve", "n = 3\nm = 2\nk = 2\ndomain = box\nmanufactured = box-cosine:0.05\ncells = 6\n", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.manifest()["grid"]["nodes"], 343);
}
