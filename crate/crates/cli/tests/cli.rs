use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const XOR: &str = r#"
kind = "single"
alphabets = { X = 2, S = 2, Y = 2 }
state_pmf = [0.5, 0.5]
transition = [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]
"#;

const BLACKWELL: &str = r#"
kind = "bc"
alphabets = { X = 3, S = 1, Y1 = 2, Y2 = 2 }
state_pmf = [1.0]
transition = [[[1, 0, 0, 0]], [[0, 0, 0, 1]], [[0, 1, 0, 0]]]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirtycap"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn info_on_xor() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "xor.toml", XOR);
    let o = run(&["info", s(&f)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("deterministic=true"), "{out}");
    assert!(out.contains("|X|=2 |S|=2 |Y|=2"), "{out}");
    assert!(out.contains("seed=0"), "{out}");
}

#[test]
fn single_user_capacities_on_xor() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "xor.toml", XOR);
    let o = run(&["capacity", "single", s(&f), "--grid-k", "8", "--restarts", "8"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for key in ["gp=1.000", "csirt=1.000", "det=1.000", "grid_k=8"] {
        assert!(out.contains(key), "missing {key} in {out}");
    }
}

#[test]
fn malformed_row_exits_2_with_row_index() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.toml", &XOR.replace("[[0, 1], [1, 0]]]", "[[0, 1], [0.9, 0]]]"));
    let o = run(&["info", s(&f)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 3"), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["info"]).status.code(), Some(1));
    assert_eq!(run(&["info", "x.toml", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn wrong_kind_is_rejected() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "xor.toml", XOR);
    let o = run(&["region", "bc", s(&f), "--bound", "det"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn region_csv_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bw.toml", BLACKWELL);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run(&["region", "bc", s(&f), "--bound", "det", "--grid-k", "16", "--seed", "5", "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("R1,R2\n"));
    // sum rate of the Blackwell channel is log2(3)
    let best = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).sum::<f64>())
        .fold(0.0, f64::max);
    assert!((best - 3f64.log2()).abs() < 1e-2, "{best}");
}

#[test]
fn raw_region_lists_members() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bw.toml", BLACKWELL);
    let out = dir.path().join("raw.csv");
    let o = run(&["region", "bc", s(&f), "--bound", "det", "--grid-k", "4", "--convexify", "off", "--out", s(&out)]);
    assert!(o.status.success());
    assert!(fs::read_to_string(&out).unwrap().starts_with("member,R1,R2\n"));
}

#[test]
fn gaussian_relay_and_sweep() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("alpha.csv");
    let args = ["relay", "gaussian", "--P", "1", "--Pr", "1", "--Nr", "1", "--Nd", "1", "--Psr", "2", "--rho", "-0.3", "--steps", "10", "--alpha-sweep", s(&csv)];
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("capacity=0.500000000"));
    let first = fs::read(&csv).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, fs::read(&csv).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("alpha,term1,term2,min\n"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn invalid_gaussian_params_fail() {
    let o = run(&["relay", "gaussian", "--P", "1", "--Pr", "1", "--Nr", "0", "--Nd", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn binning_batches_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "xor.toml", XOR);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run(&[
            "simulate", "binning", "--channel", s(&f), "--rate", "0.5", "--n", "400", "--trials", "120", "--seed", "8",
            "--grid-k", "4", "--restarts", "4", "--out", s(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().next(), Some("batch,trials,errors,encode_failures"));
    assert_eq!(text.lines().count(), 4);
}
