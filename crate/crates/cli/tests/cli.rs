use std::fs;
use std::path::Path;
use std::process::Command;

fn ergoscope(args: &[&str], envs: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ergoscope"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const BOUND: &str = r#"
seed = 3
[lattice]
size = 8
[model]
h = 1.0
[partition]
l = 2
[state]
builder = "pair_family"
lambda = 0.25
[reference]
policy = "canonical_matched"
[[channels]]
kind = "identity"
[[channels]]
kind = "cnot_protocol"
[[channels]]
kind = "random_circuits"
count = 5
"#;

#[test]
fn strict_partition_mismatch_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[lattice]\nsize = 9\n[partition]\nl = 2\n");
    let out = ergoscope(&["bound", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("partition") && err.contains("c.toml"), "{err}");
}

#[test]
fn unknown_key_exits_1_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[lattice]\nsize = 8\nspin = 1\n");
    let out = ergoscope(&["bound", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spin"));
}

#[test]
fn budget_exceeded_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BOUND);
    let out = ergoscope(
        &["bound", "--config", &cfg, "--out", dir.path().to_str().unwrap()],
        &[("ERGOSCOPE_BUDGET_BYTES", "1024")],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BOUND);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = ergoscope(
            &[
                "bound",
                "--config",
                &cfg,
                "--out",
                d.to_str().unwrap(),
                "--threads",
                "2",
            ],
            &[],
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ja = fs::read(a.join("bound_report.json")).unwrap();
    assert_eq!(ja, fs::read(b.join("bound_report.json")).unwrap());
    let text = String::from_utf8(ja).unwrap();
    assert!(text.contains("\"config_hash\"") && text.contains("\"seed\": \"3\""));
}

#[test]
fn seed_override_changes_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BOUND);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ergoscope(&["bound", "--config", &cfg, "--out", a.to_str().unwrap()], &[]);
    ergoscope(
        &["bound", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "4"],
        &[],
    );
    assert_ne!(
        fs::read(a.join("bound_report.json")).unwrap(),
        fs::read(b.join("bound_report.json")).unwrap()
    );
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"lattice": {"size": 4}, "model": {"preset": "mixed_field_ising"}, "thermo_curve": {"target": "block"}}"#,
    );
    let out = ergoscope(
        &["thermo-curve", "--config", &cfg, "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("thermo_curve.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "beta,F,E,S,sigma2"));
    assert!(csv.contains("# config_hash:"));
}

#[test]
fn fig1_quarter_row_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[lattice]\nsize = 20\n[fig1]\nl = 4\nlambda_points = 4\ned_l = [2]\n[fig1.betas]\nmin = 0.1\nmax = 5.0\npoints = 10\n",
    );
    let out = ergoscope(&["fig1", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("fig1_lambda.csv")).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect::<Vec<f64>>())
        .find(|r| r[0] == 0.25)
        .unwrap();
    // H2(1/4) = ln 4 - (3/4) ln 3
    let s = 4f64.ln() - 0.75 * 3f64.ln();
    assert!((row[1] - s).abs() < 1e-15);
    assert!((row[2] + 0.75).abs() < 1e-15);
    assert!(row[3] <= row[2]);
}
