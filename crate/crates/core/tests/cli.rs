use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const CONFIG: &str = r#"
[lattice]
kind = "triangular"
rows = 40
cols = 40

[model]
lambdas = [0.07, 0.05]
mu = 0.03
seed = 5

[estimation]
n_s = 4
n_opt = 3
mu_max = 0.05
master_seed = 9

[abc]
prior_rel = 0.5
draws = 50
seed = 2
"#;

fn cperc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cperc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_ok(args: &[&str]) -> Output {
    let o = cperc(args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    o
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let out = out.to_str().unwrap();
        run_ok(&["simulate", "--config", &cfg, "--out", out]);
        let field = format!("{out}/field.txt");
        run_ok(&["estimate", "--config", &cfg, "--out", out, "--field", &field]);
        run_ok(&["abc", "--config", &cfg, "--out", out, "--field", &field, "--epsilon", "1"]);
        files.push(
            ["field.txt", "estimate.txt", "abc.csv"]
                .map(|f| fs::read_to_string(format!("{out}/{f}")).unwrap())
                .map(|s| s.replace(out, "")),
        );
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn all_zero_field_is_degenerate() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let field = tmp.path().join("zero.txt");
    fs::write(&field, "#field triangular 2 3 1\n0 0 0\n0 0 0\n").unwrap();
    let o = cperc(&["estimate", "--config", &cfg, "--field", field.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn parse_error_names_line_and_column() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let field = tmp.path().join("bad.txt");
    fs::write(&field, "#field triangular 2 2 1\n0 1\n1 q\n").unwrap();
    let o = cperc(&["estimate", "--config", &cfg, "--field", field.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("column 3"), "{err}");
}

#[test]
fn supercritical_mu_max_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &CONFIG.replace("mu_max = 0.05", "mu_max = 0.4"));
    let field = tmp.path().join("f.txt");
    fs::write(&field, "#field triangular 2 2 1\n0 1\n1 0\n").unwrap();
    let o = cperc(&["estimate", "--config", &cfg, "--field", field.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("subcritical"), "{}", stderr(&o));
}

#[test]
fn huge_epsilon_accepts_everything() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let out = tmp.path().to_str().unwrap();
    run_ok(&["simulate", "--config", &cfg, "--out", out]);
    let field = format!("{out}/field.txt");
    let o = run_ok(&["abc", "--config", &cfg, "--out", out, "--field", &field, "--epsilon", "1e300"]);
    let csv = fs::read_to_string(format!("{out}/abc.csv")).unwrap();
    assert!(csv.contains("# accepted 50 rate 1.0000000000000000e0"), "{csv}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("50"));
}

#[test]
fn zero_seed_probabilities_give_an_empty_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &CONFIG.replace("[0.07, 0.05]", "[0.0, 0.0]"));
    let out = tmp.path().to_str().unwrap();
    for method in ["1", "2"] {
        run_ok(&["simulate", "--config", &cfg, "--out", out, "--method", method]);
        let text = fs::read_to_string(format!("{out}/field.txt")).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 40);
        assert!(body.iter().all(|l| l.split(' ').all(|t| t == "0")));
    }
}

#[test]
fn moments_without_contamination() {
    let o = run_ok(&["moments", "--lambda", "0.05", "--mu", "0"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("first_moment 0.05\n"));
}
