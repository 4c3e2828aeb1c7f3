use std::path::Path;
use std::process::{Command, Output};

fn qmcfem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmcfem"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_table_sidecar_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("mesh.toml"),
        "preset = \"1\"\nstudy = { kind = \"mesh\", subdivisions = [4, 8, 16] }\n",
    )
    .unwrap();
    let out = qmcfem(dir.path(), &["run", "--config", "mesh.toml", "--out", "tables"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("tables/example1.csv")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), csv);
    assert!(csv.starts_with("J,||u-u_h||,CR,|L_1(u-u_h)|,CR\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("tables/example1.csv.meta.json").exists());

    let out = qmcfem(dir.path(), &["plotdata", "--report", "tables/example1.csv", "--out", "plots/p1.dat"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let plot = std::fs::read_to_string(dir.path().join("plots/p1.dat")).unwrap();
    assert_eq!(plot.lines().count(), 4);
    assert!(plot.starts_with('#'));
}

#[test]
fn conflicting_or_missing_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmcfem(dir.path(), &["run"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--preset or --config"));

    let out = qmcfem(dir.path(), &["run", "--preset", "7"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown preset"));

    std::fs::write(dir.path().join("c.toml"), "preset = \"2\"\n").unwrap();
    let out = qmcfem(dir.path(), &["run", "--preset", "3", "--config", "c.toml"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("conflicts"));

    std::fs::write(dir.path().join("bad.toml"), "preset = \"2\"\ndegree = 5\n").unwrap();
    let out = qmcfem(dir.path(), &["run", "--config", "bad.toml", "--out", "tables"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("degree"));
    assert!(!dir.path().join("tables").exists());

    std::fs::write(dir.path().join("typo.toml"), "preset = \"2\"\nsubdivision = 8\n").unwrap();
    let out = qmcfem(dir.path(), &["reference", "--config", "typo.toml"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn reference_is_cached_between_invocations() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("r.toml"),
        "preset = \"3\"\nsubdivisions = 4\ns2 = 6\nprobes = 20\nreference = { kind = \"axis\", m = 5 }\n",
    )
    .unwrap();
    let first = qmcfem(dir.path(), &["reference", "--config", "r.toml"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stderr(&first).starts_with("computed (32 solves)"));
    let second = qmcfem(dir.path(), &["reference", "--config", "r.toml"]);
    assert!(stderr(&second).starts_with("cache hit (0 solves)"));
    assert_eq!(first.stdout, second.stdout);
    let value: f64 = String::from_utf8(first.stdout).unwrap().trim().parse().unwrap();
    assert!(value.is_finite() && value != 0.0);
}

#[test]
fn gen_vector_reproduces_the_stored_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let weights = data("weights.toml");
    let args = ["gen-vector", "--m", "11", "--alpha", "3", "--s", "4", "--weights", weights.as_str()];
    let out = qmcfem(dir.path(), &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let expected = std::fs::read_to_string(data("vector_b2_m11.txt")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);

    let out = qmcfem(dir.path(), &[&args[..], &["--out", "v.txt"]].concat());
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("v.txt")).unwrap(), expected);

    let out = qmcfem(dir.path(), &["gen-vector", "--b", "4", "--m", "3", "--alpha", "2", "--s", "2", "--weights", weights.as_str()]);
    assert!(!out.status.success());
}
