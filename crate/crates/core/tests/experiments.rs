use std::path::Path;

use qmcfem::error::Error;
use qmcfem::experiments::*;

/// A random study small enough for debug builds.
fn small(preset: &str, dir: &Path, extra: &str) -> ExperimentConfig {
    let text = format!(
        "preset = \"{preset}\"\nsubdivisions = 4\nprobes = 50\nworkers = 1\n\
         output_dir = \"{out}\"\ncache_dir = \"{cache}\"\n{extra}",
        out = dir.join("out").display(),
        cache = dir.join("cache").display(),
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

fn axis_config(dir: &Path) -> ExperimentConfig {
    small(
        "2",
        dir,
        "s1 = 8\nstudy = { kind = \"axis\", axis = \"y\", exponents = [2, 3, 4] }\n\
         reference = { kind = \"axis\", m = 7 }\n",
    )
}

fn root_cause(e: &Error) -> &Error {
    match e {
        Error::Stage { source, .. } => root_cause(source),
        e => e,
    }
}

#[test]
fn runs_are_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = axis_config(dir.path());
    let first = run_example(&c, &RunOptions::default()).unwrap();
    let csv = std::fs::read(&first.csv_path).unwrap();
    c.workers = 3;
    let second = run_example(&c, &RunOptions::default()).unwrap();
    assert_eq!(std::fs::read(&second.csv_path).unwrap(), csv);
    let (m1, m2) = (first.report.metadata.unwrap(), second.report.metadata.unwrap());
    assert_eq!(m1.config_hash, m2.config_hash);
    assert_eq!(m1.reference_cache_hit, Some(false));
    assert_eq!(m2.reference_cache_hit, Some(true));
    for (a, b) in m1.estimates.iter().zip(&m2.estimates) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn reference_cache_hits_misses_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let c = axis_config(dir.path());
    let fresh = build_reference(&c, None, false).unwrap();
    assert!(!fresh.cache_hit);
    assert_eq!(fresh.solves, 1 << 7);
    let hit = build_reference(&c, None, false).unwrap();
    assert!(hit.cache_hit && hit.solves == 0);
    assert_eq!(hit.value.to_bits(), fresh.value.to_bits());

    // The output directory and worker count are not part of the key.
    let mut moved = c.clone();
    moved.output_dir = dir.path().join("elsewhere");
    moved.workers = 2;
    assert!(build_reference(&moved, None, false).unwrap().cache_hit);

    let mut finer = c.clone();
    finer.subdivisions = 6;
    assert_ne!(reference_path(&finer).unwrap(), fresh.path);
    assert!(!build_reference(&finer, None, false).unwrap().cache_hit);

    let rebuilt = build_reference(&c, None, true).unwrap();
    assert!(!rebuilt.cache_hit);
    assert_eq!(rebuilt.value.to_bits(), fresh.value.to_bits());

    let text = std::fs::read_to_string(&fresh.path).unwrap();
    let bits = format!("{:016x}", fresh.value.to_bits());
    let tampered = text.replacen(&bits, &format!("{:016x}", fresh.value.to_bits() ^ 1), 1);
    assert_ne!(tampered, text);
    std::fs::write(&fresh.path, tampered).unwrap();
    let err = build_reference(&c, None, false).unwrap_err();
    assert!(matches!(err, Error::CacheCorrupt { .. }), "{err}");

    std::fs::write(&fresh.path, "{ not json").unwrap();
    assert!(matches!(build_reference(&c, None, false), Err(Error::CacheCorrupt { .. })));
    assert!(!build_reference(&c, None, true).unwrap().cache_hit);
    assert!(build_reference(&c, None, false).unwrap().cache_hit);
}

#[test]
fn failed_runs_leave_no_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = axis_config(dir.path());
    c.degree = 3;
    let err = run_example(&c, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "config", .. }), "{err}");
    assert!(!dir.path().join("out").exists());
    assert!(!dir.path().join("cache").exists());

    let mut c = axis_config(dir.path());
    c.b = 4;
    assert!(matches!(root_cause(&run_example(&c, &RunOptions::default()).unwrap_err()), Error::Config(_)));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn rates_agree_with_full_precision_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let c = axis_config(dir.path());
    let out = run_example(&c, &RunOptions::default()).unwrap();
    assert_eq!(out.meta_path, sidecar_path(&out.csv_path));
    let meta: ConvergenceReport = serde_json::from_str(&std::fs::read_to_string(&out.meta_path).unwrap()).unwrap();
    let errors = &meta.columns[1].values;
    let rates = &meta.columns[2].values;
    assert!(rates[0].is_nan());
    for k in 1..errors.len() {
        assert!((rates[k] - (errors[k - 1] / errors[k]).log2()).abs() < 1e-12);
    }
    let reference = meta.metadata.as_ref().unwrap().reference.unwrap();
    for (e, est) in errors.iter().zip(&meta.metadata.as_ref().unwrap().estimates) {
        assert_eq!(*e, (est - reference).abs());
    }

    let csv = std::fs::read_to_string(&out.csv_path).unwrap();
    let parsed = ConvergenceReport::from_csv(&csv, &out.csv_path).unwrap();
    assert_eq!(parsed.to_csv(), csv);
    assert_eq!(parsed.rows(), 3);
    assert_eq!(parsed.columns[0].values, vec![4.0, 8.0, 16.0]);
}

#[test]
fn sparse_study_reports_its_bound() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(
        "4b",
        dir.path(),
        "s1 = 4\ns2 = 4\nstudy = { kind = \"sparse\", levels = [3, 4, 5], theta = 2.0 }\n\
         reference = { kind = \"tensor\", m1 = 5, m2 = 5 }\n",
    );
    let report = compute_report(&c, &RunOptions::default()).unwrap();
    let m = &report.column("M").unwrap().values;
    assert!(m.windows(2).all(|w| w[0] < w[1]));
    let bound = &report.column(BOUND_COLUMN).unwrap().values;
    for (b, m) in bound.iter().zip(m) {
        assert!((b - m.ln() / m).abs() < 1e-15);
    }
    let meta = report.metadata.as_ref().unwrap();
    assert_eq!(meta.estimates.len(), 3);
    assert!(meta.estimates.iter().all(|v| v.is_finite()));

    let plot = dir.path().join("plots/sparse.dat");
    emit_plot_data(&report, &plot).unwrap();
    let text = std::fs::read_to_string(&plot).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for (row, (b, m)) in rows.iter().zip(bound.iter().zip(m)) {
        assert_eq!(row[0], *m);
        assert_eq!(row[2], *b);
    }
}

#[test]
fn plot_guide_has_slope_two_without_a_bound_column() {
    let report = ConvergenceReport {
        columns: vec![
            Column { name: "N".into(), kind: ColumnKind::Count, values: vec![8.0, 16.0, 32.0, 64.0] },
            Column { name: "err".into(), kind: ColumnKind::Error, values: vec![1e-3, 3e-4, 6e-5, 1e-5] },
        ],
        plot_x: 0,
        plot_error: 1,
        plot_guide: None,
        metadata: None,
    };
    let text = report.plot_data().unwrap();
    let guide: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(guide[0], 1e-3);
    for w in guide.windows(2) {
        assert!(((w[0] / w[1]).log2() - 2.0).abs() < 1e-12);
    }

    let empty = ConvergenceReport { columns: vec![], ..report };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.dat");
    assert!(emit_plot_data(&empty, &path).is_err());
    assert!(!path.exists());
}

#[test]
fn mesh_study_matches_its_own_columns() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig::from_toml(&format!(
        "preset = \"1\"\nstudy = {{ kind = \"mesh\", subdivisions = [4, 8, 16] }}\noutput_dir = \"{}\"\n",
        dir.path().display()
    ))
    .unwrap();
    let report = compute_report(&c, &RunOptions::default()).unwrap();
    assert_eq!(report.columns.len(), 5);
    let l2 = &report.columns[1].values;
    assert!(l2.windows(2).all(|w| w[0] > w[1]));
    // The functional of the manufactured solution is zero.
    let meta = report.metadata.unwrap();
    for (v, e) in meta.estimates.iter().zip(&report.columns[3].values) {
        assert_eq!(v.abs(), *e);
    }
}
