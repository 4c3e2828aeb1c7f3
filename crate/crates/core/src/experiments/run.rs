use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use crate::error::Result;
use crate::estimators::{
    direct_estimate, tensor_estimate, Axis, Estimate, RuleFamily, SparseSchedule, TensorCache,
};
use crate::fem::{
    example1_exact_and_forcing, functional_mean, l2_error_centroid, solve, DiscreteDisplacement,
    Discretization, ParametricProblem, SolverKind, SolverOptions,
};
use crate::qmc::PointSet;

use super::config::{ExperimentConfig, PresetId, Study};
use super::reference::build_reference;
use super::report::{
    count_column, rate_columns, version_string, Column, ColumnKind, ConvergenceReport, ReportMetadata,
    BOUND_COLUMN,
};
use super::setup::{preset_fields, RandomSetup};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Recompute the reference value even when a cache entry exists.
    pub rebuild_reference: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ConvergenceReport,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
}

/// Runs one experiment and writes its table. Nothing is written unless every
/// stage succeeds.
pub fn run_example(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome> {
    let report = compute_report(config, options)?;
    let csv_path = config.csv_path();
    let meta_path = report.write(&csv_path).map_err(|e| e.in_stage("output"))?;
    Ok(RunOutcome {
        report,
        csv_path,
        meta_path,
    })
}

/// Runs one experiment without touching the output directory. The reference
/// cache is still read and filled.
pub fn compute_report(config: &ExperimentConfig, options: &RunOptions) -> Result<ConvergenceReport> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let start = Instant::now();
    let mut report = match config.preset {
        PresetId::Example1 => mesh_study(config)?,
        _ => random_study(config, options)?,
    };
    if let Some(meta) = report.metadata.as_mut() {
        meta.total_wall_time = start.elapsed().as_secs_f64();
    }
    Ok(report)
}

fn metadata(config: &ExperimentConfig) -> ReportMetadata {
    ReportMetadata {
        preset: config.preset.to_string(),
        config_hash: config.hash(),
        version: version_string(),
        reference: None,
        reference_cache_hit: None,
        estimates: Vec::new(),
        solves: Vec::new(),
        wall_times: Vec::new(),
        total_wall_time: 0.0,
        warnings: Vec::new(),
    }
}

fn mesh_study(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    let Study::Mesh { subdivisions } = &config.study else {
        unreachable!("validated study kind")
    };
    let (mu, lambda) = preset_fields(config);
    let (exact, forcing) = example1_exact_and_forcing();
    let mut meta = metadata(config);
    let (mut l2, mut func) = (Vec::new(), Vec::new());
    for &j in subdivisions {
        let start = Instant::now();
        let disc = Arc::new(Discretization::uniform(j, config.degree).map_err(|e| e.in_stage("discretization"))?);
        let problem = ParametricProblem::new(disc.clone(), &mu, &lambda, &forcing);
        for w in problem.warnings() {
            if !meta.warnings.contains(w) {
                meta.warnings.push(w.clone());
            }
        }
        let system = problem.assemble(&[], &[]).map_err(|e| e.in_stage("discretization"))?;
        let x = solve(&system, SolverKind::for_subdivisions(j), SolverOptions::default().tol)
            .map_err(|e| e.in_stage("estimate"))?;
        let u = DiscreteDisplacement::new(&disc, x)?;
        // The exact functional vanishes by antisymmetry of the solution.
        let value = functional_mean(&u);
        l2.push(l2_error_centroid(&u, &exact));
        func.push(value.abs());
        meta.estimates.push(value);
        meta.solves.push(1);
        meta.wall_times.push(start.elapsed().as_secs_f64());
    }
    let [e1, r1] = rate_columns("||u-u_h||", &l2)?;
    let [e2, r2] = rate_columns("|L_1(u-u_h)|", &func)?;
    Ok(ConvergenceReport {
        columns: vec![count_column("J", subdivisions.iter().copied()), e1, r1, e2, r2],
        plot_x: 0,
        plot_error: 1,
        plot_guide: None,
        metadata: Some(meta),
    })
}

fn random_study(config: &ExperimentConfig, options: &RunOptions) -> Result<ConvergenceReport> {
    let setup = RandomSetup::new(config)?;
    let mut meta = metadata(config);
    meta.warnings.extend(setup.integrand.problem().warnings().iter().cloned());

    let reference = build_reference(config, Some(&setup), options.rebuild_reference)
        .map_err(|e| e.in_stage("reference"))?;
    meta.reference = Some(reference.value);
    meta.reference_cache_hit = Some(reference.cache_hit);

    let record = |meta: &mut ReportMetadata, est: &Estimate| {
        meta.estimates.push(est.value);
        meta.solves.push(est.fresh_solves);
        meta.wall_times.push(est.wall_time.as_secs_f64());
        meta.warnings.extend(est.warnings.iter().cloned());
        (est.value - reference.value).abs()
    };
    let rules = &setup.rules;
    let b = config.b as usize;

    let report = match &config.study {
        Study::Axis { axis, exponents } => {
            let mut errors = Vec::new();
            for &m in exponents {
                let rule = in_estimate(rules.rule(*axis, m))?;
                let origin = Arc::new(PointSet::origin(0, config.b));
                let (ry, rz) = match axis {
                    Axis::Y => (rule, origin),
                    Axis::Z => (origin, rule),
                };
                let est = in_estimate(tensor_estimate(&setup.integrand, &ry, &rz, config.workers))?;
                errors.push(record(&mut meta, &est));
            }
            let name = match axis {
                Axis::Y => "N_1",
                Axis::Z => "N_2",
            };
            let [e, r] = rate_columns("|Xi*-Xi_Q|", &errors)?;
            ConvergenceReport {
                columns: vec![count_column(name, exponents.iter().map(|&m| b.pow(m))), e, r],
                plot_x: 0,
                plot_error: 1,
                plot_guide: None,
                metadata: None,
            }
        }
        Study::Direct { exponents } => {
            let layout = rules.layout();
            let mut errors = Vec::new();
            for &m in exponents {
                let rule = in_estimate(rules.direct(m))?;
                let est = in_estimate(direct_estimate(&setup.integrand, &rule, &layout, config.workers))?;
                errors.push(record(&mut meta, &est));
            }
            let [e, r] = rate_columns("|Xi*-Xi_Q|", &errors)?;
            ConvergenceReport {
                columns: vec![count_column("N", exponents.iter().map(|&m| b.pow(m))), e, r],
                plot_x: 0,
                plot_error: 1,
                plot_guide: None,
                metadata: None,
            }
        }
        Study::Sparse { levels, theta } => {
            let schedule = SparseSchedule::new(config.b, config.p, config.q, *theta)?;
            let mut cache = TensorCache::default();
            let (mut errors, mut points) = (Vec::new(), Vec::new());
            for &level in levels {
                let est = in_estimate(crate::estimators::sparse_estimate(
                    &setup.integrand,
                    &schedule,
                    level,
                    rules,
                    &mut cache,
                    config.workers,
                ))?;
                errors.push(record(&mut meta, &est));
                points.push(est.points);
            }
            let bound: Vec<f64> = points.iter().map(|&m| (m as f64).ln() / m as f64).collect();
            ConvergenceReport {
                columns: vec![
                    count_column("L", levels.iter().map(|&l| l as usize)),
                    count_column("M", points.iter().copied()),
                    Column {
                        name: "|Xi_Q_L-Xi*|".into(),
                        kind: ColumnKind::Error,
                        values: errors,
                    },
                    Column {
                        name: BOUND_COLUMN.into(),
                        kind: ColumnKind::Error,
                        values: bound,
                    },
                ],
                plot_x: 1,
                plot_error: 2,
                plot_guide: Some(3),
                metadata: None,
            }
        }
        Study::Mesh { .. } => unreachable!("validated study kind"),
    };
    let mut seen = std::collections::HashSet::new();
    meta.warnings.retain(|w| seen.insert(w.clone()));
    Ok(ConvergenceReport {
        metadata: Some(meta),
        ..report
    })
}

fn in_estimate<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage("estimate"))
}
