use std::sync::Arc;

use crate::coeff::{certify_bounds, derive_weights, presets, CoefficientBounds, ParametricField};
use crate::error::Result;
use crate::estimators::{Axis, ElasticityIntegrand};
use crate::fem::{standard_forcing, Discretization, ParametricProblem, SolverKind, SolverOptions};

use super::config::{ExperimentConfig, PresetId};
use super::rules::QmcRules;

/// Spatial dimension of the domain.
const DIM: usize = 2;

/// Coefficient fields of a preset at the configured truncation.
pub fn preset_fields(config: &ExperimentConfig) -> (ParametricField, ParametricField) {
    match config.preset {
        PresetId::Example1 => presets::example1(),
        PresetId::Example2 => presets::example2(config.s1),
        PresetId::Example3 => presets::example3(config.s2),
        PresetId::Example4Direct | PresetId::Example4Sparse => presets::example4(config.s1, config.s2),
    }
}

/// Everything a random example needs before its first solve.
pub struct RandomSetup {
    pub bounds: CoefficientBounds,
    pub integrand: ElasticityIntegrand,
    pub rules: QmcRules,
}

impl RandomSetup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let (mu, lambda) = preset_fields(config);
        let bounds = certify_bounds(&mu, &lambda, config.probes, config.seed)
            .map_err(|e| e.in_stage("coefficients"))?;
        let weights = derive_weights(
            &mu.sup_norms(config.s1).0,
            &lambda.sup_norms(config.s2).0,
            bounds.mu_min,
            DIM,
            config.p,
            config.q,
        )
        .map_err(|e| e.in_stage("coefficients"))?;

        let disc = Discretization::uniform(config.subdivisions, config.degree)
            .map_err(|e| e.in_stage("discretization"))?;
        let problem = Arc::new(ParametricProblem::new(Arc::new(disc), &mu, &lambda, &standard_forcing));
        let integrand = ElasticityIntegrand::new(
            problem,
            SolverKind::for_subdivisions(config.subdivisions),
            SolverOptions::default(),
        )
        .map_err(|e| e.in_stage("discretization"))?;
        let rules = QmcRules::new(
            config.b,
            weights,
            config.weight_budget,
            config.alpha(Some(Axis::Y)),
            config.alpha(Some(Axis::Z)),
            config.alpha(None),
        );
        Ok(RandomSetup {
            bounds,
            integrand,
            rules,
        })
    }
}
