use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::coeff::WeightSequences;
use crate::error::Result;
use crate::estimators::{Axis, DirectLayout, RuleFamily};
use crate::qmc::{cbc_construct, CbcMethod, CbcWeights, PointSet};

/// Interlaced polynomial lattice rules built by fast CBC with SPOD weights
/// from the regularity bounds of the coefficients. Rules are cached per
/// axis and size.
///
/// When a sequence sums to more than `budget` it is scaled down to that sum
/// before the CBC search. Otherwise the factorial growth of the SPOD weights
/// lets high-order interaction terms swamp the criterion, and the greedy
/// search repeats one polynomial across the tail, collapsing the rule.
pub struct QmcRules {
    b: u32,
    weights: WeightSequences,
    budget: f64,
    alpha_y: u32,
    alpha_z: u32,
    alpha_direct: u32,
    cache: Mutex<BTreeMap<(Option<Axis>, u32), Arc<PointSet>>>,
}

impl QmcRules {
    pub fn new(b: u32, weights: WeightSequences, budget: f64, alpha_y: u32, alpha_z: u32, alpha_direct: u32) -> Self {
        QmcRules {
            b,
            weights,
            budget,
            alpha_y,
            alpha_z,
            alpha_direct,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn weights(&self) -> &WeightSequences {
        &self.weights
    }

    pub fn layout(&self) -> DirectLayout {
        DirectLayout::by_importance(&self.weights.b_tilde, &self.weights.b_hat)
    }

    fn cached(&self, key: (Option<Axis>, u32), build: impl FnOnce() -> Result<PointSet>) -> Result<Arc<PointSet>> {
        if let Some(r) = self.cache.lock().expect("rule cache").get(&key) {
            return Ok(r.clone());
        }
        let rule = Arc::new(build()?);
        self.cache.lock().expect("rule cache").insert(key, rule.clone());
        Ok(rule)
    }

    /// Rule with `b^m` points over all parameters, columns in the order of
    /// [`QmcRules::layout`].
    pub fn direct(&self, m: u32) -> Result<Arc<PointSet>> {
        self.cached((None, m), || {
            let layout = self.layout();
            let beta = budgeted(layout.arrange(&self.weights.b_tilde, &self.weights.b_hat), self.budget);
            cbc_construct(self.b, m, beta.len(), self.alpha_direct, &CbcWeights::Spod { beta }, CbcMethod::Fast)?
                .points()
        })
    }
}

/// `beta` scaled so that its sum does not exceed `budget`.
pub fn budgeted(mut beta: Vec<f64>, budget: f64) -> Vec<f64> {
    let total: f64 = beta.iter().sum();
    if total > budget {
        let c = budget / total;
        beta.iter_mut().for_each(|b| *b *= c);
    }
    beta
}

impl RuleFamily for QmcRules {
    /// An axis without parameters gets the single point of dimension zero.
    fn rule(&self, axis: Axis, m: u32) -> Result<Arc<PointSet>> {
        let (beta, alpha) = match axis {
            Axis::Y => (&self.weights.b_tilde, self.alpha_y),
            Axis::Z => (&self.weights.b_hat, self.alpha_z),
        };
        if beta.is_empty() {
            return Ok(Arc::new(PointSet::origin(0, self.b)));
        }
        self.cached((Some(axis), m), || {
            let weights = CbcWeights::Spod {
                beta: budgeted(beta.clone(), self.budget),
            };
            cbc_construct(self.b, m, beta.len(), alpha, &weights, CbcMethod::Fast)?.points()
        })
    }
}
