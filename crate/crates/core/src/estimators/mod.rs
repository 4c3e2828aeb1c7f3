//! Equal-weight QMC estimators of the parametric mean functional.
//!
//! Rules provide points in `[0,1)^s`; integrands receive the centred
//! parameters `y - 1/2`, `z - 1/2`.

mod integrand;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmc::PointSet;
use crate::sum::pairwise_sum;

pub use integrand::{ElasticityIntegrand, ElasticityScratch};

/// A pure function of the centred parameters.
pub trait Integrand: Sync {
    type Scratch: Send;

    fn scratch(&self) -> Self::Scratch;

    fn eval(&self, y: &[f64], z: &[f64], scratch: &mut Self::Scratch) -> Result<f64>;
}

/// Adapts a closure; useful for stubs.
pub struct FnIntegrand<F>(pub F);

impl<F> Integrand for FnIntegrand<F>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    type Scratch = ();

    fn scratch(&self) {}

    fn eval(&self, y: &[f64], z: &[f64], _: &mut ()) -> Result<f64> {
        (self.0)(y, z)
    }
}

pub fn shift_to_centered(point: &[f64]) -> Vec<f64> {
    point.iter().map(|v| v - 0.5).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorMode {
    Tensor { m1: u32, m2: u32 },
    Sparse { level: u32 },
    Direct { m: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub s1: usize,
    pub s2: usize,
    pub b: u32,
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    pub mode: EstimatorMode,
}

impl EstimatorConfig {
    /// Checks the mode's preconditions; returns warnings for violations that
    /// do not prevent evaluation.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        match self.mode {
            EstimatorMode::Tensor { m1, m2 } => {
                let gap = (m1 as f64 * self.q - m2 as f64 * self.p).abs();
                if gap >= 1.0 {
                    warnings.push(format!("unbalanced exponents: |m1 q - m2 p| = {gap} >= 1"));
                }
            }
            EstimatorMode::Sparse { level } => {
                self.schedule()?;
                if level < 2 {
                    return Err(Error::invalid("sparse level must be at least 2"));
                }
            }
            EstimatorMode::Direct { .. } => {}
        }
        Ok(warnings)
    }

    pub fn schedule(&self) -> Result<SparseSchedule> {
        SparseSchedule::new(self.b, self.p, self.q, self.theta)
    }
}

/// `N1(j) = b^ceil(j p theta)`, `N2(k) = b^ceil(k q theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseSchedule {
    pub b: u32,
    pub p: f64,
    pub q: f64,
    pub theta: f64,
}

impl SparseSchedule {
    pub fn new(b: u32, p: f64, q: f64, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || p * theta < 1.0 || q * theta < 1.0 {
            return Err(Error::invalid(format!(
                "sparse schedule needs theta > 0, p theta >= 1 and q theta >= 1 (p = {p}, q = {q}, theta = {theta})"
            )));
        }
        Ok(SparseSchedule { b, p, q, theta })
    }

    fn ceil(x: f64) -> u32 {
        (x - 1e-9).ceil().max(0.0) as u32
    }

    pub fn y_digits(&self, j: u32) -> u32 {
        Self::ceil(j as f64 * self.p * self.theta)
    }

    pub fn z_digits(&self, k: u32) -> u32 {
        Self::ceil(k as f64 * self.q * self.theta)
    }

    pub fn n1(&self, j: u32) -> usize {
        (self.b as usize).pow(self.y_digits(j))
    }

    pub fn n2(&self, k: u32) -> usize {
        (self.b as usize).pow(self.z_digits(k))
    }

    /// `M = sum_{k=1}^{L-1} N1(L-k) N2(k)`
    pub fn total_points(&self, level: u32) -> usize {
        (1..level).map(|k| self.n1(level - k) * self.n2(k)).sum()
    }
}

/// One telescoping difference `Q(j,k) - Q(j,k-1)` of the sparse combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseTerm {
    pub j: u32,
    pub k: u32,
    pub upper: f64,
    pub lower: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Solves the estimator needs without reuse.
    pub n_solves: usize,
    /// Solves actually performed by this call.
    pub fresh_solves: usize,
    /// Point count of the rule (`N1 N2`, `M` or `N`).
    pub points: usize,
    pub terms: Vec<SparseTerm>,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

/// Evaluates `integrand` at `n` points in parallel on `workers` threads.
/// `fill(i, y, z)` writes the centred parameters of point `i`. Values come
/// back in index order, so any fixed reduction of them is independent of
/// `workers`.
pub fn parallel_sweep<I, P>(integrand: &I, n: usize, workers: usize, fill: P) -> Result<Vec<f64>>
where
    I: Integrand + ?Sized,
    P: Fn(usize, &mut Vec<f64>, &mut Vec<f64>) + Sync,
{
    let run = || {
        (0..n)
            .into_par_iter()
            .map_init(
                || (integrand.scratch(), Vec::new(), Vec::new()),
                |(scratch, y, z), i| {
                    y.clear();
                    z.clear();
                    fill(i, y, z);
                    integrand.eval(y, z, scratch).map_err(|e| Error::PointFailure {
                        index: i,
                        source: Box::new(e),
                    })
                },
            )
            .collect::<Vec<Result<f64>>>()
    };
    let results = if workers <= 1 {
        let mut scratch = integrand.scratch();
        let (mut y, mut z) = (Vec::new(), Vec::new());
        (0..n)
            .map(|i| {
                y.clear();
                z.clear();
                fill(i, &mut y, &mut z);
                integrand.eval(&y, &z, &mut scratch).map_err(|e| Error::PointFailure {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {workers} workers: {e}")))?
            .install(run)
    };
    results.into_iter().collect()
}

/// Arithmetic mean as `v_0 + (sum_i (v_i - v_0)) / n` with the fixed pairwise
/// order; exact for constant data.
pub fn mean(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return f64::NAN;
    };
    let deviations: Vec<f64> = values.iter().map(|v| v - first).collect();
    first + pairwise_sum(&deviations) / values.len() as f64
}

fn push_centered(out: &mut Vec<f64>, rule: &PointSet, i: usize) {
    out.extend((0..rule.dim()).map(|c| rule.value(i, c) - 0.5));
}

/// `(1/(N1 N2)) sum_j sum_k F(y_j - 1/2, z_k - 1/2)`; point `(j, k)` has
/// sweep index `j N2 + k`.
pub fn tensor_estimate<I: Integrand + ?Sized>(
    integrand: &I,
    rule_y: &PointSet,
    rule_z: &PointSet,
    workers: usize,
) -> Result<Estimate> {
    let start = Instant::now();
    let (n1, n2) = (rule_y.len(), rule_z.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("empty rule"));
    }
    let values = parallel_sweep(integrand, n1 * n2, workers, |i, y, z| {
        push_centered(y, rule_y, i / n2);
        push_centered(z, rule_z, i % n2);
    })
    .map_err(|e| match e {
        Error::PointFailure { index, source } => Error::TensorPointFailure {
            j: index / n2,
            k: index % n2,
            source,
        },
        e => e,
    })?;
    Ok(Estimate {
        value: mean(&values),
        n_solves: n1 * n2,
        fresh_solves: n1 * n2,
        points: n1 * n2,
        terms: Vec::new(),
        wall_time: start.elapsed(),
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Balance {
    pub m1: u32,
    pub m2: u32,
    /// Whether `|m1 q - m2 p| < 1`.
    pub feasible: bool,
}

/// Splits `m = m1 + m2` with `m1, m2 >= 1` minimising `|m1 q - m2 p|`; ties
/// go to the larger `m1`.
pub fn balance_exponents(m: u32, p: f64, q: f64) -> Result<Balance> {
    if m < 2 {
        return Err(Error::invalid("total exponent must be at least 2"));
    }
    let gap = |m1: u32| (m1 as f64 * q - (m - m1) as f64 * p).abs();
    let mut best = 1;
    for m1 in 2..m {
        if gap(m1) <= gap(best) {
            best = m1;
        }
    }
    Ok(Balance {
        m1: best,
        m2: m - best,
        feasible: gap(best) < 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Y,
    Z,
}

/// Source of the one-axis rules with `b^m` points used by the sparse
/// combination.
pub trait RuleFamily: Sync {
    fn rule(&self, axis: Axis, m: u32) -> Result<Arc<PointSet>>;
}

/// Tensor-rule values keyed by `(y digits, z digits)`; entries are written
/// once and reused across levels.
#[derive(Debug, Clone, Default)]
pub struct TensorCache {
    values: BTreeMap<(u32, u32), f64>,
}

impl TensorCache {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `sum_{k=1}^{L-1} (Q(L-k, k) - Q(L-k, k-1))` with `Q(., 0) = 0`.
pub fn sparse_estimate<I: Integrand + ?Sized>(
    integrand: &I,
    schedule: &SparseSchedule,
    level: u32,
    rules: &dyn RuleFamily,
    cache: &mut TensorCache,
    workers: usize,
) -> Result<Estimate> {
    if level < 2 {
        return Err(Error::invalid("sparse level must be at least 2"));
    }
    let start = Instant::now();
    let mut n_solves = 0;
    let mut fresh = 0;
    let mut q = |j: u32, k: u32, n_solves: &mut usize, fresh: &mut usize| -> Result<f64> {
        let key = (schedule.y_digits(j), schedule.z_digits(k));
        *n_solves += schedule.n1(j) * schedule.n2(k);
        if let Some(&v) = cache.values.get(&key) {
            return Ok(v);
        }
        let ry = rules.rule(Axis::Y, key.0)?;
        let rz = rules.rule(Axis::Z, key.1)?;
        let est = tensor_estimate(integrand, &ry, &rz, workers)?;
        *fresh += est.fresh_solves;
        cache.values.insert(key, est.value);
        Ok(est.value)
    };
    let mut terms = Vec::with_capacity(level as usize - 1);
    for k in 1..level {
        let j = level - k;
        let upper = q(j, k, &mut n_solves, &mut fresh)?;
        let lower = if k >= 2 { q(j, k - 1, &mut n_solves, &mut fresh)? } else { 0.0 };
        terms.push(SparseTerm {
            j,
            k,
            upper,
            lower,
            contribution: upper - lower,
        });
    }
    let value = terms.iter().map(|t| t.contribution).sum();
    Ok(Estimate {
        value,
        n_solves,
        fresh_solves: fresh,
        points: schedule.total_points(level),
        terms,
        wall_time: start.elapsed(),
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "index", rename_all = "snake_case")]
pub enum Coordinate {
    Y(usize),
    Z(usize),
}

/// Assignment of the columns of an `(s1 + s2)`-dimensional rule to
/// parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectLayout {
    columns: Vec<Coordinate>,
    s1: usize,
    s2: usize,
}

impl DirectLayout {
    /// `y_1..y_s1` then `z_1..z_s2`.
    pub fn concatenated(s1: usize, s2: usize) -> Self {
        let columns = (0..s1).map(Coordinate::Y).chain((0..s2).map(Coordinate::Z)).collect();
        DirectLayout { columns, s1, s2 }
    }

    /// Columns by decreasing weight so the leading rule components carry
    /// the dominant coefficients; ties keep `y` before `z`, then index order.
    pub fn by_importance(y_weights: &[f64], z_weights: &[f64]) -> Self {
        let mut cols: Vec<(f64, Coordinate)> = y_weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (w, Coordinate::Y(i)))
            .chain(z_weights.iter().enumerate().map(|(i, &w)| (w, Coordinate::Z(i))))
            .collect();
        cols.sort_by(|a, b| b.0.total_cmp(&a.0));
        DirectLayout {
            columns: cols.into_iter().map(|(_, c)| c).collect(),
            s1: y_weights.len(),
            s2: z_weights.len(),
        }
    }

    pub fn columns(&self) -> &[Coordinate] {
        &self.columns
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Reorders per-parameter weights into rule-column order.
    pub fn arrange(&self, y_weights: &[f64], z_weights: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match *c {
                Coordinate::Y(i) => y_weights[i],
                Coordinate::Z(i) => z_weights[i],
            })
            .collect()
    }
}

/// `(1/N) sum_n F(r_n)` with each rule point split into `(y, z)` by
/// `layout` and centred.
pub fn direct_estimate<I: Integrand + ?Sized>(
    integrand: &I,
    rule: &PointSet,
    layout: &DirectLayout,
    workers: usize,
) -> Result<Estimate> {
    if rule.dim() != layout.dim() {
        return Err(Error::invalid(format!(
            "rule has {} dimensions, layout expects {}",
            rule.dim(),
            layout.dim()
        )));
    }
    let start = Instant::now();
    let values = parallel_sweep(integrand, rule.len(), workers, |i, y, z| {
        y.resize(layout.s1, 0.0);
        z.resize(layout.s2, 0.0);
        for (c, col) in layout.columns.iter().enumerate() {
            let v = rule.value(i, c) - 0.5;
            match *col {
                Coordinate::Y(j) => y[j] = v,
                Coordinate::Z(j) => z[j] = v,
            }
        }
    })?;
    Ok(Estimate {
        value: mean(&values),
        n_solves: rule.len(),
        fresh_solves: rule.len(),
        points: rule.len(),
        terms: Vec::new(),
        wall_time: start.elapsed(),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc::{cbc_construct, CbcMethod, CbcWeights, PointKind};
    use crate::sum::compensated_sum;
    use rand::{Rng, SeedableRng};

    fn constant(c: f64) -> FnIntegrand<impl Fn(&[f64], &[f64]) -> Result<f64> + Sync> {
        FnIntegrand(move |_: &[f64], _: &[f64]| Ok(c))
    }

    fn rule(m: u32, s: usize) -> PointSet {
        let gamma = (1..=s).map(|j| 1.0 / (j * j) as f64).collect();
        cbc_construct(2, m, s, 2, &CbcWeights::Product { gamma }, CbcMethod::Fast)
            .unwrap()
            .points()
            .unwrap()
    }

    struct Family {
        s1: usize,
        s2: usize,
    }

    impl RuleFamily for Family {
        fn rule(&self, axis: Axis, m: u32) -> Result<Arc<PointSet>> {
            let s = match axis {
                Axis::Y => self.s1,
                Axis::Z => self.s2,
            };
            Ok(Arc::new(rule(m, s)))
        }
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_to_centered(&[0.0, 0.5, 0.875]), vec![-0.5, 0.0, 0.375]);
    }

    #[test]
    fn degenerate_tensor_rule_hits_the_corner() {
        let f = FnIntegrand(|y: &[f64], z: &[f64]| {
            assert!(y.iter().chain(z).all(|&v| v == -0.5));
            Ok(y.len() as f64 + 10.0 * z.len() as f64)
        });
        let est = tensor_estimate(&f, &PointSet::origin(3, 2), &PointSet::origin(2, 2), 1).unwrap();
        assert_eq!(est.value, 23.0);
        assert_eq!(est.n_solves, 1);
    }

    #[test]
    fn constants_are_exact() {
        let c = 0.1234567;
        let ry = rule(5, 3);
        let rz = rule(3, 2);
        assert_eq!(tensor_estimate(&constant(c), &ry, &rz, 2).unwrap().value, c);
        let rd = rule(6, 4);
        let layout = DirectLayout::concatenated(2, 2);
        assert_eq!(direct_estimate(&constant(c), &rd, &layout, 2).unwrap().value, c);
    }

    #[test]
    fn separable_tensor_equals_one_axis_average() {
        let ry = rule(6, 3);
        let g = |y: &[f64]| y.iter().map(|v| (1.0 + v).ln()).sum::<f64>().exp();
        let f = FnIntegrand(move |y: &[f64], _: &[f64]| Ok(g(y)));
        let est = tensor_estimate(&f, &ry, &PointSet::origin(2, 2), 1).unwrap();
        let direct: Vec<f64> = (0..ry.len()).map(|i| g(&shift_to_centered(&ry.point(i)))).collect();
        assert_eq!(est.value, mean(&direct));
    }

    #[test]
    fn sweep_mean_and_order() {
        let f = FnIntegrand(|y: &[f64], _: &[f64]| Ok(y[0]));
        let values = parallel_sweep(&f, 7, 3, |i, y, _| y.push(i as f64)).unwrap();
        assert_eq!(values, (0..7).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(mean(&values), 3.0);
    }

    #[test]
    fn sweep_is_worker_independent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let data: Vec<f64> = (0..1024).map(|_| rng.gen::<f64>() * 10f64.powi(rng.gen_range(-3..4))).collect();
        let f = FnIntegrand(|y: &[f64], _: &[f64]| Ok(y[0]));
        let reference = mean(&parallel_sweep(&f, data.len(), 1, |i, y, _| y.push(data[i])).unwrap());
        for workers in [4, 8] {
            let v = mean(&parallel_sweep(&f, data.len(), workers, |i, y, _| y.push(data[i])).unwrap());
            assert_eq!(v.to_bits(), reference.to_bits());
        }
        let oracle = compensated_sum(&data) / data.len() as f64;
        assert!((reference - oracle).abs() <= 1e-15 * oracle.abs());
    }

    #[test]
    fn sweep_reports_failing_index() {
        let f = FnIntegrand(|y: &[f64], _: &[f64]| {
            if y[0] == 5.0 {
                Err(Error::NotPositiveDefinite)
            } else {
                Ok(0.0)
            }
        });
        let err = parallel_sweep(&f, 9, 4, |i, y, _| y.push(i as f64)).unwrap_err();
        assert!(matches!(err, Error::PointFailure { index: 5, .. }));
        let ry = PointSet::from_ints(4, 1, 2, 2, vec![0, 1, 2, 3], PointKind::Classical).unwrap();
        let rz = PointSet::from_ints(2, 1, 2, 1, vec![0, 1], PointKind::Classical).unwrap();
        let g = FnIntegrand(|y: &[f64], z: &[f64]| {
            if y[0] == 0.25 && z[0] == 0.0 {
                Err(Error::NotPositiveDefinite)
            } else {
                Ok(0.0)
            }
        });
        let err = tensor_estimate(&g, &ry, &rz, 2).unwrap_err();
        assert!(matches!(err, Error::TensorPointFailure { j: 3, k: 1, .. }), "{err}");
    }

    #[test]
    fn balance_examples() {
        for m in 2..30 {
            let b = balance_exponents(m, 0.5, 0.5).unwrap();
            assert_eq!((b.m1, b.m2), (m.div_ceil(2), m / 2));
            assert!(b.feasible);
        }
        assert_eq!(
            balance_exponents(22, 0.5, 0.5).unwrap(),
            Balance { m1: 11, m2: 11, feasible: true }
        );
        // exhaustive oracle: |m1 - m2/2| over m1 = 1..8 is minimal at m1 = 3
        assert_eq!(
            balance_exponents(9, 0.5, 1.0).unwrap(),
            Balance { m1: 3, m2: 6, feasible: true }
        );
        // |m1 - (5 - m1)| is odd, hence >= 1 for every split
        let b = balance_exponents(5, 1.0, 1.0).unwrap();
        assert_eq!((b.m1, b.feasible), (3, false));
        assert!(balance_exponents(1, 0.5, 0.5).is_err());
    }

    #[test]
    fn sparse_point_counts() {
        let s = SparseSchedule::new(2, 0.5, 0.5, 2.0).unwrap();
        assert_eq!(s.total_points(3), 16);
        for level in 2..16 {
            assert_eq!(s.total_points(level), (level as usize - 1) << level);
        }
        assert_eq!(s.total_points(9), 4096);
        assert!(SparseSchedule::new(2, 0.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn sparse_telescopes_constants_and_reuses_rules() {
        let schedule = SparseSchedule::new(2, 0.5, 0.5, 2.0).unwrap();
        let fam = Family { s1: 2, s2: 2 };
        let mut cache = TensorCache::default();
        let c = 0.3;
        let two = sparse_estimate(&constant(c), &schedule, 2, &fam, &mut cache, 2).unwrap();
        assert_eq!(two.terms.len(), 1);
        assert_eq!(two.terms[0].lower, 0.0);
        assert_eq!(two.value, c);
        let mut total_fresh = two.fresh_solves;
        for level in 3..8 {
            let est = sparse_estimate(&constant(c), &schedule, level, &fam, &mut cache, 2).unwrap();
            assert_eq!(est.value, c);
            let sum: f64 = est.terms.iter().map(|t| t.contribution).sum();
            assert!((est.value - sum).abs() <= 1e-14);
            // the lower diagonal was computed by the previous level
            assert_eq!(est.fresh_solves, est.points);
            let expected: usize = (1..level)
                .map(|k| schedule.n1(level - k) * (schedule.n2(k) + if k >= 2 { schedule.n2(k - 1) } else { 0 }))
                .sum();
            assert_eq!(est.n_solves, expected);
            total_fresh += est.fresh_solves;
        }
        assert_eq!(cache.len(), 1 + 2 + 3 + 4 + 5 + 6);
        assert!(total_fresh > 0);
        let again = sparse_estimate(&constant(c), &schedule, 7, &fam, &mut cache, 2).unwrap();
        assert_eq!(again.fresh_solves, 0);
        assert!(sparse_estimate(&constant(c), &schedule, 1, &fam, &mut cache, 1).is_err());
    }

    #[test]
    fn importance_layout() {
        let layout = DirectLayout::by_importance(&[1.0, 0.25, 0.1], &[0.5, 0.25]);
        assert_eq!(
            layout.columns(),
            &[
                Coordinate::Y(0),
                Coordinate::Z(0),
                Coordinate::Y(1),
                Coordinate::Z(1),
                Coordinate::Y(2)
            ]
        );
        assert_eq!(layout.arrange(&[1.0, 0.25, 0.1], &[0.5, 0.25]), vec![1.0, 0.5, 0.25, 0.25, 0.1]);
        let f = FnIntegrand(|y: &[f64], z: &[f64]| Ok(y[2] + 10.0 * z[0]));
        let pts = PointSet::from_ints(1, 5, 2, 3, vec![0, 1, 2, 3, 4], PointKind::Classical).unwrap();
        let est = direct_estimate(&f, &pts, &layout, 1).unwrap();
        assert_eq!(est.value, (0.5 - 0.5) + 10.0 * (0.125 - 0.5));
        assert!(direct_estimate(&f, &pts, &DirectLayout::concatenated(2, 2), 1).is_err());
    }
}
