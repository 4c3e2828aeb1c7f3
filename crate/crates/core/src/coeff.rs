//! Affine-parametric Lamé coefficient fields
//! `a(x, y) = a0(x) + sum_j y_j psi_j(x)` with `y_j` in `[-1/2, 1/2]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Deterministic part `a0` of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseFunction {
    Constant { value: f64 },
    /// `c0 + c1 x1 + c2 x2`
    Linear { c0: f64, c1: f64, c2: f64 },
    /// `offset + amplitude sin(frequency pi x1)`
    SineX1 {
        offset: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl BaseFunction {
    pub fn value(&self, x: Point) -> f64 {
        match *self {
            BaseFunction::Constant { value } => value,
            BaseFunction::Linear { c0, c1, c2 } => c0 + c1 * x[0] + c2 * x[1],
            BaseFunction::SineX1 {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (frequency * PI * x[0]).sin(),
        }
    }

    pub fn gradient(&self, x: Point) -> [f64; 2] {
        match *self {
            BaseFunction::Constant { .. } => [0.0, 0.0],
            BaseFunction::Linear { c1, c2, .. } => [c1, c2],
            BaseFunction::SineX1 {
                amplitude,
                frequency,
                ..
            } => [amplitude * frequency * PI * (frequency * PI * x[0]).cos(), 0.0],
        }
    }
}

/// The expansion functions
/// `psi_j(x) = scale j^-decay sin((a1 j + b1) pi x1) sin((a2 j + b2) pi x2)`, `j >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineProductFamily {
    pub scale: f64,
    pub decay: f64,
    /// `(a1, b1)`
    pub x1_frequency: [f64; 2],
    /// `(a2, b2)`
    pub x2_frequency: [f64; 2],
}

impl SineProductFamily {
    /// `scale j^-2 sin(j pi x1) sin((2j - 1) pi x2)`, the family used by all
    /// the random-coefficient presets.
    pub fn standard(scale: f64) -> Self {
        SineProductFamily {
            scale,
            decay: 2.0,
            x1_frequency: [1.0, 0.0],
            x2_frequency: [2.0, -1.0],
        }
    }

    pub fn amplitude(&self, j: usize) -> f64 {
        self.scale * (j as f64).powf(-self.decay)
    }

    fn frequencies(&self, j: usize) -> (f64, f64) {
        let jf = j as f64;
        (
            self.x1_frequency[0] * jf + self.x1_frequency[1],
            self.x2_frequency[0] * jf + self.x2_frequency[1],
        )
    }

    /// `psi_j(x)` for 1-based `j`.
    pub fn value(&self, j: usize, x: Point) -> f64 {
        let (k1, k2) = self.frequencies(j);
        self.amplitude(j) * (k1 * PI * x[0]).sin() * (k2 * PI * x[1]).sin()
    }

    /// Closed-form `sup_{[0,1]^2} |psi_j|`.
    pub fn sup_norm(&self, j: usize) -> f64 {
        let (k1, k2) = self.frequencies(j);
        self.amplitude(j).abs() * sine_sup(k1) * sine_sup(k2)
    }
}

/// `sup_{t in [0,1]} |sin(k pi t)|`
fn sine_sup(k: f64) -> f64 {
    if k.abs() >= 0.5 {
        1.0
    } else {
        (k * PI).sin().abs()
    }
}

/// How a sequence of sup-norms was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupNormSource {
    Analytic,
    /// Maximum over a uniform 512 x 512 sample grid.
    GridEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricField {
    pub base: BaseFunction,
    pub terms: Option<SineProductFamily>,
    /// Number of expansion terms kept; parameters beyond it are zero.
    pub truncation: usize,
}

impl ParametricField {
    pub fn deterministic(base: BaseFunction) -> Self {
        ParametricField {
            base,
            terms: None,
            truncation: 0,
        }
    }

    pub fn affine(base: BaseFunction, terms: SineProductFamily, truncation: usize) -> Self {
        ParametricField {
            base,
            terms: Some(terms),
            truncation,
        }
    }

    pub fn with_truncation(&self, truncation: usize) -> Self {
        let mut f = self.clone();
        f.truncation = if f.terms.is_some() { truncation } else { 0 };
        f
    }

    /// Number of parameters the truncated field depends on.
    pub fn dimension(&self) -> usize {
        if self.terms.is_some() {
            self.truncation
        } else {
            0
        }
    }

    /// `psi_j(x)` for 1-based `j`; zero when the field has no expansion.
    pub fn term(&self, j: usize, x: Point) -> f64 {
        self.terms.as_ref().map_or(0.0, |t| t.value(j, x))
    }

    pub fn eval(&self, x: Point, params: &[f64]) -> Result<f64> {
        check_params(params, self.dimension())?;
        let mut v = self.base.value(x);
        for (j, &p) in params.iter().enumerate() {
            if p != 0.0 {
                v += p * self.term(j + 1, x);
            }
        }
        Ok(v)
    }

    /// Sup-norms of the first `count` expansion functions.
    pub fn sup_norms(&self, count: usize) -> (Vec<f64>, SupNormSource) {
        match &self.terms {
            Some(t) => ((1..=count).map(|j| t.sup_norm(j)).collect(), SupNormSource::Analytic),
            None => (Vec::new(), SupNormSource::Analytic),
        }
    }

    /// Sup-norm of `psi_j` from a uniform sample grid.
    pub fn grid_sup_norm(&self, j: usize, resolution: usize) -> f64 {
        let step = 1.0 / (resolution - 1) as f64;
        let mut best: f64 = 0.0;
        for b in 0..resolution {
            for a in 0..resolution {
                best = best.max(self.term(j, [a as f64 * step, b as f64 * step]).abs());
            }
        }
        best
    }

    /// `(min, max)` of `a0(x) -/+ 1/2 sum_{j<=s} |psi_j(x)|` over a uniform
    /// `resolution^2` grid.
    pub fn envelope(&self, resolution: usize) -> (f64, f64) {
        let step = 1.0 / (resolution - 1) as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for b in 0..resolution {
            for a in 0..resolution {
                let x = [a as f64 * step, b as f64 * step];
                let base = self.base.value(x);
                let spread: f64 = (1..=self.dimension())
                    .map(|j| 0.5 * self.term(j, x).abs())
                    .sum();
                lo = lo.min(base - spread);
                hi = hi.max(base + spread);
            }
        }
        (lo, hi)
    }

    /// True when the sup-norms of the retained terms are nonincreasing.
    pub fn has_monotone_sup_norms(&self) -> bool {
        let (norms, _) = self.sup_norms(self.dimension());
        norms.windows(2).all(|w| w[1] <= w[0])
    }
}

fn check_params(params: &[f64], dim: usize) -> Result<()> {
    if params.len() > dim {
        return Err(Error::invalid(format!(
            "{} parameters supplied to a field truncated at {dim}",
            params.len()
        )));
    }
    if let Some((index, &value)) = params
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.abs() <= 0.5))
    {
        return Err(Error::ParameterOutOfRange { index, value });
    }
    Ok(())
}

/// Validated coefficient bounds of a `(mu, lambda)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    pub mu_min: f64,
    pub mu_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub const ENVELOPE_GRID: usize = 256;

/// Checks `0 < mu_min <= mu <= mu_max` and `0 <= lambda <= lambda_max` on the
/// envelope grid and at `probes` random `(x, y, z)` samples.
pub fn certify_bounds(
    mu: &ParametricField,
    lambda: &ParametricField,
    probes: usize,
    seed: u64,
) -> Result<CoefficientBounds> {
    let (mut mu_min, mut mu_max) = mu.envelope(ENVELOPE_GRID);
    let (mut lambda_min, mut lambda_max) = lambda.envelope(ENVELOPE_GRID);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; mu.dimension()];
    let mut z = vec![0.0; lambda.dimension()];
    for _ in 0..probes {
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        y.iter_mut().for_each(|v| *v = rng.gen::<f64>() - 0.5);
        z.iter_mut().for_each(|v| *v = rng.gen::<f64>() - 0.5);
        let m = mu.eval(x, &y)?;
        let l = lambda.eval(x, &z)?;
        mu_min = mu_min.min(m);
        mu_max = mu_max.max(m);
        lambda_min = lambda_min.min(l);
        lambda_max = lambda_max.max(l);
    }
    if !(mu_min > 0.0) {
        return Err(Error::BoundViolation(format!(
            "shear modulus reaches {mu_min:.6e} <= 0"
        )));
    }
    if lambda_min < 0.0 {
        return Err(Error::BoundViolation(format!(
            "first Lamé parameter reaches {lambda_min:.6e} < 0"
        )));
    }
    for (name, f) in [("mu", mu), ("lambda", lambda)] {
        if !f.has_monotone_sup_norms() {
            return Err(Error::BoundViolation(format!(
                "sup-norms of the {name} expansion are not nonincreasing"
            )));
        }
    }
    Ok(CoefficientBounds {
        mu_min,
        mu_max,
        lambda_min,
        lambda_max,
    })
}

/// Regularity weights feeding the QMC constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequences {
    /// `||psi_j|| / mu_min`
    pub b_tilde: Vec<f64>,
    /// `(d/2) ||phi_j|| / mu_min`
    pub b_hat: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub alpha: usize,
    pub beta: usize,
}

/// Interlacing order `floor(1/p) + 1`.
pub fn interlacing_order(p: f64) -> usize {
    (1.0 / p).floor() as usize + 1
}

pub fn derive_weights(
    mu_sup_norms: &[f64],
    lambda_sup_norms: &[f64],
    mu_min: f64,
    dim: usize,
    p: f64,
    q: f64,
) -> Result<WeightSequences> {
    if !(mu_min > 0.0) {
        return Err(Error::invalid(format!("mu_min must be positive, got {mu_min}")));
    }
    for (name, e) in [("p", p), ("q", q)] {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::invalid(format!("{name} must lie in (0, 1], got {e}")));
        }
    }
    let half_d = dim as f64 / 2.0;
    Ok(WeightSequences {
        b_tilde: mu_sup_norms.iter().map(|s| s / mu_min).collect(),
        b_hat: lambda_sup_norms.iter().map(|s| half_d * s / mu_min).collect(),
        p,
        q,
        alpha: interlacing_order(p),
        beta: interlacing_order(q),
    })
}

/// `sum_{j > s} ||psi_j||_inf` for the full (untruncated) expansion.
///
/// Terms up to `s + 1000` are summed directly; the remainder of the power law
/// comes from an Euler-Maclaurin expansion whose error is far below `1e-12`.
pub fn tail_sup_sum(field: &ParametricField, s: usize) -> f64 {
    let Some(t) = &field.terms else {
        return 0.0;
    };
    if t.scale == 0.0 {
        return 0.0;
    }
    if t.decay <= 1.0 {
        return f64::INFINITY;
    }
    let cutoff = s + 1000;
    let direct: f64 = ((s + 1)..=cutoff).rev().map(|j| t.sup_norm(j)).sum();
    // For this family every term past the cutoff has sup-norm scale * j^-decay
    // once the frequencies exceed 1/2, which holds for all presets.
    let p = t.decay;
    let k = cutoff as f64;
    let tail = k.powf(1.0 - p) / (p - 1.0) - 0.5 * k.powf(-p) + p * k.powf(-p - 1.0) / 12.0
        - p * (p + 1.0) * (p + 2.0) * k.powf(-p - 3.0) / 720.0;
    direct + t.scale.abs() * tail
}

pub mod presets {
    //! Coefficient fields of the four reference experiments.
    use super::*;

    /// `mu = x1 + x2 + 1`, `lambda = sin(2 pi x1) + 2`.
    pub fn example1() -> (ParametricField, ParametricField) {
        (
            ParametricField::deterministic(BaseFunction::Linear {
                c0: 1.0,
                c1: 1.0,
                c2: 1.0,
            }),
            ParametricField::deterministic(BaseFunction::SineX1 {
                offset: 2.0,
                amplitude: 1.0,
                frequency: 2.0,
            }),
        )
    }

    /// `mu = (1 + sum y_j psi_j) / 10`, `lambda = 1`.
    pub fn example2(s1: usize) -> (ParametricField, ParametricField) {
        (
            ParametricField::affine(
                BaseFunction::Constant { value: 0.1 },
                SineProductFamily::standard(0.1),
                s1,
            ),
            ParametricField::deterministic(BaseFunction::Constant { value: 1.0 }),
        )
    }

    /// `mu = 1`, `lambda = 1 + sum z_j psi_j`.
    pub fn example3(s2: usize) -> (ParametricField, ParametricField) {
        (
            ParametricField::deterministic(BaseFunction::Constant { value: 1.0 }),
            ParametricField::affine(
                BaseFunction::Constant { value: 1.0 },
                SineProductFamily::standard(1.0),
                s2,
            ),
        )
    }

    /// Both coefficients random.
    pub fn example4(s1: usize, s2: usize) -> (ParametricField, ParametricField) {
        (
            ParametricField::affine(
                BaseFunction::Constant { value: 1.0 },
                SineProductFamily::standard(1.0),
                s1,
            ),
            ParametricField::affine(
                BaseFunction::Constant { value: 1.0 },
                SineProductFamily::standard(1.0),
                s2,
            ),
        )
    }
}
