//! Component-by-component construction of interlaced polynomial lattice
//! rules.
//!
//! Each of the `alpha * s` classical components is chosen in turn to
//! minimize
//!
//! ```text
//! E = sum_{u} gamma_u (1/N) sum_n prod_{j in u} Phi_j(n),
//! Phi_j(n) = prod_{i=1}^{alpha} (1 + omega(y_{n, alpha (j-1) + i})) - 1,
//! ```
//!
//! with `omega` the order-`alpha` Walsh kernel. Components of a dimension
//! that are not chosen yet contribute a factor 1.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::lattice::{default_modulus, GeneratingVector, MAX_MANTISSA_BITS};
use super::poly::GFPoly;

/// Candidates whose score is within this relative distance of the minimum
/// count as ties; ties go to the smallest polynomial.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CbcWeights {
    /// `gamma_u = prod_{j in u} gamma_j`
    Product { gamma: Vec<f64> },
    /// `gamma_u = sum_{nu in {1..alpha}^u} |nu|! prod_{j in u} 2^{[nu_j = alpha]} beta_j^{nu_j}`
    Spod { beta: Vec<f64> },
}

impl CbcWeights {
    fn validate(&self, s: usize) -> Result<()> {
        let w = match self {
            CbcWeights::Product { gamma } => gamma,
            CbcWeights::Spod { beta } => beta,
        };
        if w.len() < s {
            return Err(Error::invalid(format!("{} weights supplied for {s} dimensions", w.len())));
        }
        if w[..s].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        Ok(())
    }
}

/// `omega(x) = (b-1)/(b^alpha - b) - (b^alpha - 1)/(b^alpha - b) b^{(alpha-1) floor(log_b x)}`,
/// with `omega(0) = (b-1)/(b^alpha - b)`, evaluated at `x = v / b^m`.
pub fn walsh_kernel(b: u32, alpha: u32, v: u64, m: u32) -> f64 {
    let bf = b as f64;
    let ba = bf.powi(alpha as i32);
    let c0 = (bf - 1.0) / (ba - bf);
    if v == 0 {
        return c0;
    }
    // x in [b^-a, b^{1-a})
    let mut a = m;
    let mut t = v;
    while t >= b as u64 {
        t /= b as u64;
        a -= 1;
    }
    c0 - (ba - 1.0) / (ba - bf) * bf.powi(-((alpha - 1) as i32) * a as i32)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Running state of the criterion over the dimensions chosen so far.
enum WeightState {
    /// `Q(n) = prod_j (1 + gamma_j Phi_j(n))`, stored as `q * e^{scale}`.
    Product { gamma: Vec<f64>, q: Vec<f64>, scale: f64 },
    /// `l! V(n, l) = w[l][n] e^{scale[l]}` where `V(n, l)` sums the SPOD
    /// products over chosen dimensions with `|nu| = l`.
    Spod {
        beta: Vec<f64>,
        alpha: usize,
        w: Vec<Vec<f64>>,
        scale: Vec<f64>,
        lnfact: Vec<f64>,
    },
}

impl WeightState {
    fn new(weights: &CbcWeights, n: usize, s: usize, alpha: u32) -> Self {
        match weights {
            CbcWeights::Product { gamma } => WeightState::Product {
                gamma: gamma[..s].to_vec(),
                q: vec![1.0; n],
                scale: 0.0,
            },
            CbcWeights::Spod { beta } => WeightState::Spod {
                beta: beta[..s].to_vec(),
                alpha: alpha as usize,
                w: vec![vec![1.0; n]],
                scale: vec![0.0],
                lnfact: ln_factorials(alpha as usize * s + alpha as usize),
            },
        }
    }

    fn spod_log_weight(beta: f64, nu: usize, alpha: usize) -> f64 {
        let two = if nu == alpha { std::f64::consts::LN_2 } else { 0.0 };
        two + nu as f64 * beta.ln()
    }

    /// `B_j(n) = e^{kappa} out[n]`: the factor multiplying `Phi_j(n)` in the
    /// criterion increment of dimension `j`.
    fn increment_factor(&self, j: usize, out: &mut [f64]) -> f64 {
        match self {
            WeightState::Product { gamma, q, scale } => {
                out.copy_from_slice(q);
                gamma[j].ln() + scale
            }
            WeightState::Spod {
                beta,
                alpha,
                w,
                scale,
                lnfact,
            } => {
                let mut coef = Vec::new();
                for (l, &sl) in scale.iter().enumerate() {
                    for nu in 1..=*alpha {
                        let c = Self::spod_log_weight(beta[j], nu, *alpha) + lnfact[l + nu] - lnfact[l] + sl;
                        coef.push((l, c));
                    }
                }
                let kappa = coef.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
                out.fill(0.0);
                for (l, c) in coef {
                    let f = (c - kappa).exp();
                    if f == 0.0 {
                        continue;
                    }
                    for (o, v) in out.iter_mut().zip(&w[l]) {
                        *o += f * v;
                    }
                }
                kappa
            }
        }
    }

    /// Folds dimension `j` with values `phi` into the state.
    fn absorb(&mut self, j: usize, phi: &[f64]) {
        match self {
            WeightState::Product { gamma, q, scale } => {
                let g = gamma[j];
                for (qn, p) in q.iter_mut().zip(phi) {
                    *qn *= 1.0 + g * p;
                }
                let mx = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if mx > 0.0 {
                    q.iter_mut().for_each(|v| *v /= mx);
                    *scale += mx.ln();
                }
            }
            WeightState::Spod {
                beta,
                alpha,
                w,
                scale,
                lnfact,
            } => {
                let old_top = w.len() - 1;
                let new_top = old_top + *alpha;
                w.resize(new_top + 1, vec![0.0; phi.len()]);
                scale.resize(new_top + 1, f64::NEG_INFINITY);
                for l in (1..=new_top).rev() {
                    let terms: Vec<(usize, f64)> = (1..=(*alpha).min(l))
                        .filter(|nu| l - nu <= old_top)
                        .map(|nu| {
                            let c = Self::spod_log_weight(beta[j], nu, *alpha) + lnfact[l] - lnfact[l - nu]
                                + scale[l - nu];
                            (l - nu, c)
                        })
                        .collect();
                    let own = if l <= old_top { scale[l] } else { f64::NEG_INFINITY };
                    let new_scale = terms.iter().map(|t| t.1).fold(own, f64::max);
                    if new_scale == f64::NEG_INFINITY {
                        continue;
                    }
                    let keep = if own == f64::NEG_INFINITY { 0.0 } else { (own - new_scale).exp() };
                    let factors: Vec<(usize, f64)> = terms.iter().map(|&(k, c)| (k, (c - new_scale).exp())).collect();
                    let (lower, upper) = w.split_at_mut(l);
                    let target = &mut upper[0];
                    for n in 0..phi.len() {
                        let mut acc = 0.0;
                        for &(k, f) in &factors {
                            acc += f * lower[k][n];
                        }
                        target[n] = keep * target[n] + phi[n] * acc;
                    }
                    scale[l] = new_scale;
                    let mx = target.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    if mx > 0.0 {
                        target.iter_mut().for_each(|v| *v /= mx);
                        scale[l] += mx.ln();
                    } else {
                        scale[l] = f64::NEG_INFINITY;
                    }
                }
            }
        }
    }

    /// `ln E` for the dimensions absorbed so far.
    fn log_value(&self) -> f64 {
        let mean = |v: &[f64]| crate::sum::pairwise_sum(v) / v.len() as f64;
        match self {
            WeightState::Product { q, scale, .. } => {
                // E = mean(Q) - 1
                let mq = mean(q);
                let e = mq * scale.exp() - 1.0;
                if scale.exp().is_finite() {
                    e.max(0.0).ln()
                } else {
                    mq.ln() + scale
                }
            }
            WeightState::Spod { w, scale, .. } => {
                let logs: Vec<f64> = (1..w.len())
                    .filter(|&l| scale[l] > f64::NEG_INFINITY)
                    .map(|l| mean(&w[l]).max(0.0).ln() + scale[l])
                    .collect();
                let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if mx == f64::NEG_INFINITY {
                    return mx;
                }
                mx + logs.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
            }
        }
    }
}

/// Precomputed tables for a fixed `(b, m, P)`.
struct Field {
    b: u32,
    m: u32,
    n: usize,
    modulus: GFPoly,
    /// `kernel[v] = omega(v / b^m)`
    kernel: Vec<f64>,
    /// `vm[q] = b^m v_m(q / P)` for every `q` of degree below `m`
    vm: Vec<u64>,
    /// `pow[k] = x^k mod P` as an integer, when `x` is primitive.
    pow: Option<Vec<u64>>,
}

impl Field {
    fn new(b: u32, m: u32, alpha: u32, modulus: GFPoly) -> Result<Self> {
        let n = (b as usize).pow(m);
        let kernel = (0..n as u64).map(|v| walsh_kernel(b, alpha, v, m)).collect();
        let one = GeneratingVector::new(b, m, 1, 1, vec![GFPoly::one(b)], modulus.clone())?;
        let pts = one.classical_points()?;
        let vm: Vec<u64> = (0..n).map(|i| pts.int(i, 0)).collect();
        let pow = modulus.is_primitive().then(|| {
            let mut out = Vec::with_capacity(n - 1);
            let mut cur = GFPoly::one(b);
            let x = GFPoly::monomial(b, 1);
            for _ in 0..n - 1 {
                out.push(cur.to_int());
                cur = cur.mul(&x).rem(&modulus).expect("nonzero modulus");
            }
            out
        });
        Ok(Field {
            b,
            m,
            n,
            modulus,
            kernel,
            vm,
            pow,
        })
    }

    /// `b^m v_m(n g / P)` for every `n`.
    fn component(&self, g: u64) -> Result<Vec<u64>> {
        let gv = GeneratingVector::new(self.b, self.m, 1, 1, vec![GFPoly::from_int(self.b, g)], self.modulus.clone())?;
        let pts = gv.classical_points()?;
        Ok((0..self.n).map(|i| pts.int(i, 0)).collect())
    }

    /// Score of every nonzero candidate `g` (indexed by its integer value):
    /// `sum_n a[n] omega(v_m(n g / P))`.
    fn scores_plain(&self, a: &[f64]) -> Result<Vec<(u64, f64)>> {
        (1..self.n as u64)
            .map(|g| {
                let y = self.component(g)?;
                let s: f64 = a.iter().zip(&y).map(|(ai, &yi)| ai * self.kernel[yi as usize]).sum();
                Ok((g, s))
            })
            .collect()
    }

    /// Same scores through a length `N - 1` circular correlation over the
    /// exponents of the primitive element `x`.
    fn scores_fast(&self, a: &[f64], planner: &mut FftPlanner<f64>) -> Vec<(u64, f64)> {
        let pow = self.pow.as_ref().expect("primitive modulus");
        let len = self.n - 1;
        let mut fa: Vec<Complex<f64>> = pow.iter().map(|&p| Complex::new(a[p as usize], 0.0)).collect();
        let mut fo: Vec<Complex<f64>> = pow
            .iter()
            .map(|&p| Complex::new(self.kernel[self.vm[p as usize] as usize], 0.0))
            .collect();
        let fwd = planner.plan_fft_forward(len);
        fwd.process(&mut fa);
        fwd.process(&mut fo);
        let mut prod: Vec<Complex<f64>> = fa.iter().zip(&fo).map(|(x, y)| x.conj() * y).collect();
        planner.plan_fft_inverse(len).process(&mut prod);
        let base = a[0] * self.kernel[0];
        (0..len)
            .map(|c| (pow[c], base + prod[c].re / len as f64))
            .collect()
    }
}

/// Chooses the best candidate, breaking near-ties by the smallest polynomial.
fn pick(scores: &[(u64, f64)], magnitude: f64) -> u64 {
    let best = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * magnitude.max(best.abs());
    scores
        .iter()
        .filter(|s| s.1 <= best + tol)
        .map(|s| s.0)
        .min()
        .expect("at least one candidate")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbcMethod {
    /// `O(N^2)` direct evaluation of every candidate.
    Plain,
    /// FFT-based evaluation; needs a primitive modulus and falls back to
    /// `Plain` otherwise.
    Fast,
}

/// Builds an order-`alpha` interlaced rule with `b^m` points in `s`
/// dimensions using the default primitive modulus.
pub fn cbc_construct(b: u32, m: u32, s: usize, alpha: u32, weights: &CbcWeights, method: CbcMethod) -> Result<GeneratingVector> {
    cbc_construct_with_modulus(default_modulus(b, m)?, s, alpha, weights, method)
}

pub fn cbc_construct_with_modulus(
    modulus: GFPoly,
    s: usize,
    alpha: u32,
    weights: &CbcWeights,
    method: CbcMethod,
) -> Result<GeneratingVector> {
    let b = modulus.base();
    let m = modulus
        .degree()
        .ok_or_else(|| Error::invalid("zero modulus"))? as u32;
    if alpha < 2 {
        return Err(Error::invalid("the CBC criterion needs interlacing order >= 2"));
    }
    if s == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if ((alpha * m) as f64 * (b as f64).log2()).ceil() as u32 > MAX_MANTISSA_BITS {
        return Err(Error::invalid(format!(
            "alpha m = {} digits exceed double precision",
            alpha * m
        )));
    }
    weights.validate(s)?;
    let field = Field::new(b, m, alpha, modulus.clone())?;
    let n = field.n;
    let fast = method == CbcMethod::Fast && field.pow.is_some();
    let mut planner = FftPlanner::new();

    let mut state = WeightState::new(weights, n, s, alpha);
    let mut polys = Vec::with_capacity(alpha as usize * s);
    let mut bfac = vec![0.0; n];
    let mut partial = vec![0.0; n];
    let mut a = vec![0.0; n];
    for j in 0..s {
        state.increment_factor(j, &mut bfac);
        partial.fill(1.0);
        for _ in 0..alpha {
            for k in 0..n {
                a[k] = bfac[k] * partial[k];
            }
            let magnitude: f64 = a.iter().map(|v| v.abs()).sum::<f64>() * field.kernel[0].abs().max(1.0);
            let scores = if fast {
                field.scores_fast(&a, &mut planner)
            } else {
                field.scores_plain(&a)?
            };
            let g = pick(&scores, magnitude);
            let y = field.component(g)?;
            for k in 0..n {
                partial[k] *= 1.0 + field.kernel[y[k] as usize];
            }
            polys.push(GFPoly::from_int(b, g));
        }
        for p in partial.iter_mut() {
            *p -= 1.0;
        }
        state.absorb(j, &partial);
    }
    GeneratingVector::new(b, m, alpha, s, polys, modulus)
}

/// `ln E` of a generating vector under the given weights.
pub fn log_criterion(gv: &GeneratingVector, weights: &CbcWeights) -> Result<f64> {
    if gv.alpha < 2 {
        return Err(Error::invalid("the CBC criterion needs interlacing order >= 2"));
    }
    weights.validate(gv.s)?;
    let pts = gv.classical_points()?;
    let n = pts.len();
    let a = gv.alpha as usize;
    let mut state = WeightState::new(weights, n, gv.s, gv.alpha);
    let mut phi = vec![0.0; n];
    for j in 0..gv.s {
        for (i, p) in phi.iter_mut().enumerate() {
            let prod: f64 = (0..a)
                .map(|r| 1.0 + walsh_kernel(gv.b, gv.alpha, pts.int(i, j * a + r), gv.m))
                .product();
            *p = prod - 1.0;
        }
        state.absorb(j, &phi);
    }
    Ok(state.log_value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Truncated Walsh series `sum_{k=1}^{K} b^{-alpha mu(k)} wal_k(x)`, `b = 2`.
    fn walsh_series(alpha: u32, x_int: u64, m: u32) -> f64 {
        let mut total = 0.0;
        for k in 1u64..(1 << 20) {
            let mu = 64 - k.leading_zeros();
            // wal_k(x) = (-1)^{sum_i kappa_i xi_{i+1}}
            let mut parity = 0;
            for i in 0..mu {
                if (k >> i) & 1 == 1 && i < m {
                    parity ^= (x_int >> (m - 1 - i)) & 1;
                }
            }
            let sign = if parity == 0 { 1.0 } else { -1.0 };
            total += sign * 2f64.powi(-(alpha as i32) * mu as i32);
        }
        total
    }

    #[test]
    fn kernel_matches_walsh_series() {
        for alpha in [2, 3] {
            for v in [0u64, 1, 2, 3, 5, 8, 13, 15] {
                let a = walsh_kernel(2, alpha, v, 4);
                let s = walsh_series(alpha, v, 4);
                assert!((a - s).abs() < 1e-5, "alpha={alpha} v={v}: {a} vs {s}");
            }
        }
    }

    /// Brute-force criterion by subset and multi-index enumeration.
    fn brute_criterion(gv: &GeneratingVector, weights: &CbcWeights) -> f64 {
        let pts = gv.classical_points().unwrap();
        let a = gv.alpha as usize;
        let s = gv.s;
        let n = pts.len();
        let phi: Vec<Vec<f64>> = (0..s)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        (0..a)
                            .map(|r| 1.0 + walsh_kernel(gv.b, gv.alpha, pts.int(i, j * a + r), gv.m))
                            .product::<f64>()
                            - 1.0
                    })
                    .collect()
            })
            .collect();
        let mut total = 0.0;
        for mask in 1u32..(1 << s) {
            let u: Vec<usize> = (0..s).filter(|j| mask >> j & 1 == 1).collect();
            let gamma = match weights {
                CbcWeights::Product { gamma } => u.iter().map(|&j| gamma[j]).product::<f64>(),
                CbcWeights::Spod { beta } => {
                    let mut g = 0.0;
                    let count = a.pow(u.len() as u32);
                    for code in 0..count {
                        let mut c = code;
                        let mut total_nu = 0;
                        let mut prod = 1.0;
                        for &j in &u {
                            let nu = c % a + 1;
                            c /= a;
                            total_nu += nu;
                            prod *= if nu == a { 2.0 } else { 1.0 } * beta[j].powi(nu as i32);
                        }
                        g += (1..=total_nu).map(|k| k as f64).product::<f64>() * prod;
                    }
                    g
                }
            };
            let mean: f64 = (0..n).map(|i| u.iter().map(|&j| phi[j][i]).product::<f64>()).sum::<f64>() / n as f64;
            total += gamma * mean;
        }
        total
    }

    fn random_vector(rng: &mut ChaCha8Rng, m: u32, s: usize, alpha: u32) -> GeneratingVector {
        let polys = (0..alpha as usize * s)
            .map(|_| GFPoly::from_int(2, rng.gen_range(1..1u64 << m)))
            .collect();
        GeneratingVector::new(2, m, alpha, s, polys, default_modulus(2, m).unwrap()).unwrap()
    }

    #[test]
    fn criterion_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (s, alpha) in [(1, 2), (2, 2), (3, 3), (4, 2)] {
            let gv = random_vector(&mut rng, 5, s, alpha);
            for w in [
                CbcWeights::Product { gamma: vec![1.0, 0.25, 0.1, 0.05] },
                CbcWeights::Spod { beta: vec![0.9, 0.4, 0.2, 0.1] },
            ] {
                let fast = log_criterion(&gv, &w).unwrap().exp();
                let brute = brute_criterion(&gv, &w);
                assert!((fast - brute).abs() <= 1e-10 * brute, "s={s} alpha={alpha} {w:?}: {fast} vs {brute}");
            }
        }
    }

    #[test]
    fn fast_and_plain_agree() {
        for w in [
            CbcWeights::Product { gamma: vec![1.0, 0.5, 0.25] },
            CbcWeights::Spod { beta: vec![2.0, 0.5, 0.125] },
        ] {
            let f = cbc_construct(2, 6, 3, 2, &w, CbcMethod::Fast).unwrap();
            let p = cbc_construct(2, 6, 3, 2, &w, CbcMethod::Plain).unwrap();
            let (ef, ep) = (log_criterion(&f, &w).unwrap(), log_criterion(&p, &w).unwrap());
            assert!((ef - ep).abs() < 1e-9, "{ef} vs {ep}");
        }
    }

    #[test]
    fn one_dimensional_rule_stratifies() {
        let w = CbcWeights::Spod { beta: vec![0.3] };
        let gv = cbc_construct(2, 5, 1, 2, &w, CbcMethod::Fast).unwrap();
        let pts = gv.classical_points().unwrap();
        for j in 0..2 {
            let mut col: Vec<u64> = (0..32).map(|i| pts.int(i, j)).collect();
            col.sort_unstable();
            assert!(col.iter().enumerate().all(|(k, &v)| v == k as u64));
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let w = CbcWeights::Spod { beta: vec![1.0, 0.5, 0.3] };
        let a = cbc_construct(2, 7, 3, 3, &w, CbcMethod::Fast).unwrap();
        let b = cbc_construct(2, 7, 3, 3, &w, CbcMethod::Fast).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn beats_random_vectors() {
        let w = CbcWeights::Product { gamma: vec![1.0, 0.25] };
        let gv = cbc_construct(2, 4, 2, 2, &w, CbcMethod::Plain).unwrap();
        let e = log_criterion(&gv, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let r = random_vector(&mut rng, 4, 2, 2);
            assert!(e <= log_criterion(&r, &w).unwrap() + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let w = CbcWeights::Product { gamma: vec![1.0] };
        assert!(cbc_construct(2, 4, 1, 1, &w, CbcMethod::Fast).is_err());
        assert!(cbc_construct(2, 4, 2, 2, &w, CbcMethod::Fast).is_err());
        assert!(cbc_construct(2, 20, 1, 3, &w, CbcMethod::Fast).is_err());
        let bad = CbcWeights::Product { gamma: vec![-1.0] };
        assert!(cbc_construct(2, 4, 1, 2, &bad, CbcMethod::Fast).is_err());
    }
}
