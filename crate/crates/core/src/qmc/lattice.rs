//! Classical and interlaced polynomial lattice point sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::poly::{inverse, GFPoly};

/// Largest number of binary digits a coordinate may carry and still be an
/// exact `f64`.
pub const MAX_MANTISSA_BITS: u32 = 53;

/// The smallest primitive polynomial over GF(2) of each degree 1..=32, as a
/// bit mask with bit `k` holding the coefficient of `x^k`.
const PRIMITIVE_GF2: [u64; 32] = [
    0b11,
    0b111,
    0b1011,
    0b10011,
    0b100101,
    0b1000011,
    0b10000011,
    0b100011101,
    0b1000010001,
    0b10000001001,
    0b100000000101,
    0b1000001010011,
    0b10000000011011,
    0b100000000101011,
    0b1000000000000011,
    0b10000000000101101,
    0b100000000000001001,
    0b1000000000000100111,
    0b10000000000000100111,
    0b100000000000000001001,
    0b1000000000000000000101,
    0b10000000000000000000011,
    0b100000000000000000100001,
    0b1000000000000000000011011,
    0b10000000000000000000001001,
    0b100000000000000000001000111,
    0b1000000000000000000000100111,
    0b10000000000000000000000001001,
    0b100000000000000000000000000101,
    0b1000000000000000000000001010011,
    0b10000000000000000000000000001001,
    0b100000000000000000000000010101111,
];

/// A primitive modulus of degree `m`: from the built-in table for `b = 2`,
/// otherwise the smallest primitive monic polynomial found by search.
pub fn default_modulus(b: u32, m: u32) -> Result<GFPoly> {
    if m == 0 {
        return Err(Error::invalid("modulus degree must be positive"));
    }
    if b == 2 && m <= 32 {
        return Ok(GFPoly::from_int(2, PRIMITIVE_GF2[m as usize - 1]));
    }
    let lead = (b as u64)
        .checked_pow(m)
        .ok_or_else(|| Error::invalid(format!("b^m overflows for b={b}, m={m}")))?;
    (0..lead)
        .map(|low| GFPoly::from_int(b, lead + low))
        .find(|p| p.is_primitive())
        .ok_or_else(|| Error::Reducible(format!("no primitive polynomial of degree {m} over Z_{b}")))
}

/// Polynomial whose coefficients are the base-`b` digits of `n`.
pub fn int_to_poly(n: u64, b: u32, m: u32) -> Result<GFPoly> {
    let bound = (b as u128).pow(m);
    if n as u128 >= bound {
        return Err(Error::invalid(format!("{n} is not below {b}^{m}")));
    }
    Ok(GFPoly::from_int(b, n))
}

/// `b^m v_m(num / den)`: the first `m` Laurent coefficients of `num / den`
/// in `x^-1`, read as base-`b` digits.
pub fn vm_int(num: &GFPoly, den: &GFPoly, m: u32) -> Result<u64> {
    let Some(dd) = den.degree() else {
        return Err(Error::invalid("zero denominator"));
    };
    let b = num.base() as u64;
    let inv = inverse(den.leading(), num.base()) as u64;
    let mut r: Vec<u64> = num.rem(den)?.coeffs().iter().map(|&c| c as u64).collect();
    r.resize(dd + 1, 0);
    let mut acc = 0u64;
    for _ in 0..m {
        // r <- x r, which stays of degree <= dd
        r.rotate_right(1);
        let t = r[dd] * inv % b;
        if t != 0 {
            for (ri, &d) in r.iter_mut().zip(den.coeffs()) {
                *ri = (*ri + b - t * d as u64 % b) % b;
            }
        }
        acc = acc * b + t;
    }
    Ok(acc)
}

/// `v_m(num / den)` in `[0, 1)`.
pub fn vm_map(num: &GFPoly, den: &GFPoly, m: u32) -> Result<f64> {
    Ok(vm_int(num, den, m)? as f64 / (num.base() as f64).powi(m as i32))
}

/// Modulus `P` of degree `m` and `alpha * s` generating polynomials of degree
/// below `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratingVector {
    pub b: u32,
    pub m: u32,
    pub alpha: u32,
    /// Dimension after interlacing.
    pub s: usize,
    pub polys: Vec<GFPoly>,
    pub modulus: GFPoly,
}

impl GeneratingVector {
    pub fn new(b: u32, m: u32, alpha: u32, s: usize, polys: Vec<GFPoly>, modulus: GFPoly) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::invalid("interlacing order must be at least 1"));
        }
        if modulus.base() != b || polys.iter().any(|g| g.base() != b) {
            return Err(Error::invalid(format!("all polynomials must be over Z_{b}")));
        }
        if modulus.degree() != Some(m as usize) {
            return Err(Error::invalid(format!(
                "modulus {modulus} does not have degree {m}"
            )));
        }
        if !modulus.is_irreducible() {
            return Err(Error::Reducible(modulus.to_string()));
        }
        if polys.len() != alpha as usize * s {
            return Err(Error::invalid(format!(
                "expected {} generating polynomials, got {}",
                alpha as usize * s,
                polys.len()
            )));
        }
        if let Some(g) = polys.iter().find(|g| g.degree().is_some_and(|d| d >= m as usize)) {
            return Err(Error::invalid(format!("generating polynomial {g} has degree >= {m}")));
        }
        Ok(GeneratingVector {
            b,
            m,
            alpha,
            s,
            polys,
            modulus,
        })
    }

    pub fn n_points(&self) -> usize {
        (self.b as usize).pow(self.m)
    }

    /// Classical rule in all `alpha * s` components.
    pub fn classical_points(&self) -> Result<PointSet> {
        classical_points(self)
    }

    /// The order-`alpha` interlaced rule in `s` dimensions.
    pub fn points(&self) -> Result<PointSet> {
        interlace(&classical_points(self)?, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Classical,
    Interlaced { alpha: u32 },
}

/// `n x dim` points stored exactly as integers `b^digits x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    n: usize,
    dim: usize,
    b: u32,
    digits: u32,
    ints: Vec<u64>,
    kind: PointKind,
}

impl PointSet {
    pub fn from_ints(n: usize, dim: usize, b: u32, digits: u32, ints: Vec<u64>, kind: PointKind) -> Result<Self> {
        if ints.len() != n * dim {
            return Err(Error::invalid("point data does not match n x dim"));
        }
        let bound = (b as u128).pow(digits);
        if ints.iter().any(|&v| v as u128 >= bound) {
            return Err(Error::invalid("point coordinate outside [0, 1)"));
        }
        Ok(PointSet {
            n,
            dim,
            b,
            digits,
            ints,
            kind,
        })
    }

    /// A single point at the origin.
    pub fn origin(dim: usize, b: u32) -> Self {
        PointSet {
            n: 1,
            dim,
            b,
            digits: 0,
            ints: vec![0; dim],
            kind: PointKind::Classical,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> u32 {
        self.b
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn kind(&self) -> PointKind {
        self.kind
    }

    pub fn int(&self, i: usize, j: usize) -> u64 {
        self.ints[i * self.dim + j]
    }

    fn scale(&self) -> f64 {
        (self.b as f64).powi(self.digits as i32)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.int(i, j) as f64 / self.scale()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let s = self.scale();
        self.ints[i * self.dim..(i + 1) * self.dim]
            .iter()
            .map(|&v| v as f64 / s)
            .collect()
    }

    /// The `k`-th base-`b` digit (1-based, most significant first) of
    /// coordinate `(i, j)`.
    pub fn digit(&self, i: usize, j: usize, k: u32) -> u32 {
        assert!(k >= 1 && k <= self.digits);
        ((self.int(i, j) / (self.b as u64).pow(self.digits - k)) % self.b as u64) as u32
    }

    /// Restriction to the given coordinates, in the given order.
    pub fn select(&self, columns: &[usize]) -> PointSet {
        let mut ints = Vec::with_capacity(self.n * columns.len());
        for i in 0..self.n {
            ints.extend(columns.iter().map(|&c| self.int(i, c)));
        }
        PointSet {
            n: self.n,
            dim: columns.len(),
            b: self.b,
            digits: self.digits,
            ints,
            kind: self.kind,
        }
    }
}

/// Columns of the generating matrix of one component: `b^m v_m(x^k g / P)`
/// for `k < m`.
fn generator_columns(g: &GFPoly, modulus: &GFPoly, m: u32) -> Result<Vec<u64>> {
    (0..m as usize)
        .map(|k| vm_int(&GFPoly::monomial(g.base(), k).mul(g), modulus, m))
        .collect()
}

/// Digit-wise sum mod `b` of two `m`-digit integers.
fn digit_add(x: u64, y: u64, b: u64, m: u32) -> u64 {
    if b == 2 {
        return x ^ y;
    }
    let (mut x, mut y, mut out, mut place) = (x, y, 0u64, 1u64);
    for _ in 0..m {
        out += ((x % b + y % b) % b) * place;
        x /= b;
        y /= b;
        place *= b;
    }
    out
}

/// `y_n = v_m(n(x) g_j(x) / P(x))` for every `n < b^m` and every component.
pub fn classical_points(gv: &GeneratingVector) -> Result<PointSet> {
    let n = gv.n_points();
    let dim = gv.polys.len();
    let b = gv.b as u64;
    let mut ints = vec![0u64; n * dim];
    for (j, g) in gv.polys.iter().enumerate() {
        let cols = generator_columns(g, &gv.modulus, gv.m)?;
        // y(n) = y(n - b^k) + C e_k, with b^k the lowest nonzero digit place of n
        for i in 1..n {
            let mut k = 0;
            let mut place = 1usize;
            while (i / place) % b as usize == 0 {
                k += 1;
                place *= b as usize;
            }
            let prev = ints[(i - place) * dim + j];
            ints[i * dim + j] = digit_add(prev, cols[k], b, gv.m);
        }
    }
    PointSet::from_ints(n, dim, gv.b, gv.m, ints, PointKind::Classical)
}

/// Digit interlacing of order `alpha`: coordinates `alpha (j-1) + 1 ..= alpha j`
/// merge into output coordinate `j`, digit `a` of input `r` landing at
/// output digit `r + (a-1) alpha`.
pub fn interlace(points: &PointSet, alpha: u32) -> Result<PointSet> {
    if alpha == 0 || points.dim % alpha as usize != 0 {
        return Err(Error::invalid(format!(
            "dimension {} is not a multiple of the interlacing order {alpha}",
            points.dim
        )));
    }
    if alpha == 1 {
        return Ok(points.clone());
    }
    let out_digits = alpha * points.digits;
    let bits = (out_digits as f64 * (points.b as f64).log2()).ceil() as u32;
    if bits > MAX_MANTISSA_BITS {
        return Err(Error::invalid(format!(
            "interlaced coordinates need {out_digits} base-{} digits, beyond double precision",
            points.b
        )));
    }
    let a = alpha as usize;
    let s = points.dim / a;
    let m = points.digits;
    let b = points.b as u64;
    let mut ints = vec![0u64; points.n * s];
    for i in 0..points.n {
        for j in 0..s {
            let mut acc = 0u64;
            if b == 2 {
                for r in 0..a {
                    let v = points.int(i, j * a + r);
                    for d in 0..m {
                        // input digit d+1 (from the top) sits at bit m-1-d
                        let bit = (v >> (m - 1 - d)) & 1;
                        let pos = r as u32 + d * alpha; // 0-based output digit from the top
                        acc |= bit << (out_digits - 1 - pos);
                    }
                }
            } else {
                for pos in 0..out_digits {
                    let r = (pos % alpha) as usize;
                    let d = pos / alpha + 1;
                    acc = acc * b + points.digit(i, j * a + r, d) as u64;
                }
            }
            ints[i * s + j] = acc;
        }
    }
    PointSet::from_ints(points.n, s, points.b, out_digits, ints, PointKind::Interlaced { alpha })
}

/// Interlaces the first `digits` base-`b` digits of each of `xs` into one
/// number.
pub fn interlace_values(xs: &[f64], b: u32, digits: u32) -> Result<f64> {
    if xs.iter().any(|x| !(0.0..1.0).contains(x)) {
        return Err(Error::invalid("interlacing inputs must lie in [0, 1)"));
    }
    let alpha = xs.len() as u32;
    let scale = (b as f64).powi(digits as i32);
    let ints: Vec<u64> = xs.iter().map(|x| (x * scale).floor() as u64).collect();
    let ps = PointSet::from_ints(1, xs.len(), b, digits, ints, PointKind::Classical)?;
    Ok(interlace(&ps, alpha)?.value(0, 0))
}
