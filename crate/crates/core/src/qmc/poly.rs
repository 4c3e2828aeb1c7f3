//! Polynomials over the prime field `Z_b`.

use std::fmt;

use crate::error::{Error, Result};

/// Polynomial with little-endian coefficients in `[0, b)`; the zero
/// polynomial has no coefficients and nonzero ones have a nonzero leading
/// coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GFPoly {
    b: u32,
    coeffs: Vec<u32>,
}

pub fn is_prime(b: u32) -> bool {
    b >= 2 && (2..).take_while(|d| d * d <= b).all(|d| b % d != 0)
}

impl GFPoly {
    /// Builds a polynomial from little-endian digits; trailing zeros are
    /// dropped.
    pub fn new(b: u32, mut coeffs: Vec<u32>) -> Result<Self> {
        if !is_prime(b) {
            return Err(Error::invalid(format!("base {b} is not prime")));
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= b) {
            return Err(Error::invalid(format!("digit {c} out of range for base {b}")));
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Ok(GFPoly { b, coeffs })
    }

    fn raw(b: u32, mut coeffs: Vec<u32>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        GFPoly { b, coeffs }
    }

    pub fn zero(b: u32) -> Self {
        GFPoly { b, coeffs: Vec::new() }
    }

    pub fn one(b: u32) -> Self {
        GFPoly { b, coeffs: vec![1] }
    }

    /// `x^k`
    pub fn monomial(b: u32, k: usize) -> Self {
        let mut coeffs = vec![0; k + 1];
        coeffs[k] = 1;
        GFPoly { b, coeffs }
    }

    pub fn base(&self) -> u32 {
        self.b
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> u32 {
        self.coeffs.get(k).copied().unwrap_or(0)
    }

    pub fn leading(&self) -> u32 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    /// The integer whose base-`b` digits are the coefficients.
    pub fn to_int(&self) -> u64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| acc * self.b as u64 + c as u64)
    }

    pub fn from_int(b: u32, mut n: u64) -> Self {
        let mut coeffs = Vec::new();
        while n > 0 {
            coeffs.push((n % b as u64) as u32);
            n /= b as u64;
        }
        GFPoly { b, coeffs }
    }

    fn check_base(&self, other: &GFPoly) {
        assert_eq!(self.b, other.b, "polynomials over different fields");
    }

    pub fn add(&self, other: &GFPoly) -> GFPoly {
        self.check_base(other);
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n).map(|k| (self.coeff(k) + other.coeff(k)) % self.b).collect();
        GFPoly::raw(self.b, c)
    }

    pub fn sub(&self, other: &GFPoly) -> GFPoly {
        self.check_base(other);
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|k| (self.coeff(k) + self.b - other.coeff(k)) % self.b)
            .collect();
        GFPoly::raw(self.b, c)
    }

    pub fn scale(&self, s: u32) -> GFPoly {
        let b = self.b as u64;
        GFPoly::raw(
            self.b,
            self.coeffs.iter().map(|&c| (c as u64 * s as u64 % b) as u32).collect(),
        )
    }

    pub fn mul(&self, other: &GFPoly) -> GFPoly {
        self.check_base(other);
        if self.is_zero() || other.is_zero() {
            return GFPoly::zero(self.b);
        }
        let b = self.b as u64;
        let mut c = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &x) in self.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in other.coeffs.iter().enumerate() {
                c[i + j] = (c[i + j] + x as u64 * y as u64) % b;
            }
        }
        GFPoly::raw(self.b, c.into_iter().map(|v| v as u32).collect())
    }

    /// `(quotient, remainder)`
    pub fn div_rem(&self, divisor: &GFPoly) -> Result<(GFPoly, GFPoly)> {
        self.check_base(divisor);
        let Some(dd) = divisor.degree() else {
            return Err(Error::invalid("division by the zero polynomial"));
        };
        let b = self.b as u64;
        let inv = inverse(divisor.leading(), self.b) as u64;
        let mut r: Vec<u64> = self.coeffs.iter().map(|&c| c as u64).collect();
        let qlen = r.len().saturating_sub(dd);
        let mut q = vec![0u64; qlen];
        for k in (dd..r.len()).rev() {
            let t = r[k] * inv % b;
            if t == 0 {
                continue;
            }
            q[k - dd] = t;
            for (i, &d) in divisor.coeffs.iter().enumerate() {
                let idx = k - dd + i;
                r[idx] = (r[idx] + b - t * d as u64 % b) % b;
            }
        }
        r.truncate(dd);
        Ok((
            GFPoly::raw(self.b, q.into_iter().map(|v| v as u32).collect()),
            GFPoly::raw(self.b, r.into_iter().map(|v| v as u32).collect()),
        ))
    }

    pub fn rem(&self, divisor: &GFPoly) -> Result<GFPoly> {
        Ok(self.div_rem(divisor)?.1)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &GFPoly) -> GFPoly {
        self.check_base(other);
        let (mut a, mut c) = (self.clone(), other.clone());
        while !c.is_zero() {
            let r = a.rem(&c).expect("nonzero divisor");
            a = c;
            c = r;
        }
        if a.is_zero() {
            a
        } else {
            let inv = inverse(a.leading(), a.b);
            a.scale(inv)
        }
    }

    /// `self^e mod modulus`
    pub fn pow_mod(&self, mut e: u128, modulus: &GFPoly) -> Result<GFPoly> {
        let mut base = self.rem(modulus)?;
        let mut acc = GFPoly::one(self.b).rem(modulus)?;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(modulus)?;
            }
            base = base.mul(&base).rem(modulus)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Irreducibility by Ben-Or's test: no factor of degree `k <= deg/2`
    /// divides, i.e. `gcd(x^{b^k} - x, self) = 1` for each such `k`.
    pub fn is_irreducible(&self) -> bool {
        let Some(d) = self.degree() else {
            return false;
        };
        if d == 0 {
            return false;
        }
        let x = GFPoly::monomial(self.b, 1);
        let mut xp = x.rem(self).expect("nonzero");
        for _ in 1..=d / 2 {
            xp = xp.pow_mod(self.b as u128, self).expect("nonzero");
            if xp.sub(&x).gcd(self).degree() != Some(0) {
                return false;
            }
        }
        true
    }

    /// True when the polynomial is irreducible and `x` generates the
    /// multiplicative group of `Z_b[x] / (self)`.
    pub fn is_primitive(&self) -> bool {
        if !self.is_irreducible() {
            return false;
        }
        let d = self.degree().expect("irreducible") as u32;
        let order = (self.b as u128).pow(d) - 1;
        let x = GFPoly::monomial(self.b, 1);
        let one = GFPoly::one(self.b);
        if x.pow_mod(order, self).expect("nonzero") != one {
            return false;
        }
        prime_factors(order)
            .into_iter()
            .all(|p| x.pow_mod(order / p, self).expect("nonzero") != one)
    }
}

impl fmt::Display for GFPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (k, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "x")?,
                (1, c) => write!(f, "{c}x")?,
                (k, 1) => write!(f, "x^{k}")?,
                (k, c) => write!(f, "{c}x^{k}")?,
            }
        }
        Ok(())
    }
}

/// Multiplicative inverse in `Z_b`.
pub fn inverse(a: u32, b: u32) -> u32 {
    assert!(a % b != 0, "zero has no inverse");
    let (mut r, mut e, mut acc) = (a as u64 % b as u64, b as u64 - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * r % b as u64;
        }
        r = r * r % b as u64;
        e >>= 1;
    }
    acc as u32
}

fn prime_factors(mut n: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut p = 2u128;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
