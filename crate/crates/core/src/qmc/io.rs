//! Plain-text generating-vector files.
//!
//! ```text
//! b m alpha s
//! <little-endian digits of g_1>
//! ...
//! <little-endian digits of g_{alpha s}>
//! <little-endian digits of P>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::lattice::GeneratingVector;
use super::poly::GFPoly;

fn digits_line(p: &GFPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (k, c) in p.coeffs().iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        write!(s, "{c}").expect("writing to a string");
    }
    s
}

pub fn format_vector(gv: &GeneratingVector) -> String {
    let mut out = format!("{} {} {} {}\n", gv.b, gv.m, gv.alpha, gv.s);
    for g in &gv.polys {
        out.push_str(&digits_line(g));
        out.push('\n');
    }
    out.push_str(&digits_line(&gv.modulus));
    out.push('\n');
    out
}

/// Writes atomically: the file either holds the complete vector or is left
/// untouched.
pub fn save_vector(gv: &GeneratingVector, path: &Path) -> Result<()> {
    crate::experiments::write_atomic(path, format_vector(gv).as_bytes())
}

pub fn load_vector(path: &Path) -> Result<GeneratingVector> {
    let text = std::fs::read_to_string(path)?;
    parse_vector(&text, path)
}

pub fn parse_vector(text: &str, path: &Path) -> Result<GeneratingVector> {
    let err = |line: usize, field: &str, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message,
    };
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let Some(&(hline, header)) = lines.first() else {
        return Err(err(1, "header", "file is empty".into()));
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let names = ["b", "m", "alpha", "s"];
    if fields.len() != 4 {
        return Err(err(hline, "header", format!("expected `b m alpha s`, found {} fields", fields.len())));
    }
    let mut vals = [0u64; 4];
    for (k, (f, name)) in fields.iter().zip(names).enumerate() {
        vals[k] = f
            .parse()
            .map_err(|e| err(hline, name, format!("`{f}` is not a nonnegative integer: {e}")))?;
    }
    let [b, m, alpha, s] = vals;
    if !super::poly::is_prime(b as u32) || b > u32::MAX as u64 {
        return Err(err(hline, "b", format!("{b} is not a prime base")));
    }
    if m == 0 || m > 64 {
        return Err(err(hline, "m", format!("{m} is not in 1..=64")));
    }
    if alpha == 0 {
        return Err(err(hline, "alpha", "must be at least 1".into()));
    }
    let count = (alpha * s) as usize;
    if lines.len() != count + 2 {
        return Err(err(
            lines.last().map_or(hline, |l| l.0),
            "line count",
            format!("expected {} component lines and a modulus line, found {} lines after the header", count, lines.len() - 1),
        ));
    }
    let parse_poly = |line: usize, text: &str, field: &str| -> Result<GFPoly> {
        let digits = text
            .split_whitespace()
            .map(|d| {
                d.parse::<u32>()
                    .ok()
                    .filter(|&v| (v as u64) < b)
                    .ok_or_else(|| err(line, field, format!("`{d}` is not a base-{b} digit")))
            })
            .collect::<Result<Vec<u32>>>()?;
        GFPoly::new(b as u32, digits).map_err(|e| err(line, field, e.to_string()))
    };
    let mut polys = Vec::with_capacity(count);
    for (k, &(line, text)) in lines[1..=count].iter().enumerate() {
        let field = format!("g_{}", k + 1);
        let g = parse_poly(line, text, &field)?;
        if g.degree().is_some_and(|d| d >= m as usize) {
            return Err(err(line, &field, format!("degree {} is not below m = {m}", g.degree().unwrap_or(0))));
        }
        polys.push(g);
    }
    let (pline, ptext) = lines[count + 1];
    let modulus = parse_poly(pline, ptext, "P")?;
    if modulus.degree() != Some(m as usize) {
        return Err(err(pline, "P", format!("modulus {modulus} does not have degree {m}")));
    }
    if !modulus.is_irreducible() {
        return Err(err(pline, "P", format!("modulus {modulus} is reducible")));
    }
    GeneratingVector::new(b as u32, m as u32, alpha as u32, s as usize, polys, modulus)
        .map_err(|e| err(pline, "vector", e.to_string()))
}
