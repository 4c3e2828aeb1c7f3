//! Manufactured solution of the deterministic benchmark and the body force of
//! the random-coefficient benchmarks.

use std::f64::consts::PI;

use crate::coeff::presets;
use crate::mesh::Point;

/// Body force `(2 x1 + 10, x2 - 3)` of the random-coefficient benchmarks.
pub fn standard_forcing(x: Point) -> [f64; 2] {
    [2.0 * x[0] + 10.0, x[1] - 3.0]
}

/// `u1 = 2 (cos 2 pi x1 - 1) sin 2 pi x2`, `u2 = (1 - cos 2 pi x2) sin 2 pi x1`
pub fn example1_exact(x: Point) -> [f64; 2] {
    let a = 2.0 * PI;
    let (s1, c1) = (a * x[0]).sin_cos();
    let (s2, c2) = (a * x[1]).sin_cos();
    [2.0 * (c1 - 1.0) * s2, (1.0 - c2) * s1]
}

/// `div u` of the manufactured solution.
pub fn example1_divergence(x: Point) -> f64 {
    let a = 2.0 * PI;
    -a * (a * x[0]).sin() * (a * x[1]).sin()
}

/// `f = -div sigma(u)` for the manufactured solution with
/// `mu = x1 + x2 + 1` and `lambda = sin 2 pi x1 + 2`.
pub fn example1_forcing(x: Point) -> [f64; 2] {
    let (mu_f, lambda_f) = presets::example1();
    let mu = mu_f.base.value(x);
    let dmu = mu_f.base.gradient(x);
    let lambda = lambda_f.base.value(x);
    let dlambda = lambda_f.base.gradient(x);

    let a = 2.0 * PI;
    let a2 = a * a;
    let (s1, c1) = (a * x[0]).sin_cos();
    let (s2, c2) = (a * x[1]).sin_cos();

    let div = -a * s1 * s2;
    let div_1 = -a2 * c1 * s2;
    let div_2 = -a2 * s1 * c2;
    let e11 = -2.0 * a * s1 * s2;
    let e22 = a * s1 * s2;
    let e12 = a * (c1 - 1.0) * c2 + 0.5 * a * (1.0 - c2) * c1;
    let e11_1 = -2.0 * a2 * c1 * s2;
    let e22_2 = a2 * s1 * c2;
    let e12_1 = -a2 * s1 * c2 - 0.5 * a2 * (1.0 - c2) * s1;
    let e12_2 = -a2 * (c1 - 1.0) * s2 + 0.5 * a2 * s2 * c1;

    let f1 = dlambda[0] * div + lambda * div_1 + 2.0 * (dmu[0] * e11 + dmu[1] * e12 + mu * (e11_1 + e12_2));
    let f2 = dlambda[1] * div + lambda * div_2 + 2.0 * (dmu[0] * e12 + dmu[1] * e22 + mu * (e12_1 + e22_2));
    [-f1, -f2]
}

/// `(u, f)` of the deterministic benchmark.
pub fn example1_exact_and_forcing() -> (fn(Point) -> [f64; 2], fn(Point) -> [f64; 2]) {
    (example1_exact, example1_forcing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `-div sigma(u)` by nested central differences with step `h`.
    fn fd_operator(x: Point, h: f64) -> [f64; 2] {
        let (mu_f, lambda_f) = presets::example1();
        let grad_u = |p: Point| -> [[f64; 2]; 2] {
            let mut g = [[0.0; 2]; 2];
            for d in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[d] += h;
                pm[d] -= h;
                let (up, um) = (example1_exact(pp), example1_exact(pm));
                for c in 0..2 {
                    g[c][d] = (up[c] - um[c]) / (2.0 * h);
                }
            }
            g
        };
        let sigma = |p: Point| -> [[f64; 2]; 2] {
            let g = grad_u(p);
            let div = g[0][0] + g[1][1];
            let mu = mu_f.base.value(p);
            let lambda = lambda_f.base.value(p);
            let e12 = 0.5 * (g[0][1] + g[1][0]);
            [
                [lambda * div + 2.0 * mu * g[0][0], 2.0 * mu * e12],
                [2.0 * mu * e12, lambda * div + 2.0 * mu * g[1][1]],
            ]
        };
        let mut f = [0.0; 2];
        for d in 0..2 {
            let mut pp = x;
            let mut pm = x;
            pp[d] += h;
            pm[d] -= h;
            let (sp, sm) = (sigma(pp), sigma(pm));
            for c in 0..2 {
                f[c] -= (sp[c][d] - sm[c][d]) / (2.0 * h);
            }
        }
        f
    }

    /// Second-order differences with one Richardson step.
    fn fd_oracle(x: Point) -> [f64; 2] {
        let h = 2e-3;
        let coarse = fd_operator(x, h);
        let fine = fd_operator(x, h / 2.0);
        [0, 1].map(|c| (4.0 * fine[c] - coarse[c]) / 3.0)
    }

    fn close(a: [f64; 2], b: [f64; 2], rel: f64) -> bool {
        (0..2).all(|c| (a[c] - b[c]).abs() <= rel * b[c].abs().max(1.0))
    }

    #[test]
    fn exact_solution_vanishes_on_boundary() {
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            for x in [[t, 0.0], [t, 1.0], [0.0, t], [1.0, t]] {
                let u = example1_exact(x);
                assert!(u[0].abs() < 1e-14 && u[1].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn divergence_matches_differences() {
        let x = [0.25, 0.25];
        let h = 1e-5;
        let d1 = (example1_exact([x[0] + h, x[1]])[0] - example1_exact([x[0] - h, x[1]])[0]) / (2.0 * h);
        let d2 = (example1_exact([x[0], x[1] + h])[1] - example1_exact([x[0], x[1] - h])[1]) / (2.0 * h);
        assert!((example1_divergence(x) - (d1 + d2)).abs() < 1e-7);
        assert!((example1_divergence(x) + 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn forcing_matches_finite_differences() {
        assert!(close(example1_forcing([0.5, 0.5]), fd_oracle([0.5, 0.5]), 1e-6));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let (f, g) = (example1_forcing(x), fd_oracle(x));
            assert!(close(f, g, 1e-6), "x={x:?} analytic {f:?} fd {g:?}");
        }
    }
}
