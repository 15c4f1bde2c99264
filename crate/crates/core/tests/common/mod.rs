//! Reference computations shared by the integration tests. Nothing here
//! calls into the crate under test.

#![allow(dead_code)]

use std::path::PathBuf;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Composite Gauss-Legendre over `[lo, hi]` with panels of width at most `h`.
pub fn composite(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
    let rule = gauss_legendre(12);
    let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        total += rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half;
    }
    total
}

pub const ABEL_EPSILONS: [f64; 3] = [0.1, 0.05, 0.025];

/// `∫_a^X f(x) e^(-εx) dx` with the cutoff `X` placed where the damping
/// factor has fallen below 1e-16 relative to its value at `a`.
pub fn abel_damped(f: &dyn Fn(f64) -> f64, a: f64, eps: f64) -> f64 {
    let cutoff = a + 37.0 / eps;
    composite(&|x| f(x) * (-eps * x).exp(), a, cutoff, 0.25)
}

/// Abel regularized value of `∫_a^∞ f`: the damped integrals at the three
/// epsilons, extrapolated to ε = 0 by the quadratic through them.
pub fn abel_oracle(f: &dyn Fn(f64) -> f64, a: f64) -> f64 {
    let values: Vec<f64> = ABEL_EPSILONS.iter().map(|&e| abel_damped(f, a, e)).collect();
    extrapolate_to_zero(&ABEL_EPSILONS, &values)
}

/// Lagrange interpolation through `(xs[i], ys[i])` evaluated at 0.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut weight = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                weight *= xj / (xj - xi);
            }
        }
        total += weight * yi;
    }
    total
}

/// Fourth-order central difference of `f` at `x`.
pub fn central_difference(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1.0);
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

pub fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join("zvar_corpus.jsonl")
}
