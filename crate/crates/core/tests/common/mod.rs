#![allow(dead_code)]

use hypan_core::{OperatorSpec, RealPoly};
use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> OperatorSpec {
    OperatorSpec::from_path(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Operator whose characteristic roots are `τ = r_k(t) ξ`.
pub fn from_roots(roots: &[Vec<f64>]) -> OperatorSpec {
    let polys: Vec<RealPoly> = roots.iter().map(|c| RealPoly::new(c.clone())).collect();
    OperatorSpec::from_roots_1d(&polys, (-1.0, 2.0), (0.0, 1.0)).unwrap()
}

pub fn eval_poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, x| acc * t + x)
}

pub fn eval_poly_derivative(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, x)| acc * t + k as f64 * x)
}

/// Rescaled roots `λ_k = r_k(t) ξ / <ξ>` and their time derivatives.
pub fn rescaled_roots(roots: &[Vec<f64>], t: f64, xi: f64) -> (Vec<f64>, Vec<f64>) {
    let s = xi / (1.0 + xi * xi).sqrt();
    (
        roots.iter().map(|c| eval_poly(c, t) * s).collect(),
        roots.iter().map(|c| eval_poly_derivative(c, t) * s).collect(),
    )
}

pub fn discriminant_product(l: &[f64]) -> f64 {
    let mut p = 1.0;
    for j in 0..l.len() {
        for k in 0..j {
            p *= (l[j] - l[k]) * (l[j] - l[k]);
        }
    }
    p
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
