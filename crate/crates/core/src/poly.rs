//! Dense univariate polynomials in `t`, stored lowest power first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealPoly(pub Vec<f64>);

impl RealPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        RealPoly(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        RealPoly(vec![c])
    }

    /// The monomial `c t^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        RealPoly(v)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.0.iter().rev() {
            dp = dp * t + p;
            p = p * t + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> RealPoly {
        if self.0.len() <= 1 {
            return RealPoly(vec![0.0]);
        }
        RealPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().skip(1).all(|&c| c == 0.0)
    }

    pub fn mul(&self, other: &RealPoly) -> RealPoly {
        if self.0.is_empty() || other.0.is_empty() {
            return RealPoly(vec![0.0]);
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RealPoly(out)
    }

    pub fn add(&self, other: &RealPoly) -> RealPoly {
        let len = self.0.len().max(other.0.len());
        RealPoly(
            (0..len)
                .map(|k| self.0.get(k).copied().unwrap_or(0.0) + other.0.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> RealPoly {
        RealPoly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn to_complex(&self) -> ComplexPoly {
        ComplexPoly(self.0.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexPoly(pub Vec<Complex64>);

impl ComplexPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        ComplexPoly(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.0
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c)
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|c| c.im == 0.0)
    }

    pub fn scale(&self, s: Complex64) -> ComplexPoly {
        ComplexPoly(self.0.iter().map(|c| c * s).collect())
    }
}
