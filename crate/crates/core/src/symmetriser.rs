//! The standard symmetriser of the companion matrix and the quantities built
//! from it: minors, `∂_t Q`, the Hamilton-Cayley coefficients of
//! `det(λQ - ∂_t Q)`, `Δ̃` and the check function `ψ`.
//!
//! `Q` is the Bezout matrix of `(p, p')` where
//! `p(λ) = λ^m - Σ_j a_j λ^{j-1}` is the characteristic polynomial of `A`.
//! Writing `Q = Σ_k w_k w_kᵀ` with `w_k` the coefficient vector of
//! `p(λ)/(λ - λ_k)` shows `QA = AᵀQ`, `Q ≥ 0` for real roots and
//! `det Q = Π_{k<j} (λ_j - λ_k)²`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::linalg;
use crate::operator::{build_frame, OperatorSpec, SymbolFrame};

#[derive(Debug, Clone, Serialize)]
pub struct Symmetriser {
    #[serde(serialize_with = "crate::report::ser_matrix")]
    pub q: DMatrix<f64>,
    #[serde(serialize_with = "crate::report::ser_matrix")]
    pub dq: DMatrix<f64>,
    /// `Δ_1, ..., Δ_m`, determinants of the trailing principal submatrices.
    pub minors: Vec<f64>,
    /// `Δ = Δ_m = det Q`.
    pub delta: f64,
    /// `∂_t Δ`.
    pub d_delta: f64,
    /// `Δ + (∂_t Δ)²/Δ`; `None` where `Δ ≤ 0`.
    pub delta_tilde: Option<f64>,
    pub psi: f64,
    /// `d_0, ..., d_m` with `det(λQ - ∂_t Q) = Σ d_h λ^{m-h}`.
    pub hc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonCayley {
    pub d: Vec<f64>,
    pub psi: f64,
}

fn padded_char_poly(row: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = row.iter().map(|&x| -x).collect();
    c.push(1.0);
    c
}

fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, &x)| k as f64 * x).collect();
    d.push(0.0);
    d
}

/// `Q` from the last row of `A`.
pub fn symmetriser_matrix(row: &[f64]) -> DMatrix<f64> {
    let m = row.len();
    let p = padded_char_poly(row);
    linalg::bezout(&p, &derivative_coeffs(&p), m)
}

/// `∂_t Q` from the last row of `A` and its derivative. The Bezout form is
/// bilinear, so `∂_t Bez(p, p') = Bez(ṗ, p') + Bez(p, ṗ')` exactly.
pub fn symmetriser_derivative(row: &[f64], d_row: &[f64]) -> DMatrix<f64> {
    let m = row.len();
    let p = padded_char_poly(row);
    let mut dp: Vec<f64> = d_row.iter().map(|&x| -x).collect();
    dp.push(0.0);
    linalg::bezout(&dp, &derivative_coeffs(&p), m) + linalg::bezout(&p, &derivative_coeffs(&dp), m)
}

pub fn trailing_minors(q: &DMatrix<f64>) -> Vec<f64> {
    (1..=q.nrows()).map(|j| linalg::det(&linalg::trailing(q, j))).collect()
}

/// The interior coefficients come from the sampled pencil; the two at either
/// end have direct determinant formulas, which stay accurate when `Q` is
/// nearly singular and `d_0` is tiny next to the samples.
pub fn hamilton_cayley(q: &DMatrix<f64>, dq: &DMatrix<f64>) -> HamiltonCayley {
    let m = q.nrows();
    let e = linalg::pencil_coefficients(q, dq);
    let mut d: Vec<f64> = (0..=m).map(|h| e[m - h]).collect();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    d[m] = sign * linalg::det(dq);
    d[m - 1] = -sign * linalg::det_derivative(dq, q);
    d[1] = -linalg::det_derivative(q, dq);
    d[0] = linalg::det(q);
    let psi = if m >= 2 { d[2] } else { 0.0 };
    HamiltonCayley { d, psi }
}

/// `d_2 = ½ tr(∂_t Q ∂_t(Q^co))`, independent of the pencil expansion.
pub fn d2_trace(q: &DMatrix<f64>, dq: &DMatrix<f64>) -> f64 {
    if q.nrows() < 2 {
        return 0.0;
    }
    0.5 * (dq * linalg::cofactor_derivative(q, dq)).trace()
}

/// `Σ μ_i²` over the roots of `det(λQ - ∂_t Q)`, from the generalized
/// eigenvalues. `None` unless `Q` is positive definite.
pub fn pencil_power_sum(q: &DMatrix<f64>, dq: &DMatrix<f64>) -> Option<f64> {
    let h = dq.map(|x| num_complex::Complex64::new(x, 0.0));
    linalg::pencil_eigenvalues(q, &h).map(|mu| mu.iter().map(|x| x * x).sum())
}

pub fn delta_tilde_value(delta: f64, d_delta: f64) -> Option<f64> {
    (delta > 0.0).then(|| delta + d_delta * d_delta / delta)
}

pub fn build_symmetriser(frame: &SymbolFrame) -> Symmetriser {
    let q = symmetriser_matrix(&frame.a);
    let dq = symmetriser_derivative(&frame.a, &frame.da);
    from_matrices(q, dq)
}

pub fn from_matrices(q: DMatrix<f64>, dq: DMatrix<f64>) -> Symmetriser {
    let minors = trailing_minors(&q);
    let delta = minors[minors.len() - 1];
    let d_delta = linalg::det_derivative(&q, &dq);
    let hc = hamilton_cayley(&q, &dq);
    Symmetriser {
        delta_tilde: delta_tilde_value(delta, d_delta),
        psi: hc.psi,
        hc: hc.d,
        minors,
        delta,
        d_delta,
        q,
        dq,
    }
}

/// `Δ(t, ξ)` and `∂_t Δ(t, ξ)` without the rest of the symmetriser data.
pub fn discriminant(row: &[f64], d_row: &[f64]) -> (f64, f64) {
    let q = symmetriser_matrix(row);
    let dq = symmetriser_derivative(row, d_row);
    (linalg::det(&q), linalg::det_derivative(&q, &dq))
}

pub fn symmetriser_at(spec: &OperatorSpec, t: f64, xi: &[f64]) -> Result<Symmetriser> {
    Ok(build_symmetriser(&build_frame(spec, t, xi)?))
}

pub fn differentiate_symmetriser(spec: &OperatorSpec, t: f64, xi: &[f64]) -> Result<DMatrix<f64>> {
    let f = build_frame(spec, t, xi)?;
    Ok(symmetriser_derivative(&f.a, &f.da))
}

pub fn delta_tilde(spec: &OperatorSpec, t: f64, xi: &[f64]) -> Result<Option<f64>> {
    let f = build_frame(spec, t, xi)?;
    let (d, dd) = discriminant(&f.a, &f.da);
    Ok(delta_tilde_value(d, dd))
}
