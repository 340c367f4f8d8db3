//! Small dense helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Bezout matrix of `(f, g)`, both given lowest power first and padded to
/// length `m + 1`: `(f(x)g(y) - f(y)g(x))/(x - y) = Σ B[i][j] x^i y^j`.
pub fn bezout(f: &[f64], g: &[f64], m: usize) -> DMatrix<f64> {
    let coef = |p: &[f64], k: usize| p.get(k).copied().unwrap_or(0.0);
    let mut b = DMatrix::zeros(m, m);
    for a in 1..=m {
        for c in 0..a {
            let w = coef(f, a) * coef(g, c) - coef(f, c) * coef(g, a);
            if w == 0.0 {
                continue;
            }
            for s in 0..a - c {
                b[(a - 1 - s, c + s)] += w;
            }
        }
    }
    b
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().lu().determinant(),
    }
}

pub fn det_complex(m: &DMatrix<Complex64>) -> Complex64 {
    match m.nrows() {
        0 => Complex64::new(1.0, 0.0),
        1 => m[(0, 0)],
        _ => m.clone().lu().determinant(),
    }
}

/// Directional derivative of `det` at `q` along `dq`: replace one row at a
/// time by the corresponding row of `dq` and sum.
pub fn det_derivative(q: &DMatrix<f64>, dq: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    let mut work = q.clone();
    let mut sum = 0.0;
    for k in 0..n {
        work.set_row(k, &dq.row(k));
        sum += det(&work);
        work.set_row(k, &q.row(k));
    }
    sum
}

/// Trailing principal submatrix of size `j`.
pub fn trailing(q: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    let m = q.nrows();
    q.view((m - j, m - j), (j, j)).into_owned()
}

fn without(q: &DMatrix<f64>, i: usize, j: usize) -> DMatrix<f64> {
    q.clone().remove_row(i).remove_column(j)
}

/// Cofactor matrix `(-1)^{i+j} det(q without row i, column j)`.
pub fn cofactor(q: &DMatrix<f64>) -> DMatrix<f64> {
    let m = q.nrows();
    if m == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    DMatrix::from_fn(m, m, |i, j| sign(i + j) * det(&without(q, i, j)))
}

/// Time derivative of the cofactor matrix given `q` and `∂_t q`, obtained by
/// differentiating every `(m-1)`-minor.
pub fn cofactor_derivative(q: &DMatrix<f64>, dq: &DMatrix<f64>) -> DMatrix<f64> {
    let m = q.nrows();
    if m == 1 {
        return DMatrix::zeros(1, 1);
    }
    DMatrix::from_fn(m, m, |i, j| {
        sign(i + j) * det_derivative(&without(q, i, j), &without(dq, i, j))
    })
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Coefficients `e_p` (lowest power first, length `m + 1`) of the polynomial
/// `z ↦ det(z q - dq)`. Sampled on a circle of radius `ρ` at the roots of
/// unity and recovered by an inverse discrete Fourier transform, which is the
/// perfectly conditioned instance of the Vandermonde interpolation problem.
pub fn pencil_coefficients(q: &DMatrix<f64>, dq: &DMatrix<f64>) -> Vec<f64> {
    let m = q.nrows();
    let mut out = vec![0.0; m + 1];
    let dq_norm = dq.norm();
    if dq_norm == 0.0 {
        out[m] = det(q);
        return out;
    }
    let q_norm = q.norm();
    let rho = if q_norm > 0.0 { dq_norm / q_norm } else { 1.0 };
    let nodes = m + 1;
    let qc = q.map(|x| Complex64::new(x, 0.0));
    let dqc = dq.map(|x| Complex64::new(x, 0.0));
    let values: Vec<Complex64> = (0..nodes)
        .map(|k| {
            let z = Complex64::from_polar(rho, std::f64::consts::TAU * k as f64 / nodes as f64);
            det_complex(&(&qc * z - &dqc))
        })
        .collect();
    for (p, e) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in values.iter().enumerate() {
            let angle = -std::f64::consts::TAU * (k * p) as f64 / nodes as f64;
            acc += v * Complex64::from_polar(1.0, angle);
        }
        *e = acc.re / nodes as f64 / rho.powi(p as i32);
    }
    out
}

/// Eigenvalues of the Hermitian pencil `h v = μ q v` for positive definite
/// real `q`, ascending. `None` when the Cholesky factorisation fails.
pub fn pencil_eigenvalues(q: &DMatrix<f64>, h: &DMatrix<Complex64>) -> Option<Vec<f64>> {
    let l = Cholesky::new(q.clone())?.l();
    let l_inv = l.try_inverse()?.map(|x| Complex64::new(x, 0.0));
    let mut reduced = &l_inv * h * l_inv.adjoint();
    // Symmetrise away rounding before the Hermitian eigensolver.
    reduced = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
    let mut eig: Vec<f64> = SymmetricEigen::new(reduced).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Some(eig)
}

pub fn symmetric_eigenvalues(q: &DMatrix<f64>) -> Vec<f64> {
    let mut eig: Vec<f64> = SymmetricEigen::new(q.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn spectral_norm_complex(m: &DMatrix<Complex64>) -> f64 {
    if m.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bezout_of_quadratic_and_derivative() {
        // p = (λ-1)(λ-3) = 3 - 4λ + λ², p' = -4 + 2λ.
        let b = bezout(&[3.0, -4.0, 1.0], &[-4.0, 2.0, 0.0], 2);
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[10.0, -4.0, -4.0, 2.0]));
    }

    #[test]
    fn det_derivative_matches_difference_quotient() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 3.0, -0.2, 0.1, -0.2, 1.5]);
        let dq = DMatrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, 0.1, -0.4, 0.2, 0.0, 0.2, 0.7]);
        let h = 1e-6;
        let fd = (det(&(&q + &dq * h)) - det(&(&q - &dq * h))) / (2.0 * h);
        assert_relative_eq!(det_derivative(&q, &dq), fd, max_relative = 1e-8);
        let fd_co = (cofactor(&(&q + &dq * h)) - cofactor(&(&q - &dq * h))) / (2.0 * h);
        assert!((cofactor_derivative(&q, &dq) - fd_co).amax() < 1e-7);
    }

    #[test]
    fn pencil_coefficients_of_diagonal_pencil() {
        // det(z diag(1,2) - diag(3,5)) = 2z² - 11z + 15.
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let dq = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 5.0]));
        let c = pencil_coefficients(&q, &dq);
        assert_relative_eq!(c[0], 15.0, epsilon = 1e-12);
        assert_relative_eq!(c[1], -11.0, epsilon = 1e-12);
        assert_relative_eq!(c[2], 2.0, epsilon = 1e-12);
        let mu = pencil_eigenvalues(&q, &dq.map(|x| Complex64::new(x, 0.0))).unwrap();
        assert_relative_eq!(mu[0], 2.5, epsilon = 1e-12);
        assert_relative_eq!(mu[1], 3.0, epsilon = 1e-12);
    }
}
