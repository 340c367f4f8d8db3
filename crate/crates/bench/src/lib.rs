//! Operators used by the benchmarks.

use hypan_core::{OperatorSpec, RealPoly};

/// Roots `r_k(t) = (k - (m-1)/2)(1 + t²)`, strictly hyperbolic on `[0, 1]`.
pub fn spread_roots(m: usize) -> OperatorSpec {
    let roots: Vec<RealPoly> = (0..m)
        .map(|k| {
            let c = k as f64 - (m as f64 - 1.0) / 2.0;
            RealPoly::new(vec![c, 0.0, c])
        })
        .collect();
    OperatorSpec::from_roots_1d(&roots, (-1.0, 2.0), (0.0, 1.0)).expect("valid roots")
}

/// Roots `±t²` plus `m - 2` constant ones, with a zero of Δ at `t = 0`.
pub fn degenerate_roots(m: usize) -> OperatorSpec {
    let mut roots = vec![RealPoly::monomial(1.0, 2), RealPoly::monomial(-1.0, 2)];
    roots.extend((2..m).map(|k| RealPoly::constant(k as f64)));
    OperatorSpec::from_roots_1d(&roots, (-1.0, 2.0), (0.0, 1.0)).expect("valid roots")
}
