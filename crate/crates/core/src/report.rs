//! Serialization helpers shared by the report types.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::{SerializeSeq, Serializer};

/// Dense matrix as a list of rows.
pub fn ser_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// Complex matrix as a list of rows of `[re, im]` pairs.
pub fn ser_complex_matrix<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<[f64; 2]> = m.row(i).iter().map(|z| [z.re, z.im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}
