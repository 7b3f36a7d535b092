//! Dense complex matrix helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖m − I‖_F
pub fn distance_from_identity(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            acc += (m[(i, j)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Standard symplectic form `((0, I), (−I, 0))` of even size `n`.
pub fn symplectic_form(n: usize) -> CMatrix {
    let half = n / 2;
    let mut j = CMatrix::zeros(n, n);
    for k in 0..half {
        j[(k, half + k)] = Complex64::new(1.0, 0.0);
        j[(half + k, k)] = Complex64::new(-1.0, 0.0);
    }
    j
}

/// Row-major slice to matrix.
pub fn from_row_major(n: usize, data: &[Complex64]) -> CMatrix {
    CMatrix::from_row_slice(n, n, data)
}

/// Matrix to nested rows.
pub fn to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<Complex64>]) -> Option<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return None;
    }
    let flat: Vec<Complex64> = rows.iter().flatten().copied().collect();
    Some(CMatrix::from_row_slice(n, n, &flat))
}

/// `‖Tᵀ·J·T − J‖_F` for even-sized `t`.
pub fn symplectic_residual(t: &CMatrix) -> f64 {
    let j = symplectic_form(t.nrows());
    frobenius(&(t.transpose() * &j * t - j))
}

/// Serde adapter: a square matrix as nested rows of `[re, im]` pairs.
pub mod serde_rows {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{from_rows, to_rows, CMatrix};
    use num_complex::Complex64;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(d)?;
        from_rows(&rows).ok_or_else(|| D::Error::custom("matrix rows must form a square array"))
    }
}

/// As [`serde_rows`] for an optional matrix.
pub mod serde_rows_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::CMatrix;

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::serde_rows::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMatrix>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::serde_rows")] CMatrix);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symplectic_form_squares_to_minus_identity() {
        let j = symplectic_form(4);
        let jj = &j * &j;
        assert!(distance_from_identity(&(-jj)) < 1e-15);
        assert!((frobenius(&j) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rows_round_trip() {
        let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!(from_rows(&to_rows(&m)).unwrap(), m);
        assert!(from_rows(&[vec![Complex64::new(1.0, 0.0)], vec![]]).is_none());
    }
}
