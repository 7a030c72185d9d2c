use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Named `rows × dim` matrix of 32-bit floats with one key per row.
///
/// Rows are keyed by utterance id or emotion word. This is the unit the
/// tensor store persists; computation converts to [`Matrix`] first.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub name: String,
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f32>,
    pub row_keys: Vec<String>,
}

impl EmbeddingMatrix {
    pub fn new(
        name: impl Into<String>,
        rows: usize,
        dim: usize,
        data: Vec<f32>,
        row_keys: Vec<String>,
    ) -> Result<Self> {
        let m = EmbeddingMatrix {
            name: name.into(),
            rows,
            dim,
            data,
            row_keys,
        };
        m.validate()?;
        Ok(m)
    }

    /// Converts an `f64` matrix, rounding each entry to `f32`.
    pub fn from_matrix(name: impl Into<String>, m: &Matrix, row_keys: Vec<String>) -> Result<Self> {
        Self::new(
            name,
            m.rows(),
            m.cols(),
            m.as_slice().iter().map(|&x| x as f32).collect(),
            row_keys,
        )
    }

    pub fn validate(&self) -> Result<()> {
        Error::check_dim(
            "embedding data length",
            self.rows * self.dim,
            self.data.len(),
        )?;
        Error::check_dim("embedding row keys", self.rows, self.row_keys.len())?;
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn find_row(&self, key: &str) -> Option<usize> {
        self.row_keys.iter().position(|k| k == key)
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_f32(self.rows, self.dim, &self.data).expect("validated shape")
    }

    /// Gathers the rows named by `keys`, in that order.
    pub fn gather<S: AsRef<str>>(&self, keys: &[S]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(keys.len() * self.dim);
        for key in keys {
            let key = key.as_ref();
            let i = self.find_row(key).ok_or_else(|| {
                Error::argument(format!("no row '{key}' in tensor '{}'", self.name))
            })?;
            data.extend(self.row(i).iter().map(|&x| f64::from(x)));
        }
        Matrix::from_vec(keys.len(), self.dim, data)
    }

    /// Bitwise equality, treating NaN payloads as distinct values.
    pub fn bit_eq(&self, other: &EmbeddingMatrix) -> bool {
        self.name == other.name
            && self.rows == other.rows
            && self.dim == other.dim
            && self.row_keys == other.row_keys
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn keys(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn rejects_mismatched_keys() {
        assert!(EmbeddingMatrix::new("x", 2, 1, vec![1.0, 2.0], keys(1)).is_err());
    }

    #[test]
    fn gather_orders_rows_by_key() {
        let m = EmbeddingMatrix::new("x", 2, 2, vec![1.0, 2.0, 3.0, 4.0], keys(2)).unwrap();
        let g = m.gather(&["1", "0"]).unwrap();
        assert_eq!(g.as_slice(), &[3.0, 4.0, 1.0, 2.0]);
        assert!(m.gather(&["7"]).is_err());
    }

    #[test]
    fn bit_eq_distinguishes_nan_payloads() {
        let a =
            EmbeddingMatrix::new("x", 1, 1, vec![f32::from_bits(0x7fc0_0001)], keys(1)).unwrap();
        let b =
            EmbeddingMatrix::new("x", 1, 1, vec![f32::from_bits(0x7fc0_0002)], keys(1)).unwrap();
        assert!(a.bit_eq(&a.clone()));
        assert!(!a.bit_eq(&b));
    }
}
