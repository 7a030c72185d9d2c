//! Shared affine map `h ↦ W h + b` applied to utterance embeddings before
//! attention and to prototype embeddings before similarity.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Half-width of the noise added to the identity at initialization.
pub const INIT_NOISE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub enabled: bool,
}

impl AdapterParams {
    pub fn identity(dim: usize) -> Self {
        AdapterParams {
            weight: Matrix::identity(dim),
            bias: vec![0.0; dim],
            enabled: true,
        }
    }

    pub fn disabled(dim: usize) -> Self {
        AdapterParams {
            enabled: false,
            ..Self::identity(dim)
        }
    }

    /// `W = I + U(-0.01, 0.01)`, `b = 0`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut p = Self::identity(dim);
        for w in p.weight.as_mut_slice() {
            *w += rng.gen_range(-INIT_NOISE..INIT_NOISE);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weight.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }

    /// Maps every row of `h`. Identity when disabled.
    pub fn apply(&self, h: &Matrix) -> Result<Matrix> {
        if !self.enabled {
            return Ok(h.clone());
        }
        let d = self.dim();
        Error::check_dim("adapter input width", d, h.cols())?;
        let mut out = Matrix::zeros(h.rows(), d);
        for i in 0..h.rows() {
            let x = h.row(i);
            for (a, o) in out.row_mut(i).iter_mut().enumerate() {
                *o = crate::math::dot(self.weight.row(a), x) + self.bias[a];
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients for `out = apply(h)`.
    pub fn accumulate_grad(
        &self,
        h: &Matrix,
        grad_out: &Matrix,
        grad_w: &mut Matrix,
        grad_b: &mut [f64],
    ) {
        if !self.enabled {
            return;
        }
        for i in 0..h.rows() {
            let x = h.row(i);
            for (a, &g) in grad_out.row(i).iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grad_b[a] += g;
                for (gw, xb) in grad_w.row_mut(a).iter_mut().zip(x) {
                    *gw += g * xb;
                }
            }
        }
    }
}
