//! Parameter-free Gaussian self-attention over the utterances of one
//! conversation.
//!
//! For utterance `i` the attention row is
//!
//! ```text
//! A_i = softmax(h_i · Hᵀ / d) ⊙ K_i,    K_i[k] = exp(-(k - i)² / (2σ²))
//! h_i' = h_i + A_i H
//! ```
//!
//! The kernel is applied after the softmax and is left unnormalized, so the
//! self-weight is always 1 and the kernel flattens to all-ones as σ grows.
//! The logits are divided by `d`, not `√d`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

pub const DEFAULT_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    /// Softmax attention damped by the Gaussian distance kernel.
    Gaussian,
    /// Softmax attention with an all-ones kernel.
    Plain,
    /// No attention; representations pass through unchanged.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsaConfig {
    pub sigma: f64,
    pub mode: AttentionMode,
}

impl Default for GsaConfig {
    fn default() -> Self {
        GsaConfig {
            sigma: DEFAULT_SIGMA,
            mode: AttentionMode::Gaussian,
        }
    }
}

impl GsaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return Err(Error::argument("sigma must be positive and finite"));
        }
        Ok(())
    }
}

/// Distance kernel centred on `center` (0-based) over `len` positions.
pub fn gaussian_kernel(center: usize, len: usize, sigma: f64) -> Result<Vec<f64>> {
    if center >= len {
        return Err(Error::argument("kernel centre out of range"));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::argument("sigma must be positive"));
    }
    let two_var = 2.0 * sigma * sigma;
    Ok((0..len)
        .map(|k| {
            let dist = k as f64 - center as f64;
            math::exp(-(dist * dist) / two_var)
        })
        .collect())
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GsaCache {
    /// Row-wise softmax of the scaled logits, before the kernel.
    pub softmax: Matrix,
    /// Kernel matrix; row `i` is `K_i`.
    pub kernel: Matrix,
}

impl GsaCache {
    /// Final attention weights `A = softmax ⊙ K`.
    pub fn attention(&self) -> Matrix {
        let mut a = self.softmax.clone();
        for (x, k) in a.as_mut_slice().iter_mut().zip(self.kernel.as_slice()) {
            *x *= k;
        }
        a
    }
}

fn kernel_matrix(n: usize, cfg: &GsaConfig) -> Result<Matrix> {
    let mut kernel = Matrix::filled(n, n, 1.0);
    if cfg.mode == AttentionMode::Gaussian {
        for i in 0..n {
            kernel
                .row_mut(i)
                .copy_from_slice(&gaussian_kernel(i, n, cfg.sigma)?);
        }
    }
    Ok(kernel)
}

/// Forward pass returning the updated representations and, unless attention
/// is disabled, the cache needed by [`gsa_backward`].
pub fn gsa_forward(h: &Matrix, cfg: &GsaConfig) -> Result<(Matrix, Option<GsaCache>)> {
    cfg.validate()?;
    if h.rows() == 0 || h.cols() == 0 {
        return Err(Error::argument("attention input must be non-empty"));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite {
            what: "attention input",
        });
    }
    if cfg.mode == AttentionMode::Disabled {
        return Ok((h.clone(), None));
    }
    let n = h.rows();
    let d = h.cols() as f64;
    let kernel = kernel_matrix(n, cfg)?;
    let mut softmax = Matrix::zeros(n, n);
    for i in 0..n {
        let row = softmax.row_mut(i);
        for (k, x) in row.iter_mut().enumerate() {
            *x = math::dot(h.row(i), h.row(k)) / d;
        }
        math::softmax_in_place(row);
    }
    let cache = GsaCache { softmax, kernel };
    let attn = cache.attention();
    let mut out = h.clone();
    for i in 0..n {
        for k in 0..n {
            let w = attn[(i, k)];
            for (o, x) in out.row_mut(i).iter_mut().zip(h.row(k)) {
                *o += w * x;
            }
        }
    }
    Ok((out, Some(cache)))
}

/// `H^utte` from `H`.
pub fn gsa_update(h: &Matrix, cfg: &GsaConfig) -> Result<Matrix> {
    gsa_forward(h, cfg).map(|(out, _)| out)
}

/// Gradient with respect to the input `h`, given the gradient of the output.
pub fn gsa_backward(h: &Matrix, cache: Option<&GsaCache>, grad_out: &Matrix) -> Matrix {
    let Some(cache) = cache else {
        return grad_out.clone();
    };
    let n = h.rows();
    let d = h.cols() as f64;
    let attn = cache.attention();
    // residual path
    let mut grad_h = grad_out.clone();
    // value path: out_i += Σ_k A_ik h_k
    for i in 0..n {
        for k in 0..n {
            let w = attn[(i, k)];
            for (g, go) in grad_h.row_mut(k).iter_mut().zip(grad_out.row(i)) {
                *g += w * go;
            }
        }
    }
    // weight path through the kernel product, softmax, and logits h_i·h_k / d
    let mut d_soft = Vec::with_capacity(n);
    for i in 0..n {
        d_soft.clear();
        for k in 0..n {
            d_soft.push(math::dot(grad_out.row(i), h.row(k)) * cache.kernel[(i, k)]);
        }
        let p = cache.softmax.row(i);
        let inner = math::dot(&d_soft, p);
        for k in 0..n {
            let d_logit = p[k] * (d_soft[k] - inner) / d;
            if d_logit == 0.0 {
                continue;
            }
            for c in 0..h.cols() {
                let hk = h[(k, c)];
                let hi = h[(i, c)];
                grad_h[(i, c)] += d_logit * hk;
                grad_h[(k, c)] += d_logit * hi;
            }
        }
    }
    grad_h
}
