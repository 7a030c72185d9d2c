//! Temperature-scaled cosine similarity between utterances and prototypes.
//!
//! `S[i, j] = softmax_j(cos(u_i, p_j) / τ)`. Row `i` is a distribution over
//! the prototypes.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

pub const DEFAULT_TAU: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub tau: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { tau: DEFAULT_TAU }
    }
}

/// Forward intermediates reused by the backward pass.
#[derive(Debug, Clone)]
pub struct SimCache {
    pub cosine: Matrix,
    pub utterance_norms: Vec<f64>,
    pub prototype_norms: Vec<f64>,
}

pub(crate) fn row_norms(m: &Matrix, name: &'static str) -> Result<Vec<f64>> {
    m.iter_rows()
        .enumerate()
        .map(|(row, r)| {
            let n = math::norm(r);
            if n < math::MIN_NORM || !n.is_finite() {
                Err(Error::DegenerateVector { matrix: name, row })
            } else {
                Ok(n)
            }
        })
        .collect()
}

/// Cosine matrix between the rows of `a` and `b`.
pub fn cosine_matrix(
    a: &Matrix,
    a_name: &'static str,
    b: &Matrix,
    b_name: &'static str,
) -> Result<Matrix> {
    Error::check_dim("cosine operand width", a.cols(), b.cols())?;
    let na = row_norms(a, a_name)?;
    let nb = row_norms(b, b_name)?;
    Ok(cosine_with_norms(a, &na, b, &nb))
}

fn cosine_with_norms(a: &Matrix, na: &[f64], b: &Matrix, nb: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            out[(i, j)] = math::dot(a.row(i), b.row(j)) / (na[i] * nb[j]);
        }
    }
    out
}

pub fn similarity_forward(
    utterances: &Matrix,
    prototypes: &Matrix,
    cfg: &SimConfig,
) -> Result<(Matrix, SimCache)> {
    if cfg.tau <= 0.0 || !cfg.tau.is_finite() {
        return Err(Error::argument("tau must be positive and finite"));
    }
    if prototypes.rows() == 0 {
        return Err(Error::argument("at least one prototype is required"));
    }
    Error::check_dim("prototype width", utterances.cols(), prototypes.cols())?;
    let un = row_norms(utterances, "utterances")?;
    let pn = row_norms(prototypes, "prototypes")?;
    let cosine = cosine_with_norms(utterances, &un, prototypes, &pn);
    let mut s = cosine.clone();
    for i in 0..s.rows() {
        let row = s.row_mut(i);
        for x in row.iter_mut() {
            *x /= cfg.tau;
        }
        math::softmax_in_place(row);
    }
    Ok((
        s,
        SimCache {
            cosine,
            utterance_norms: un,
            prototype_norms: pn,
        },
    ))
}

/// `S^see` for utterance representations against seen prototypes.
pub fn contrastive_similarity(
    utterances: &Matrix,
    prototypes: &Matrix,
    cfg: &SimConfig,
) -> Result<Matrix> {
    similarity_forward(utterances, prototypes, cfg).map(|(s, _)| s)
}

/// Converts a gradient with respect to `S` into one with respect to the
/// pre-softmax logits `cos / τ`.
pub fn softmax_logit_grad(s: &Matrix, grad_s: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(s.rows(), s.cols());
    for i in 0..s.rows() {
        let p = s.row(i);
        let g = grad_s.row(i);
        let inner = math::dot(p, g);
        for (o, (pj, gj)) in out.row_mut(i).iter_mut().zip(p.iter().zip(g)) {
            *o = pj * (gj - inner);
        }
    }
    out
}

/// Back-propagates a logit gradient through `cos / τ` into both inputs.
///
/// Returns `(d utterances, d prototypes)`.
pub fn similarity_backward_from_logits(
    utterances: &Matrix,
    prototypes: &Matrix,
    cache: &SimCache,
    grad_logits: &Matrix,
    cfg: &SimConfig,
) -> (Matrix, Matrix) {
    let (n, m, d) = (utterances.rows(), prototypes.rows(), utterances.cols());
    let mut gu = Matrix::zeros(n, d);
    let mut gp = Matrix::zeros(m, d);
    for i in 0..n {
        let ui = utterances.row(i);
        let nu = cache.utterance_norms[i];
        for j in 0..m {
            let g = grad_logits[(i, j)] / cfg.tau;
            if g == 0.0 {
                continue;
            }
            let pj = prototypes.row(j);
            let np = cache.prototype_norms[j];
            let c = cache.cosine[(i, j)];
            let inv = 1.0 / (nu * np);
            for k in 0..d {
                gu[(i, k)] += g * (pj[k] * inv - c * ui[k] / (nu * nu));
                gp[(j, k)] += g * (ui[k] * inv - c * pj[k] / (np * np));
            }
        }
    }
    (gu, gp)
}

/// Gradient of a scalar loss with respect to both embedding matrices, given
/// its gradient with respect to `S`.
pub fn similarity_backward(
    utterances: &Matrix,
    prototypes: &Matrix,
    s: &Matrix,
    cache: &SimCache,
    grad_s: &Matrix,
    cfg: &SimConfig,
) -> (Matrix, Matrix) {
    let grad_logits = softmax_logit_grad(s, grad_s);
    similarity_backward_from_logits(utterances, prototypes, cache, &grad_logits, cfg)
}
