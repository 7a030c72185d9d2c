//! Attention Viterbi decoding.
//!
//! Runs the max-product recursion over seen labels, turns the per-position
//! max-scores into transfer probabilities relative to the previous step of
//! the best path, mixes the seen prototypes into each utterance with those
//! weights, and labels every utterance with its nearest unseen prototype.
//!
//! Recursion (0-based positions):
//!
//! ```text
//! c[0, j] = T[start, j] + S[0, j]
//! c[i, j] = max_k (c[i-1, k] + T[k, j]) + S[i, j]
//! ```
//!
//! The end transition takes part in choosing the best path but not in `c`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::crf::{check_emissions, TransitionModel};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::similarity::cosine_matrix;

/// Max-score table with backpointers.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiTable {
    pub scores: Matrix,
    /// `backpointers[i][j]`: best previous label for label `j` at position
    /// `i`. Row 0 is unused and left at zero.
    pub backpointers: Vec<Vec<usize>>,
}

pub fn viterbi_scores(s: &Matrix, tm: &TransitionModel) -> Result<ViterbiTable> {
    check_emissions(s, tm)?;
    let (len, n) = (s.rows(), tm.num_labels());
    let mut c = Matrix::zeros(len, n);
    let mut bp = vec![vec![0usize; n]; len];
    for j in 0..n {
        c[(0, j)] = tm.start(j) + s[(0, j)];
    }
    for i in 1..len {
        for j in 0..n {
            let mut best_k = 0;
            let mut best = f64::NEG_INFINITY;
            for k in 0..n {
                let v = c[(i - 1, k)] + tm.trans(k, j);
                if v > best {
                    best = v;
                    best_k = k;
                }
            }
            c[(i, j)] = best + s[(i, j)];
            bp[i][j] = best_k;
        }
    }
    Ok(ViterbiTable {
        scores: c,
        backpointers: bp,
    })
}

/// Highest-scoring labelling, recovered through the backpointers.
pub fn best_path(table: &ViterbiTable, tm: &TransitionModel) -> Vec<usize> {
    let c = &table.scores;
    let len = c.rows();
    let finals: Vec<f64> = (0..tm.num_labels())
        .map(|j| c[(len - 1, j)] + tm.end(j))
        .collect();
    let mut path = vec![0usize; len];
    path[len - 1] = math::argmax(&finals).unwrap_or(0);
    for i in (1..len).rev() {
        path[i - 1] = table.backpointers[i][path[i]];
    }
    path
}

/// How transfer-probability rows treat scores below the baseline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    /// Plain ratio of baseline-shifted scores; entries may be negative.
    #[default]
    Raw,
    /// Negative shifted scores are clamped to zero before normalizing.
    Clamped,
}

/// Denominators with magnitude below this are treated as zero.
pub const MIN_DENOMINATOR: f64 = 1e-12;

/// `P[i, j] = (c[i, j] - b_i) / Σ_k (c[i, k] - b_i)` with `b_0 = 0` and
/// `b_i = c[i-1, y*_{i-1}]`.
pub fn transfer_probabilities(c: &Matrix, path: &[usize], mode: TransferMode) -> Result<Matrix> {
    Error::check_dim("best path length", c.rows(), path.len())?;
    let mut p = Matrix::zeros(c.rows(), c.cols());
    for i in 0..c.rows() {
        let baseline = if i == 0 { 0.0 } else { c[(i - 1, path[i - 1])] };
        let row = p.row_mut(i);
        for (dst, &score) in row.iter_mut().zip(c.row(i)) {
            let shifted = score - baseline;
            *dst = match mode {
                TransferMode::Raw => shifted,
                TransferMode::Clamped => shifted.max(0.0),
            };
        }
        let denom: f64 = row.iter().sum();
        if denom.abs() < MIN_DENOMINATOR || !denom.is_finite() {
            return Err(Error::DegenerateRow { row: i });
        }
        for x in row.iter_mut() {
            *x /= denom;
        }
    }
    Ok(p)
}

/// Enhanced representations and nearest-unseen-prototype predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct Enhanced {
    pub h_prime: Matrix,
    pub cosines: Matrix,
    pub predictions: Vec<usize>,
}

/// `h'_i = h_i + Σ_j P[i, j] p_j`, then nearest unseen prototype by cosine.
pub fn enhance_and_predict(
    utterances: &Matrix,
    p: &Matrix,
    seen: &Matrix,
    unseen: &Matrix,
) -> Result<Enhanced> {
    Error::check_dim("transfer rows", utterances.rows(), p.rows())?;
    Error::check_dim("transfer cols", seen.rows(), p.cols())?;
    Error::check_dim("seen prototype width", utterances.cols(), seen.cols())?;
    let mut h_prime = utterances.clone();
    for i in 0..h_prime.rows() {
        for j in 0..seen.rows() {
            let w = p[(i, j)];
            for (h, s) in h_prime.row_mut(i).iter_mut().zip(seen.row(j)) {
                *h += w * s;
            }
        }
    }
    let (cosines, predictions) = nearest_prototypes(&h_prime, "enhanced utterances", unseen)?;
    Ok(Enhanced {
        h_prime,
        cosines,
        predictions,
    })
}

/// Cosine nearest neighbour of every row among the `unseen` prototypes;
/// lowest index wins ties.
pub fn nearest_prototypes(
    queries: &Matrix,
    query_name: &'static str,
    unseen: &Matrix,
) -> Result<(Matrix, Vec<usize>)> {
    if unseen.rows() == 0 {
        return Err(Error::argument("at least one unseen prototype is required"));
    }
    let cos = cosine_matrix(queries, query_name, unseen, "unseen prototypes")?;
    let preds = cos
        .iter_rows()
        .map(|r| math::argmax(r).unwrap_or(0))
        .collect();
    Ok((cos, preds))
}

/// Everything produced by decoding one conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Max-score table `c` (`N × n`).
    pub scores: Matrix,
    pub best_path: Vec<usize>,
    /// Transfer probabilities (`N × n`).
    pub transfer: Matrix,
    pub h_prime: Matrix,
    /// Cosine of each `h'_i` to each unseen prototype (`N × m`).
    pub unseen_cosines: Matrix,
    pub unseen_pred: Vec<usize>,
}

/// Full decode from emissions and utterance representations.
pub fn decode(
    s: &Matrix,
    tm: &TransitionModel,
    utterances: &Matrix,
    seen: &Matrix,
    unseen: &Matrix,
    mode: TransferMode,
) -> Result<DecodeResult> {
    let table = viterbi_scores(s, tm)?;
    let path = best_path(&table, tm);
    let transfer = transfer_probabilities(&table.scores, &path, mode)?;
    let enhanced = enhance_and_predict(utterances, &transfer, seen, unseen)?;
    Ok(DecodeResult {
        scores: table.scores,
        best_path: path,
        transfer,
        h_prime: enhanced.h_prime,
        unseen_cosines: enhanced.cosines,
        unseen_pred: enhanced.predictions,
    })
}
