//! Linear-chain CRF over seen emotions.
//!
//! Emission scores come from the similarity matrix `S` (`N × n`). The
//! transition matrix is square over the states `{start, 1..=n, end}`, so the
//! final label-to-end move has its own column. Label ids in this module are
//! 0-based; label `j` is state `j + 1`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Stored in masked transition cells. Masked cells are never read by the
/// dynamic programs, so this only keeps serialized checkpoints finite.
pub const MASKED: f64 = -1e9;

/// Half-width of the uniform initialization range for legal transitions.
pub const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    n: usize,
    scores: Matrix,
}

impl TransitionModel {
    /// All legal transitions zero.
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("transition model needs at least one label"));
        }
        let size = n + 2;
        let mut scores = Matrix::zeros(size, size);
        for a in 0..size {
            for b in 0..size {
                if Self::masked_cell(n, a, b) {
                    scores[(a, b)] = MASKED;
                }
            }
        }
        Ok(TransitionModel { n, scores })
    }

    /// Legal transitions drawn uniformly from `[-0.1, 0.1)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut tm = Self::zeros(n)?;
        let size = n + 2;
        for a in 0..size {
            for b in 0..size {
                if !tm.is_masked(a, b) {
                    tm.scores[(a, b)] = rng.gen_range(-INIT_RANGE..INIT_RANGE);
                }
            }
        }
        Ok(tm)
    }

    /// Builds a model from a full `(n+2) × (n+2)` state matrix. Masked cells
    /// are overwritten with [`MASKED`].
    pub fn from_scores(scores: Matrix) -> Result<Self> {
        if scores.rows() < 3 || scores.rows() != scores.cols() {
            return Err(Error::argument(
                "transition matrix must be square with at least 3 states",
            ));
        }
        let n = scores.rows() - 2;
        let mut tm = TransitionModel { n, scores };
        for a in 0..n + 2 {
            for b in 0..n + 2 {
                if tm.is_masked(a, b) {
                    tm.scores[(a, b)] = MASKED;
                } else if !tm.scores[(a, b)].is_finite() {
                    return Err(Error::NonFinite {
                        what: "transition scores",
                    });
                }
            }
        }
        Ok(tm)
    }

    /// Builds a model from label-to-label scores plus start and end vectors.
    pub fn from_parts(start: &[f64], trans: &Matrix, end: &[f64]) -> Result<Self> {
        let n = start.len();
        Error::check_dim("transition rows", n, trans.rows())?;
        Error::check_dim("transition cols", n, trans.cols())?;
        Error::check_dim("end transitions", n, end.len())?;
        let mut tm = Self::zeros(n)?;
        for j in 0..n {
            tm.scores[(0, j + 1)] = start[j];
            tm.scores[(j + 1, n + 1)] = end[j];
            for k in 0..n {
                tm.scores[(j + 1, k + 1)] = trans[(j, k)];
            }
        }
        Self::from_scores(tm.scores)
    }

    fn masked_cell(n: usize, from: usize, to: usize) -> bool {
        to == 0 || from == n + 1 || (from == 0 && to == n + 1)
    }

    pub fn num_labels(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.n + 2
    }

    pub fn start_state(&self) -> usize {
        0
    }

    pub fn end_state(&self) -> usize {
        self.n + 1
    }

    /// Whether the state transition `from → to` is illegal.
    pub fn is_masked(&self, from: usize, to: usize) -> bool {
        Self::masked_cell(self.n, from, to)
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    /// Mutable access for optimizers. Callers must leave masked cells alone.
    pub fn scores_mut(&mut self) -> &mut Matrix {
        &mut self.scores
    }

    /// Start → label `j`.
    #[inline]
    pub fn start(&self, j: usize) -> f64 {
        self.scores[(0, j + 1)]
    }

    /// Label `j` → end.
    #[inline]
    pub fn end(&self, j: usize) -> f64 {
        self.scores[(j + 1, self.n + 1)]
    }

    /// Label `from` → label `to`.
    #[inline]
    pub fn trans(&self, from: usize, to: usize) -> f64 {
        self.scores[(from + 1, to + 1)]
    }

    /// Mask as a flat row-major boolean vector over states.
    pub fn mask(&self) -> Vec<bool> {
        let size = self.num_states();
        (0..size * size)
            .map(|idx| self.is_masked(idx / size, idx % size))
            .collect()
    }
}

pub(crate) fn check_emissions(s: &Matrix, tm: &TransitionModel) -> Result<()> {
    if s.rows() == 0 {
        return Err(Error::argument(
            "emission matrix must have at least one row",
        ));
    }
    Error::check_dim("emission columns", tm.num_labels(), s.cols())?;
    if !s.is_finite() {
        return Err(Error::NonFinite {
            what: "emission scores",
        });
    }
    Ok(())
}

fn check_labels(s: &Matrix, tm: &TransitionModel, y: &[usize]) -> Result<()> {
    Error::check_dim("label sequence length", s.rows(), y.len())?;
    if let Some(&bad) = y.iter().find(|&&l| l >= tm.num_labels()) {
        return Err(Error::argument(alloc::format!(
            "label {bad} is not an emittable label (n = {})",
            tm.num_labels()
        )));
    }
    Ok(())
}

/// Log-space score of the labelling `y`.
pub fn sequence_score(s: &Matrix, tm: &TransitionModel, y: &[usize]) -> Result<f64> {
    check_emissions(s, tm)?;
    check_labels(s, tm, y)?;
    // Same accumulation order as the forward recursion, so n = 1 gives an exact zero loss.
    let mut score = tm.start(y[0]) + s[(0, y[0])];
    for k in 1..y.len() {
        score = score + tm.trans(y[k - 1], y[k]) + s[(k, y[k])];
    }
    Ok(score + tm.end(y[y.len() - 1]))
}

/// Forward log-messages: `alpha[i][j]` is the log-sum of scores of all
/// prefixes ending in label `j` at position `i`, emissions included.
fn forward(s: &Matrix, tm: &TransitionModel) -> Matrix {
    let (len, n) = (s.rows(), tm.num_labels());
    let mut alpha = Matrix::zeros(len, n);
    for j in 0..n {
        alpha[(0, j)] = tm.start(j) + s[(0, j)];
    }
    let mut terms = vec![0.0; n];
    for i in 1..len {
        for j in 0..n {
            for k in 0..n {
                terms[k] = alpha[(i - 1, k)] + tm.trans(k, j);
            }
            alpha[(i, j)] = math::log_sum_exp(&terms) + s[(i, j)];
        }
    }
    alpha
}

/// Backward log-messages: `beta[i][j]` is the log-sum of scores of all
/// suffixes after position `i` given label `j` there, end move included.
fn backward(s: &Matrix, tm: &TransitionModel) -> Matrix {
    let (len, n) = (s.rows(), tm.num_labels());
    let mut beta = Matrix::zeros(len, n);
    for j in 0..n {
        beta[(len - 1, j)] = tm.end(j);
    }
    let mut terms = vec![0.0; n];
    for i in (0..len - 1).rev() {
        for j in 0..n {
            for k in 0..n {
                terms[k] = tm.trans(j, k) + s[(i + 1, k)] + beta[(i + 1, k)];
            }
            beta[(i, j)] = math::log_sum_exp(&terms);
        }
    }
    beta
}

fn log_partition_from_alpha(alpha: &Matrix, tm: &TransitionModel) -> f64 {
    let last = alpha.rows() - 1;
    let terms: Vec<f64> = (0..tm.num_labels())
        .map(|j| alpha[(last, j)] + tm.end(j))
        .collect();
    math::log_sum_exp(&terms)
}

/// `log Σ_y exp(score(y))` over all `n^N` labellings.
pub fn log_partition(s: &Matrix, tm: &TransitionModel) -> Result<f64> {
    check_emissions(s, tm)?;
    Ok(log_partition_from_alpha(&forward(s, tm), tm))
}

/// Negative log-likelihood of `gold`. Never negative.
pub fn nll_loss(s: &Matrix, tm: &TransitionModel, gold: &[usize]) -> Result<f64> {
    let score = sequence_score(s, tm, gold)?;
    let log_z = log_partition(s, tm)?;
    Ok((log_z - score).max(0.0))
}

/// Posterior quantities from one forward–backward sweep.
#[derive(Debug, Clone)]
pub struct Posteriors {
    pub log_partition: f64,
    /// `unary[(i, j)] = P(y_i = j)`.
    pub unary: Matrix,
    /// Expected count of each state transition, `(n+2) × (n+2)`.
    pub transition_counts: Matrix,
}

pub fn posteriors(s: &Matrix, tm: &TransitionModel) -> Result<Posteriors> {
    check_emissions(s, tm)?;
    let (len, n) = (s.rows(), tm.num_labels());
    let alpha = forward(s, tm);
    let beta = backward(s, tm);
    let log_z = log_partition_from_alpha(&alpha, tm);

    let mut unary = Matrix::zeros(len, n);
    for i in 0..len {
        for j in 0..n {
            unary[(i, j)] = math::exp(alpha[(i, j)] + beta[(i, j)] - log_z);
        }
    }
    let mut counts = Matrix::zeros(n + 2, n + 2);
    for j in 0..n {
        counts[(0, j + 1)] = unary[(0, j)];
        counts[(j + 1, n + 1)] = unary[(len - 1, j)];
    }
    for i in 0..len - 1 {
        for a in 0..n {
            for b in 0..n {
                let lp = alpha[(i, a)] + tm.trans(a, b) + s[(i + 1, b)] + beta[(i + 1, b)] - log_z;
                counts[(a + 1, b + 1)] += math::exp(lp);
            }
        }
    }
    Ok(Posteriors {
        log_partition: log_z,
        unary,
        transition_counts: counts,
    })
}

/// Per-position label marginals `P(y_i = j)`.
pub fn marginals(s: &Matrix, tm: &TransitionModel) -> Result<Matrix> {
    posteriors(s, tm).map(|p| p.unary)
}

/// Loss and gradients of the NLL with respect to emissions and transitions.
#[derive(Debug, Clone)]
pub struct CrfGradients {
    pub loss: f64,
    pub emissions: Matrix,
    pub transitions: Matrix,
}

pub fn crf_gradients(s: &Matrix, tm: &TransitionModel, gold: &[usize]) -> Result<CrfGradients> {
    let score = sequence_score(s, tm, gold)?;
    let (len, n) = (s.rows(), tm.num_labels());
    if n == 1 {
        // only one labelling exists
        return Ok(CrfGradients {
            loss: 0.0,
            emissions: Matrix::zeros(len, 1),
            transitions: Matrix::zeros(3, 3),
        });
    }
    let post = posteriors(s, tm)?;
    let mut d_emit = post.unary;
    let mut d_trans = post.transition_counts;
    for (i, &g) in gold.iter().enumerate() {
        d_emit[(i, g)] -= 1.0;
    }
    d_trans[(0, gold[0] + 1)] -= 1.0;
    for w in gold.windows(2) {
        d_trans[(w[0] + 1, w[1] + 1)] -= 1.0;
    }
    d_trans[(gold[len - 1] + 1, n + 1)] -= 1.0;
    Ok(CrfGradients {
        loss: (post.log_partition - score).max(0.0),
        emissions: d_emit,
        transitions: d_trans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn fixture_two() -> Matrix {
        Matrix::from_rows(&[[0.6, 0.4], [0.3, 0.7]]).unwrap()
    }

    #[test]
    fn mask_layout() {
        let tm = TransitionModel::zeros(2).unwrap();
        assert!(tm.is_masked(0, 0));
        assert!(tm.is_masked(1, 0));
        assert!(tm.is_masked(3, 1));
        assert!(tm.is_masked(0, 3));
        assert!(!tm.is_masked(0, 1));
        assert!(!tm.is_masked(2, 3));
        assert_eq!(tm.mask().iter().filter(|&&m| !m).count(), 2 + 4 + 2);
    }

    #[test]
    fn score_single_position() {
        let tm = TransitionModel::zeros(2).unwrap();
        let s = Matrix::from_rows(&[[0.6, 0.4]]).unwrap();
        assert_eq!(sequence_score(&s, &tm, &[0]).unwrap(), 0.6);
    }

    #[test]
    fn score_two_positions() {
        let tm = TransitionModel::zeros(2).unwrap();
        assert_abs_diff_eq!(
            sequence_score(&fixture_two(), &tm, &[0, 1]).unwrap(),
            1.3,
            epsilon = 1e-15
        );
    }

    #[test]
    fn score_rejects_bad_labels() {
        let tm = TransitionModel::zeros(2).unwrap();
        assert!(sequence_score(&fixture_two(), &tm, &[0, 2]).is_err());
        assert!(sequence_score(&fixture_two(), &tm, &[0]).is_err());
    }

    #[test]
    fn partition_single_position() {
        let tm = TransitionModel::zeros(2).unwrap();
        let s = Matrix::from_rows(&[[0.6, 0.4]]).unwrap();
        let expected = libm::log(libm::exp(0.6) + libm::exp(0.4));
        assert_abs_diff_eq!(log_partition(&s, &tm).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 1.198139, epsilon = 1e-6);
    }

    #[test]
    fn partition_two_positions() {
        let tm = TransitionModel::zeros(2).unwrap();
        // four labellings: 0.9, 1.3, 0.7, 1.1
        let expected = libm::log(libm::exp(0.9) + libm::exp(1.3) + libm::exp(0.7) + libm::exp(1.1));
        let got = log_partition(&fixture_two(), &tm).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 2.411155, epsilon = 1e-6);
    }

    #[test]
    fn nll_of_fixture() {
        let tm = TransitionModel::zeros(2).unwrap();
        let loss = nll_loss(&fixture_two(), &tm, &[0, 1]).unwrap();
        assert_abs_diff_eq!(loss, 1.111155, epsilon = 1e-6);
    }

    #[test]
    fn single_label_loss_is_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let tm = TransitionModel::random(1, &mut rng).unwrap();
        let s = Matrix::from_rows(&[[0.3], [0.9], [0.1]]).unwrap();
        assert_eq!(nll_loss(&s, &tm, &[0, 0, 0]).unwrap(), 0.0);
        let g = crf_gradients(&s, &tm, &[0, 0, 0]).unwrap();
        assert_eq!(g.emissions.max_abs(), 0.0);
        assert_eq!(g.transitions.max_abs(), 0.0);
    }

    #[test]
    fn single_position_gradient_is_softmax_minus_onehot() {
        let tm = TransitionModel::zeros(2).unwrap();
        let s = Matrix::from_rows(&[[0.6, 0.4]]).unwrap();
        let g = crf_gradients(&s, &tm, &[0]).unwrap();
        assert_abs_diff_eq!(g.emissions[(0, 0)], -0.45017, epsilon = 1e-5);
        assert_abs_diff_eq!(g.emissions[(0, 1)], 0.45017, epsilon = 1e-5);
    }

    #[test]
    fn masked_cells_get_zero_gradient() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let tm = TransitionModel::random(3, &mut rng).unwrap();
        let s = Matrix::from_rows(&[[0.1, 0.5, 0.4], [0.7, 0.2, 0.1]]).unwrap();
        let g = crf_gradients(&s, &tm, &[2, 0]).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                if tm.is_masked(a, b) {
                    assert_eq!(g.transitions[(a, b)], 0.0);
                }
            }
        }
    }

    #[test]
    fn from_scores_forces_mask() {
        let tm = TransitionModel::from_scores(Matrix::filled(4, 4, 0.5)).unwrap();
        assert_eq!(tm.scores()[(0, 0)], MASKED);
        assert_eq!(tm.scores()[(0, 3)], MASKED);
        assert_eq!(tm.start(0), 0.5);
    }
}
