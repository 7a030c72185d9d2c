//! Exhaustive enumeration over all `n^N` labellings.
//!
//! Used to cross-check the forward–backward and Viterbi recursions on small
//! instances. Nothing here calls into the dynamic programs it checks.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::avd;
use crate::crf::{self, TransitionModel};
use crate::error::Result;
use crate::matrix::Matrix;

/// Iterates every label sequence of length `len` over `n` labels in
/// lexicographic order.
pub struct Sequences {
    current: Option<Vec<usize>>,
    n: usize,
}

pub fn all_sequences(len: usize, n: usize) -> Sequences {
    Sequences {
        current: (len > 0 && n > 0).then(|| vec![0; len]),
        n,
    }
}

impl Iterator for Sequences {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut pos = cur.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < self.n {
                break;
            }
            cur[pos] = 0;
        }
        Some(out)
    }
}

/// Direct evaluation of the path score from the scores matrix.
pub fn path_score(s: &Matrix, scores: &Matrix, y: &[usize]) -> f64 {
    let n = s.cols();
    let mut total = scores[(0, y[0] + 1)] + scores[(y[y.len() - 1] + 1, n + 1)];
    for k in 1..y.len() {
        total += scores[(y[k - 1] + 1, y[k] + 1)];
    }
    for (k, &l) in y.iter().enumerate() {
        total += s[(k, l)];
    }
    total
}

/// Prefix score without the end transition.
fn prefix_score(s: &Matrix, scores: &Matrix, y: &[usize]) -> f64 {
    let mut total = scores[(0, y[0] + 1)] + s[(0, y[0])];
    for k in 1..y.len() {
        total += scores[(y[k - 1] + 1, y[k] + 1)] + s[(k, y[k])];
    }
    total
}

/// Log partition, marginals, best score and prefix-max table by enumeration.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub log_partition: f64,
    pub marginals: Matrix,
    pub best_score: f64,
    /// `prefix_max[(i, j)]`: max prefix score over sequences with `y_i = j`.
    pub prefix_max: Matrix,
}

pub fn enumerate(s: &Matrix, tm: &TransitionModel) -> Enumeration {
    let (len, n) = (s.rows(), s.cols());
    let scores = tm.scores();
    let all: Vec<(Vec<usize>, f64)> = all_sequences(len, n)
        .map(|y| {
            let v = path_score(s, scores, &y);
            (y, v)
        })
        .collect();
    let max = all
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = all.iter().map(|(_, v)| libm::exp(v - max)).sum();
    let log_partition = max + libm::log(z);

    let mut marginals = Matrix::zeros(len, n);
    for (y, v) in &all {
        let p = libm::exp(v - log_partition);
        for (i, &l) in y.iter().enumerate() {
            marginals[(i, l)] += p;
        }
    }

    let mut prefix_max = Matrix::filled(len, n, f64::NEG_INFINITY);
    for i in 0..len {
        for y in all_sequences(i + 1, n) {
            let v = prefix_score(s, scores, &y);
            let cell = &mut prefix_max[(i, y[i])];
            if v > *cell {
                *cell = v;
            }
        }
    }
    Enumeration {
        log_partition,
        marginals,
        best_score: max,
        prefix_max,
    }
}

/// Worst discrepancies seen across an oracle run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    pub trials: usize,
    pub max_partition_error: f64,
    pub max_marginal_error: f64,
    pub max_best_path_error: f64,
    pub max_prefix_error: f64,
    pub failures: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Random emissions in `[-2, 2)` and transitions in `[-1, 1)`.
pub fn random_instance<R: Rng + ?Sized>(
    len: usize,
    n: usize,
    rng: &mut R,
) -> (Matrix, TransitionModel) {
    let mut s = Matrix::zeros(len, n);
    for x in s.as_mut_slice() {
        *x = rng.gen_range(-2.0..2.0);
    }
    let mut tm = TransitionModel::zeros(n).expect("n >= 1");
    let size = n + 2;
    for a in 0..size {
        for b in 0..size {
            if !tm.is_masked(a, b) {
                tm.scores_mut()[(a, b)] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    (s, tm)
}

/// Compares the dynamic programs against enumeration on `trials` random
/// instances with `1 ≤ N ≤ max_len` and `1 ≤ n ≤ max_labels`.
pub fn run_suite(
    trials: usize,
    max_len: usize,
    max_labels: usize,
    seed: u64,
    tolerance: f64,
) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport::default();
    for _ in 0..trials {
        let len = rng.gen_range(1..=max_len.max(1));
        let n = rng.gen_range(1..=max_labels.max(1));
        let (s, tm) = random_instance(len, n, &mut rng);
        let truth = enumerate(&s, &tm);

        let post = crf::posteriors(&s, &tm)?;
        let e_z = (post.log_partition - truth.log_partition).abs();
        let e_m = post
            .unary
            .as_slice()
            .iter()
            .zip(truth.marginals.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

        let table = avd::viterbi_scores(&s, &tm)?;
        let path = avd::best_path(&table, &tm);
        let e_b = (path_score(&s, tm.scores(), &path) - truth.best_score).abs();
        let e_p = table
            .scores
            .as_slice()
            .iter()
            .zip(truth.prefix_max.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

        report.trials += 1;
        report.max_partition_error = report.max_partition_error.max(e_z);
        report.max_marginal_error = report.max_marginal_error.max(e_m);
        report.max_best_path_error = report.max_best_path_error.max(e_b);
        report.max_prefix_error = report.max_prefix_error.max(e_p);
        if e_z > tolerance || e_m > tolerance || e_b > tolerance || e_p > tolerance {
            report.failures += 1;
        }
    }
    Ok(report)
}
