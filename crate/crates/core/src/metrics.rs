//! Support-weighted precision, recall and F1, and prototype similarity
//! tables.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::similarity::cosine_matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: usize,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub per_label: Vec<LabelMetrics>,
    /// `confusion[gold][pred]`.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-label and support-weighted metrics over labels `0..m`.
///
/// Undefined precision or recall counts as 0. Labels with no support are
/// listed but carry zero weight.
pub fn weighted_prf(gold: &[usize], pred: &[usize], m: usize) -> Result<EvalReport> {
    Error::check_dim("prediction count", gold.len(), pred.len())?;
    if let Some(&bad) = gold.iter().chain(pred).find(|&&l| l >= m) {
        return Err(Error::argument(alloc::format!(
            "label id {bad} outside 0..{m}"
        )));
    }
    let mut confusion = vec![vec![0usize; m]; m];
    for (&g, &p) in gold.iter().zip(pred) {
        confusion[g][p] += 1;
    }
    let total = gold.len();
    let mut per_label = Vec::with_capacity(m);
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for l in 0..m {
        let tp = confusion[l][l];
        let support: usize = confusion[l].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[l]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let w = ratio(support, total);
        wp += w * precision;
        wr += w * recall;
        wf += w * f1;
        per_label.push(LabelMetrics {
            label: l,
            support,
            precision,
            recall,
            f1,
        });
    }
    Ok(EvalReport {
        total,
        weighted_precision: wp,
        weighted_recall: wr,
        weighted_f1: wf,
        per_label,
        confusion,
    })
}

/// Pairwise cosine similarity between prototypes (`k × k`).
pub fn prototype_similarity(prototypes: &Matrix) -> Result<Matrix> {
    let mut m = cosine_matrix(prototypes, "prototypes", prototypes, "prototypes")?;
    // exact symmetry and unit diagonal regardless of rounding order
    for i in 0..m.rows() {
        m[(i, i)] = 1.0;
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_prediction() {
        let y = [0, 2, 1, 1, 0];
        let r = weighted_prf(&y, &y, 3).unwrap();
        assert_eq!(r.weighted_f1, 1.0);
        assert_eq!(r.weighted_precision, 1.0);
        assert_eq!(r.weighted_recall, 1.0);
    }

    #[test]
    fn hand_computed_fixture() {
        // gold A A B, pred A B B
        let r = weighted_prf(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_abs_diff_eq!(r.per_label[0].f1, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.per_label[1].f1, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.weighted_f1, 2.0 / 3.0, epsilon = 1e-12);
        // precision: A 1.0, B 0.5; recall: A 0.5, B 1.0
        assert_abs_diff_eq!(
            r.weighted_precision,
            (2.0 * 1.0 + 0.5) / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(r.weighted_recall, (2.0 * 0.5 + 1.0) / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_support_label_listed() {
        let r = weighted_prf(&[0, 0], &[0, 0], 3).unwrap();
        assert_eq!(r.per_label.len(), 3);
        assert_eq!(r.per_label[2].support, 0);
        assert_eq!(r.per_label[2].f1, 0.0);
        assert_eq!(r.weighted_f1, 1.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(weighted_prf(&[0, 1], &[0], 2).is_err());
    }

    #[test]
    fn empty_input_reports_zeros() {
        let r = weighted_prf(&[], &[], 2).unwrap();
        assert_eq!(r.total, 0);
        assert_eq!(r.weighted_f1, 0.0);
    }

    #[test]
    fn identical_prototypes_all_ones() {
        let p = Matrix::from_rows(&[[0.3, 0.4], [0.3, 0.4]]).unwrap();
        assert_eq!(prototype_similarity(&p).unwrap().as_slice(), &[1.0; 4]);
    }

    #[test]
    fn orthogonal_prototypes() {
        let p = Matrix::from_rows(&[[2.0, 0.0], [0.0, 5.0]]).unwrap();
        assert_eq!(
            prototype_similarity(&p).unwrap().as_slice(),
            &[1.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn controlled_angles() {
        // happy at 0°, joy at 10°, anger at 120°
        let deg = |a: f64| {
            let r = a.to_radians();
            [libm::cos(r), libm::sin(r)]
        };
        let p = Matrix::from_rows(&[deg(0.0), deg(10.0), deg(120.0)]).unwrap();
        let s = prototype_similarity(&p).unwrap();
        assert!(s[(0, 1)] > s[(0, 2)]);
        assert_abs_diff_eq!(s[(0, 1)], libm::cos(10f64.to_radians()), epsilon = 1e-12);
    }

    #[test]
    fn zero_norm_prototype_rejected() {
        let p = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(prototype_similarity(&p).is_err());
    }
}
