//! Evaluation metrics: row-wise cosine similarity, Rouge-L and held-out
//! reconstruction error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::align::{AlignmentMap, NodeData};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rows with a norm below this contribute a cosine of 0.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CosineStats {
    pub mean: f64,
    /// Sum of the per-row cosines; `mean = sum / rows`.
    pub sum: f64,
    pub rows: usize,
    pub degenerate_rows: usize,
}

/// Mean over rows of `x·y / (‖x‖‖y‖)`.
pub fn mean_cosine(estimate: &Matrix, reference: &Matrix) -> Result<CosineStats> {
    if estimate.shape() != reference.shape() {
        return Err(Error::shape(
            format!("{}x{}", reference.rows(), reference.cols()),
            format!("{}x{}", estimate.rows(), estimate.cols()),
        ));
    }
    if estimate.rows() == 0 {
        return Err(Error::param("rows", "need at least one row"));
    }
    let mut sum = 0.0;
    let mut degenerate = 0;
    for i in 0..estimate.rows() {
        let (x, y) = (estimate.row(i), reference.row(i));
        let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let nx = libm::sqrt(x.iter().map(|a| a * a).sum());
        let ny = libm::sqrt(y.iter().map(|a| a * a).sum());
        if nx < DEGENERATE_NORM || ny < DEGENERATE_NORM {
            degenerate += 1;
        } else {
            sum += dot / (nx * ny);
        }
    }
    Ok(CosineStats {
        mean: sum / estimate.rows() as f64,
        sum,
        rows: estimate.rows(),
        degenerate_rows: degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RougeL {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T]) -> RougeL {
    match (candidate.is_empty(), reference.is_empty()) {
        (true, true) => {
            return RougeL {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            }
        }
        (true, false) | (false, true) => {
            return RougeL {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            }
        }
        _ => {}
    }
    let l = lcs_len(candidate, reference) as f64;
    let precision = l / candidate.len() as f64;
    let recall = l / reference.len() as f64;
    let f1 = if l == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RougeL { precision, recall, f1 }
}

pub fn whitespace_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Per node, `‖E_V W − E_A‖_F / max(‖E_A‖_F, 1e-12)`.
pub fn holdout_error(data: &[NodeData], map: &AlignmentMap) -> Result<Vec<f64>> {
    if data.len() != map.len() {
        return Err(Error::shape(format!("{} maps", data.len()), format!("{}", map.len())));
    }
    data.iter()
        .zip(map.iter())
        .map(|(d, w)| {
            let r = d.victim().matmul(w)?.sub(d.attack())?;
            Ok(r.frobenius() / d.attack().frobenius().max(1e-12))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalResult {
    /// Mean cosine over all evaluated rows of all nodes.
    pub mean_cosine: f64,
    pub per_node_cosine: Vec<f64>,
    pub test_rel_error: Vec<f64>,
    pub degenerate_rows: usize,
    pub objective: f64,
    pub max_violation: f64,
}

/// Cosine and reconstruction error of `map` on held-out data. `objective`
/// and `max_violation` are supplied by the caller since they depend on the
/// training problem.
pub fn evaluate(test: &[NodeData], map: &AlignmentMap, objective: f64, max_violation: f64) -> Result<EvalResult> {
    if test.len() != map.len() {
        return Err(Error::shape(format!("{} maps", test.len()), format!("{}", map.len())));
    }
    let mut per_node = Vec::with_capacity(test.len());
    let (mut sum, mut rows, mut degenerate) = (0.0, 0usize, 0usize);
    for (d, w) in test.iter().zip(map.iter()) {
        let c = mean_cosine(&d.victim().matmul(w)?, d.attack())?;
        per_node.push(c.mean);
        sum += c.sum;
        rows += c.rows;
        degenerate += c.degenerate_rows;
    }
    Ok(EvalResult {
        mean_cosine: sum / rows as f64,
        per_node_cosine: per_node,
        test_rel_error: holdout_error(test, map)?,
        degenerate_rows: degenerate,
        objective,
        max_violation,
    })
}
