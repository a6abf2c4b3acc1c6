//! Accuracy under the best cluster-to-class matching, and normalized mutual
//! information.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::hungarian;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Cluster ids are arbitrary; accuracy uses the best bijection.
    Clustering,
    /// Predicted ids are class ids; accuracy is a plain match rate.
    Ssl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub acc: f64,
    pub nmi: f64,
    /// Counts with true classes on rows and predictions on columns. In
    /// clustering mode the columns are reordered so that column `j` holds the
    /// cluster matched to class `j`. The matrix is square, padded with zeros.
    pub confusion: DMatrix<usize>,
    /// Number of evaluated samples.
    pub n: usize,
}

/// Maps arbitrary ids to `0..k` in order of value.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    // renumber by sorted value so the result does not depend on order of appearance
    for (rank, v) in ids.values_mut().enumerate() {
        *v = rank;
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    Ok(())
}

/// `table[p][t]` counts samples predicted `p` with truth `t`, padded square.
fn contingency(pred: &[usize], truth: &[usize]) -> DMatrix<usize> {
    let (p, kp) = compact(pred);
    let (t, kt) = compact(truth);
    let m = kp.max(kt);
    let mut table = DMatrix::zeros(m, m);
    for (&a, &b) in p.iter().zip(&t) {
        table[(a, b)] += 1;
    }
    table
}

/// Best matching of predicted clusters to classes: `matched[p]` is the class
/// assigned to cluster `p`, and the number of samples it covers.
fn best_matching(table: &DMatrix<usize>) -> Result<(Vec<usize>, usize)> {
    let cost = table.map(|v| -(v as f64));
    let assignment = hungarian(&cost)?;
    let hits = assignment
        .perm
        .iter()
        .enumerate()
        .map(|(p, &t)| table[(p, t)])
        .sum();
    Ok((assignment.perm, hits))
}

/// Fraction of samples correct under the best one-to-one relabeling of
/// `pred` onto `truth`.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let (_, hits) = best_matching(&contingency(pred, truth))?;
    Ok(hits as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the geometric mean of the two entropies.
///
/// When either partition is a single cluster the ratio is undefined; it is
/// taken as 1 if both are single clusters and 0 otherwise.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let table = contingency(pred, truth);
    let n = pred.len() as f64;
    let row_sums: Vec<usize> = table.row_iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = table.column_iter().map(|c| c.iter().sum()).collect();
    let h_pred = entropy(row_sums.iter().copied(), n);
    let h_truth = entropy(col_sums.iter().copied(), n);
    if h_pred == 0.0 || h_truth == 0.0 {
        if h_pred == 0.0 && h_truth == 0.0 {
            return Ok(1.0);
        }
        log::warn!("nmi: one partition is a single cluster, reporting 0");
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for i in 0..table.nrows() {
        for j in 0..table.ncols() {
            let nij = table[(i, j)];
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            mi += nij / n * (n * nij / (row_sums[i] as f64 * col_sums[j] as f64)).ln();
        }
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}

/// Acc and NMI over `restrict` (all samples when `None`).
pub fn evaluate(
    pred: &[usize],
    truth: &[usize],
    restrict: Option<&[usize]>,
    mode: EvalMode,
) -> Result<MetricReport> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    let (pred, truth): (Vec<usize>, Vec<usize>) = match restrict {
        Some(idx) => {
            if let Some(&bad) = idx.iter().find(|&&i| i >= pred.len()) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    n: pred.len(),
                });
            }
            idx.iter().map(|&i| (pred[i], truth[i])).unzip()
        }
        None => (pred.to_vec(), truth.to_vec()),
    };
    if pred.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    let n = pred.len();
    let nmi = nmi(&pred, &truth)?;
    match mode {
        EvalMode::Clustering => {
            let table = contingency(&pred, &truth);
            let (matched, hits) = best_matching(&table)?;
            let m = table.nrows();
            let mut confusion = DMatrix::zeros(m, m);
            for (p, &t) in matched.iter().enumerate() {
                for class in 0..m {
                    confusion[(class, t)] += table[(p, class)];
                }
            }
            Ok(MetricReport {
                acc: hits as f64 / n as f64,
                nmi,
                confusion,
                n,
            })
        }
        EvalMode::Ssl => {
            let m = pred.iter().chain(&truth).max().map_or(0, |v| v + 1);
            let mut confusion = DMatrix::zeros(m, m);
            let mut hits = 0;
            for (&p, &t) in pred.iter().zip(&truth) {
                confusion[(t, p)] += 1;
                hits += usize::from(p == t);
            }
            Ok(MetricReport {
                acc: hits as f64 / n as f64,
                nmi,
                confusion,
                n,
            })
        }
    }
}
