use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_LLOYD_ITERS: usize = 300;

/// Outcome of a k-means run: the best labeling over all restarts.
#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of `labels` on the normalized rows.
    pub wcss: f64,
    /// Per-Lloyd-iteration objective of the winning restart.
    pub trace: Vec<f64>,
    /// Final objective of every restart, in order.
    pub restart_wcss: Vec<f64>,
}

/// Scales every nonzero row to unit Euclidean length.
pub fn normalize_rows(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = rows.clone();
    for mut r in out.row_iter_mut() {
        let norm = r.norm();
        if norm > 0.0 {
            r /= norm;
        }
    }
    out
}

/// k-means on length-normalized rows, best of `restarts` by WCSS.
pub fn kmeans(rows: &DMatrix<f64>, c: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    kmeans_with_trace(rows, c, restarts, seed).map(|r| r.labels)
}

pub fn kmeans_with_trace(
    rows: &DMatrix<f64>,
    c: usize,
    restarts: usize,
    seed: u64,
) -> Result<KMeansRun> {
    let n = rows.nrows();
    if c == 0 || c > n {
        return Err(Error::DegenerateClustering {
            distinct: n,
            clusters: c,
        });
    }
    let x = normalize_rows(rows);
    let points: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let distinct = count_distinct(&points, c);
    if distinct < c {
        return Err(Error::DegenerateClustering {
            distinct,
            clusters: c,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansRun> = None;
    let mut restart_wcss = Vec::with_capacity(restarts.max(1));
    for _ in 0..restarts.max(1) {
        let centers = seed_centers(&points, c, &mut rng);
        let (labels, trace) = lloyd(&points, centers);
        let wcss = *trace.last().expect("lloyd records at least one objective");
        restart_wcss.push(wcss);
        if best.as_ref().is_none_or(|b| wcss < b.wcss) {
            best = Some(KMeansRun {
                labels,
                wcss,
                trace,
                restart_wcss: Vec::new(),
            });
        }
    }
    let mut best = best.expect("at least one restart");
    best.restart_wcss = restart_wcss;
    Ok(best)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Counts distinct rows, stopping once `enough` are found.
fn count_distinct(points: &[Vec<f64>], enough: usize) -> usize {
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !reps.iter().any(|r| *r == p) {
            reps.push(p);
            if reps.len() >= enough {
                break;
            }
        }
    }
    reps.len()
}

/// Distance-squared weighted seeding: the first center is uniform, each next
/// one is drawn with probability proportional to the squared distance to the
/// nearest chosen center.
fn seed_centers(points: &[Vec<f64>], c: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < c {
        let total: f64 = nearest.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // Round-off can leave `pick` on an already chosen point.
            if nearest[pick] == 0.0 {
                pick = argmax(&nearest);
            }
            pick
        } else {
            argmax(&nearest)
        };
        centers.push(points[idx].clone());
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, ctr) in centers.iter().enumerate() {
        let d = sq_dist(p, ctr);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> (Vec<usize>, Vec<f64>) {
    let n = points.len();
    let c = centers.len();
    let dim = points[0].len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest_center(p, &centers).0).collect();
    let mut trace = Vec::new();
    for iter in 0..MAX_LLOYD_ITERS {
        // Refill empty clusters with the point farthest from its center.
        loop {
            let mut sizes = vec![0usize; c];
            for &l in &labels {
                sizes[l] += 1;
            }
            let Some(empty) = sizes.iter().position(|&s| s == 0) else {
                break;
            };
            let mut far = (usize::MAX, -1.0);
            for (i, p) in points.iter().enumerate() {
                let d = sq_dist(p, &centers[labels[i]]);
                if sizes[labels[i]] > 1 && d > far.1 {
                    far = (i, d);
                }
            }
            labels[far.0] = empty;
            centers[empty] = points[far.0].clone();
        }

        let mut sums = vec![vec![0.0; dim]; c];
        let mut counts = vec![0usize; c];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for k in 0..c {
            for s in sums[k].iter_mut() {
                *s /= counts[k] as f64;
            }
        }
        centers = sums;
        let wcss: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_dist(p, &centers[l]))
            .sum();
        trace.push(wcss);
        if iter + 1 == MAX_LLOYD_ITERS {
            break;
        }

        let mut changed = false;
        for i in 0..n {
            let (k, d) = nearest_center(&points[i], &centers);
            // Move only on strict improvement so ties cannot cycle.
            if k != labels[i] && d < sq_dist(&points[i], &centers[labels[i]]) {
                labels[i] = k;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (labels, trace)
}
