//! The block updates of the alternating solver and the objective they descend.
//!
//! Objective, for affinity `S`, consensus kernel `K`, indicator `P` and
//! kernel weights `w`:
//!
//! ```text
//! Tr(K - 2KS + S^T K S) + gamma |S|_F^2 + alpha Tr(P^T L P) + beta sum_i w_i |H_i - K|_F^2
//! ```
//!
//! with `L` the Laplacian of `(S + S^T) / 2`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data_io::{LabelMask, LabelVector};
use crate::error::{Error, Result};
use crate::kernel_bank::{symmetrize, KernelBank};
use crate::numerics::{smallest_eigenpairs, symmetric_eigen, EigenPairs, SpdFactor};

use super::graph::{smoothness, AffinityGraph};

const RIDGE_STEPS: usize = 3;
const RIDGE_BASE: f64 = 1e-6;
const CD_MAX_SWEEPS: usize = 1000;
const CD_WARM_SWEEPS: usize = 20;
const CD_TOL: f64 = 1e-11;

/// Result of an S update.
#[derive(Debug, Clone)]
pub struct SUpdate {
    pub graph: AffinityGraph,
    /// Column-wise stationary point `(gamma I + K)^{-1} (K - alpha G / 4)`,
    /// before nonnegativity is enforced.
    pub unconstrained: DMatrix<f64>,
    /// Diagonal shift added to `gamma I + K` to make it factorizable.
    pub ridge: f64,
}

/// Factors `a`, retrying with `a + 10^k * 1e-6 * |a|_F * I` for k = 0..3.
fn factor_with_ridge(a: &DMatrix<f64>) -> Result<(SpdFactor, f64)> {
    if let Ok(f) = SpdFactor::new(a) {
        return Ok((f, 0.0));
    }
    let base = RIDGE_BASE * a.norm();
    let n = a.nrows();
    let mut shift = base;
    for _ in 0..RIDGE_STEPS {
        let shifted = a + DMatrix::identity(n, n) * shift;
        if let Ok(f) = SpdFactor::new(&shifted) {
            log::debug!("gamma*I + K needed a ridge of {shift:e}");
            return Ok((f, shift));
        }
        shift *= 10.0;
    }
    Err(Error::IllConditionedKernel)
}

/// `s^T A s - 2 b^T s` given the residual `r = A s - b`.
fn column_objective(s: &[f64], r: &[f64], b: &[f64]) -> f64 {
    // s^T A s - 2 b^T s = s^T (r + b) - 2 b^T s = s^T r - b^T s
    s.iter().zip(r).map(|(x, y)| x * y).sum::<f64>() - s.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

fn residual(a: &DMatrix<f64>, s: &[f64], b: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut r: Vec<f64> = b.iter().map(|v| -v).collect();
    for (j, &sj) in s.iter().enumerate() {
        if sj != 0.0 {
            let col = a.column(j);
            for i in 0..n {
                r[i] += col[i] * sj;
            }
        }
    }
    r
}

/// Projected coordinate descent sweeps on `min s^T A s - 2 b^T s, s >= 0`.
/// Every coordinate step is an exact 1-D minimization, so the objective never
/// increases. Returns true when the last sweep moved nothing noticeably.
fn coordinate_sweeps(a: &DMatrix<f64>, s: &mut [f64], r: &mut [f64], sweeps: usize) -> bool {
    let n = s.len();
    for _ in 0..sweeps {
        let mut max_step = 0.0f64;
        let mut max_s = 0.0f64;
        for j in 0..n {
            let next = (s[j] - r[j] / a[(j, j)]).max(0.0);
            let step = next - s[j];
            if step != 0.0 {
                s[j] = next;
                let col = a.column(j);
                for i in 0..n {
                    r[i] += col[i] * step;
                }
                max_step = max_step.max(step.abs());
            }
            max_s = max_s.max(s[j]);
        }
        if max_step <= CD_TOL * max_s.max(1.0) {
            return true;
        }
    }
    false
}

/// Minimizer of `s^T A s - 2 b^T s` over the coordinates in `free`, others
/// held at zero. `None` if the restricted system cannot be factored.
fn face_minimizer(a: &DMatrix<f64>, b: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let m = free.len();
    let sub = DMatrix::from_fn(m, m, |i, j| a[(free[i], free[j])]);
    let rhs = DMatrix::from_fn(m, 1, |i, _| b[free[i]]);
    let x = SpdFactor::new(&sub).ok()?.solve(&rhs).ok()?;
    Some(x.iter().copied().collect())
}

/// Primal active-set iterations from a feasible point. Each step moves toward
/// the minimizer on the current face and stops at the first bound it meets,
/// so the objective is non-increasing. Returns false if it gave up.
fn active_set(a: &DMatrix<f64>, b: &[f64], s: &mut Vec<f64>, r: &mut Vec<f64>) -> bool {
    let n = s.len();
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let kkt_tol = 1e-12 * scale;
    let mut free: Vec<usize> = (0..n).filter(|&j| s[j] > 0.0).collect();
    for _ in 0..(3 * n + 10) {
        let Some(x) = face_minimizer(a, b, &free) else {
            return false;
        };
        if x.iter().all(|&v| v > 0.0) {
            let mut next = vec![0.0; n];
            for (&j, &v) in free.iter().zip(&x) {
                next[j] = v;
            }
            let candidate_r = residual(a, &next, b);
            // guard against round-off making the exact face solve worse
            if column_objective(&next, &candidate_r, b) <= column_objective(s, r, b) {
                *s = next;
                *r = candidate_r;
            }
            let entering = (0..n)
                .filter(|&j| s[j] == 0.0 && r[j] < -kkt_tol)
                .min_by(|&i, &j| r[i].total_cmp(&r[j]));
            match entering {
                Some(j) => {
                    free.push(j);
                    free.sort_unstable();
                }
                None => return true,
            }
        } else {
            // step toward x until the first free coordinate hits zero
            let mut t = 1.0f64;
            for (&j, &v) in free.iter().zip(&x) {
                if v <= 0.0 {
                    t = t.min(s[j] / (s[j] - v));
                }
            }
            for (&j, &v) in free.iter().zip(&x) {
                let moved = s[j] + t * (v - s[j]);
                s[j] = if v <= 0.0 && s[j] / (s[j] - v) <= t { 0.0 } else { moved.max(0.0) };
            }
            *r = residual(a, s, b);
            free.retain(|&j| s[j] > 0.0);
        }
    }
    false
}

/// Exact nonnegative minimizer of `s^T A s - 2 b^T s` for positive definite
/// `A`, starting from the feasible point `start`: a few coordinate sweeps to
/// settle the support, then active-set steps, then sweeps again if the
/// active-set phase stalls.
fn nonneg_quadratic(a: &DMatrix<f64>, b: &[f64], start: Vec<f64>) -> Vec<f64> {
    let mut s = start;
    let mut r = residual(a, &s, b);
    if coordinate_sweeps(a, &mut s, &mut r, CD_WARM_SWEEPS) {
        return s;
    }
    let before = s.clone();
    let before_r = r.clone();
    if active_set(a, b, &mut s, &mut r) {
        return s;
    }
    if column_objective(&s, &r, b) > column_objective(&before, &before_r, b) {
        s = before;
        r = before_r;
    }
    coordinate_sweeps(a, &mut s, &mut r, CD_MAX_SWEEPS);
    s
}

/// S block: for each column the closed-form stationary point is clamped at
/// zero, compared against the warm start (if any), and the better of the two
/// is refined to the exact nonnegative minimizer by coordinate descent.
pub fn update_s(
    k: &DMatrix<f64>,
    g: &DMatrix<f64>,
    alpha: f64,
    gamma: f64,
    warm: Option<&DMatrix<f64>>,
) -> Result<SUpdate> {
    let n = k.nrows();
    if !k.is_square() || g.shape() != k.shape() {
        return Err(Error::Dimension(format!(
            "K is {}x{}, G is {}x{}",
            k.nrows(),
            k.ncols(),
            g.nrows(),
            g.ncols()
        )));
    }
    if let Some(w) = warm {
        if w.shape() != k.shape() {
            return Err(Error::Dimension("warm start does not match K".into()));
        }
    }
    let mut a = k + DMatrix::identity(n, n) * gamma;
    let (factor, ridge) = factor_with_ridge(&a)?;
    if ridge > 0.0 {
        for i in 0..n {
            a[(i, i)] += ridge;
        }
    }
    if (0..n).any(|i| a[(i, i)] <= 0.0) {
        return Err(Error::IllConditionedKernel);
    }
    let b = k - g * (alpha / 4.0);
    let unconstrained = factor.solve(&b)?;

    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let bi: Vec<f64> = b.column(i).iter().copied().collect();
            let clamped: Vec<f64> = unconstrained.column(i).iter().map(|v| v.max(0.0)).collect();
            let mut start = clamped;
            if let Some(w) = warm {
                let prev: Vec<f64> = w.column(i).iter().copied().collect();
                let q_start = column_objective(&start, &residual(&a, &start, &bi), &bi);
                let q_prev = column_objective(&prev, &residual(&a, &prev, &bi), &bi);
                if q_prev < q_start {
                    start = prev;
                }
            }
            nonneg_quadratic(&a, &bi, start)
        })
        .collect();
    let s = DMatrix::from_fn(n, n, |r, c| columns[c][r]);
    Ok(SUpdate {
        graph: AffinityGraph::from_s(s),
        unconstrained,
        ridge,
    })
}

/// Stationary point of the K block with `w` fixed, symmetrized:
/// `K = (2 S^T - S S^T - I + 2 beta sum_i w_i H_i) / (2 beta sum_i w_i)`.
pub fn update_k(s: &DMatrix<f64>, bank: &KernelBank, w: &[f64], beta: f64) -> Result<DMatrix<f64>> {
    let n = bank.n();
    if s.shape() != (n, n) || w.len() != bank.len() {
        return Err(Error::Dimension(format!(
            "S is {}x{}, bank has {} kernels of size {n}, {} weights",
            s.nrows(),
            s.ncols(),
            bank.len(),
            w.len()
        )));
    }
    let wsum: f64 = w.iter().sum();
    let mut num = s.transpose() * 2.0 - s * s.transpose() - DMatrix::<f64>::identity(n, n);
    for (h, &wi) in bank.kernels().iter().zip(w) {
        num += h.values() * (2.0 * beta * wi);
    }
    Ok(symmetrize(num / (2.0 * beta * wsum)))
}

/// Nearest positive semi-definite matrix in Frobenius norm. Returns `k`
/// untouched when it is already PSD, together with its smallest eigenvalue.
pub fn project_psd(k: DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let eig = symmetric_eigen(&k)?;
    let min = eig.values[0];
    if min >= 0.0 {
        return Ok((k, min));
    }
    let clipped = eig.values.map(|v| v.max(0.0));
    let scaled = &eig.vectors * DMatrix::from_diagonal(&clipped);
    Ok((symmetrize(scaled * eig.vectors.transpose()), min))
}

/// `w_i = 1 / (2 max(|H_i - K|_F, eps))`.
pub fn update_w(bank: &KernelBank, k: &DMatrix<f64>, epsilon_w: f64) -> Vec<f64> {
    bank.kernels()
        .iter()
        .map(|h| 0.5 / (h.values() - k).norm().max(epsilon_w))
        .collect()
}

/// The `c` smallest eigenvectors of `L`.
pub fn update_p_clustering(l: &DMatrix<f64>, c: usize) -> Result<EigenPairs> {
    smallest_eigenpairs(l, c)
}

/// One-hot rows for the labeled samples of `mask`, in mask order.
pub fn one_hot_labeled(labels: &LabelVector, mask: &LabelMask, c: usize) -> Result<DMatrix<f64>> {
    if labels.len() != mask.n() {
        return Err(Error::Dimension(format!(
            "{} labels for a mask over {} samples",
            labels.len(),
            mask.n()
        )));
    }
    let l = mask.labeled().len();
    let mut y = DMatrix::zeros(l, c);
    let mut seen = vec![false; c];
    for (row, &i) in mask.labeled().iter().enumerate() {
        let class = labels
            .class_of(i)
            .ok_or_else(|| Error::InvalidData(format!("sample {i} is in the labeled set but has no label")))?;
        if class >= c {
            return Err(Error::InvalidData(format!(
                "label {class} at sample {i} exceeds class count {c}"
            )));
        }
        y[(row, class)] = 1.0;
        seen[class] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidData(format!(
            "class {missing} has no labeled sample"
        )));
    }
    Ok(y)
}

/// Harmonic solution: labeled rows are `y_l`, unlabeled rows solve
/// `(L_uu + ridge I) P_u = -L_ul Y_l`.
pub fn update_p_ssl(
    l: &DMatrix<f64>,
    y_l: &DMatrix<f64>,
    mask: &LabelMask,
    ridge: f64,
) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    let c = y_l.ncols();
    if mask.n() != n || y_l.nrows() != mask.labeled().len() {
        return Err(Error::Dimension(format!(
            "Laplacian is {n}x{n}, mask covers {}, Y_l has {} rows",
            mask.n(),
            y_l.nrows()
        )));
    }
    let lab = mask.labeled();
    let unl = mask.unlabeled();
    let mut p = DMatrix::zeros(n, c);
    for (row, &i) in lab.iter().enumerate() {
        p.set_row(i, &y_l.row(row));
    }
    if unl.is_empty() {
        return Ok(p);
    }
    let u = unl.len();
    let l_uu = DMatrix::from_fn(u, u, |a, b| l[(unl[a], unl[b])]) + DMatrix::identity(u, u) * ridge;
    let l_ul = DMatrix::from_fn(u, lab.len(), |a, b| l[(unl[a], lab[b])]);
    let rhs = -(l_ul * y_l);
    let factor = SpdFactor::new(&l_uu).map_err(|_| Error::DisconnectedUnlabeled)?;
    let p_u = factor.solve(&rhs)?;
    for (row, &i) in unl.iter().enumerate() {
        p.set_row(i, &p_u.row(row));
    }
    Ok(p)
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn decide_labels(p: &DMatrix<f64>) -> Vec<usize> {
    p.row_iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// The objective split into its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `Tr(K - 2KS + S^T K S)`
    pub self_expression: f64,
    /// `gamma |S|_F^2`
    pub regularization: f64,
    /// `alpha Tr(P^T L P)`
    pub smoothness: f64,
    /// `beta sum_i w_i |H_i - K|_F^2`, zero for single-kernel and PMKL models.
    pub fidelity: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.self_expression + self.regularization + self.smoothness + self.fidelity
    }
}

/// `Tr(K - 2KS + S^T K S)` via `Tr(K) - 2 Tr(KS) + <S, KS>`.
pub fn self_expression(k: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    let ks = k * s;
    k.trace() - 2.0 * ks.trace() + s.component_mul(&ks).sum()
}

/// Terms shared by every model: everything except the kernel fidelity.
pub fn graph_objective(
    graph: &AffinityGraph,
    k: &DMatrix<f64>,
    p: &DMatrix<f64>,
    alpha: f64,
    gamma: f64,
) -> ObjectiveTerms {
    let s = graph.s();
    ObjectiveTerms {
        self_expression: self_expression(k, s),
        regularization: gamma * s.norm_squared(),
        smoothness: alpha * smoothness(graph.laplacian(), p),
        fidelity: 0.0,
    }
}

/// `sum_i w_i |H_i - K|_F^2`
pub fn kernel_fidelity(bank: &KernelBank, k: &DMatrix<f64>, w: &[f64]) -> f64 {
    bank.kernels()
        .iter()
        .zip(w)
        .map(|(h, wi)| wi * (h.values() - k).norm_squared())
        .sum()
}

/// Full objective value, with `L` rebuilt from `S`.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    s: &DMatrix<f64>,
    k: &DMatrix<f64>,
    p: &DMatrix<f64>,
    w: &[f64],
    bank: &KernelBank,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> f64 {
    let graph = AffinityGraph::from_s(s.clone());
    let mut terms = graph_objective(&graph, k, p, alpha, gamma);
    terms.fidelity = beta * kernel_fidelity(bank, k, w);
    terms.total()
}

/// Closed-form minimizer of `sum_i theta_i f_i` subject to
/// `sum_i sqrt(theta_i) = 1`, `theta >= 0`:
/// `theta_i = (1/f_i)^2 / (sum_j 1/f_j)^2`.
pub fn theta_from_residuals(f: &[f64]) -> Result<Vec<f64>> {
    if f.is_empty() || f.iter().all(|&v| v <= 0.0) {
        return Err(Error::DegenerateObjective);
    }
    let inv: Vec<f64> = f.iter().map(|&v| 1.0 / v.max(1e-12)).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.iter().map(|v| (v / total).powi(2)).collect())
}

/// Per-kernel residuals `f_i = Tr(H_i - 2 H_i S + S^T H_i S)`.
pub fn pmkl_residuals(bank: &KernelBank, s: &DMatrix<f64>) -> Vec<f64> {
    bank.kernels()
        .par_iter()
        .map(|h| self_expression(h.values(), s))
        .collect()
}

pub fn pmkl_update_theta(bank: &KernelBank, s: &DMatrix<f64>) -> Result<Vec<f64>> {
    theta_from_residuals(&pmkl_residuals(bank, s))
}

/// `sum_i theta_i H_i`
pub fn combine_kernels(bank: &KernelBank, theta: &[f64]) -> DMatrix<f64> {
    let n = bank.n();
    let mut k = DMatrix::zeros(n, n);
    for (h, &t) in bank.kernels().iter().zip(theta) {
        k += h.values() * t;
    }
    k
}

pub(crate) fn count_below(values: &DVector<f64>, threshold: f64) -> usize {
    values.iter().filter(|&&v| v < threshold).count()
}
