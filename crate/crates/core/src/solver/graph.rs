use nalgebra::DMatrix;

use crate::numerics::{connected_components, default_component_tol, Components};

/// A learned affinity matrix with its symmetrization and Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    s: DMatrix<f64>,
    w: DMatrix<f64>,
    l: DMatrix<f64>,
}

impl AffinityGraph {
    /// Builds `W = (S + S^T) / 2` and `L = D - W`. `s` must be nonnegative.
    pub fn from_s(s: DMatrix<f64>) -> Self {
        debug_assert!(s.iter().all(|&v| v >= 0.0), "affinity must be nonnegative");
        let w = (&s + s.transpose()) * 0.5;
        let l = laplacian(&w);
        Self { s, w, l }
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn into_s(self) -> DMatrix<f64> {
        self.s
    }

    /// Components of the graph at `1e-8 * max(S)`.
    pub fn components(&self) -> Components {
        connected_components(&self.s, default_component_tol(&self.s))
    }
}

/// `D - W` with `D` the diagonal of row sums. Self-loops cancel.
pub fn laplacian(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let mut l = -w.clone();
    for i in 0..n {
        let mut deg = 0.0;
        for j in 0..n {
            if j != i {
                deg += w[(i, j)];
            }
        }
        l[(i, i)] = deg;
    }
    l
}

/// `g[i,j] = |P_i - P_j|^2` over the rows of the indicator matrix.
pub fn row_sq_dists(p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for k in 0..p.ncols() {
                let d = p[(i, k)] - p[(j, k)];
                s += d * d;
            }
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    g
}

/// `Tr(P^T L P)`.
pub fn smoothness(l: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let lp = l * p;
    lp.component_mul(p).sum()
}
