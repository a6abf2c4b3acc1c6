use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub count: usize,
    /// Component id per node, numbered in order of first appearance.
    pub labels: Vec<usize>,
}

/// `1e-8` times the largest entry of `w`.
pub fn default_component_tol(w: &DMatrix<f64>) -> f64 {
    1e-8 * w.max().max(0.0)
}

/// Components of the graph with an edge `(i, j)` wherever `w[i,j] > tol` or
/// `w[j,i] > tol`.
pub fn connected_components(w: &DMatrix<f64>, tol: f64) -> Components {
    let n = w.nrows();
    let mut labels = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = count;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if labels[v] == usize::MAX && (w[(u, v)] > tol || w[(v, u)] > tol) {
                    labels[v] = count;
                    stack.push(v);
                }
            }
        }
        count += 1;
    }
    Components { count, labels }
}
