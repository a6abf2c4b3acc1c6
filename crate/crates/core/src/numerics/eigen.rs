use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernel_bank::symmetrize;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Full decomposition of `(m + m^T) / 2`, sorted ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<EigenPairs> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m.clone()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenPairs { values, vectors })
}

/// The `c` algebraically smallest eigenpairs of the symmetric part of `m`.
pub fn smallest_eigenpairs(m: &DMatrix<f64>, c: usize) -> Result<EigenPairs> {
    let n = m.nrows();
    if c == 0 || c > n {
        return Err(Error::TooManyEigenpairs { requested: c, n });
    }
    let full = symmetric_eigen(m)?;
    Ok(EigenPairs {
        values: full.values.rows(0, c).into_owned(),
        vectors: full.vectors.columns(0, c).into_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian(w: &DMatrix<f64>) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            w.nrows(),
            w.row_iter().map(|r| r.sum()),
        ));
        d - w
    }

    #[test]
    fn diagonal_matrix() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = smallest_eigenpairs(&m, 2).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 2.0]);
        assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((e.vectors[(2, 1)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_component_graph_has_double_zero() {
        let mut w = DMatrix::zeros(5, 5);
        for (i, j) in [(0, 1), (1, 2), (0, 2), (3, 4)] {
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
        let e = smallest_eigenpairs(&laplacian(&w), 2).unwrap();
        assert!(e.values.amax() < 1e-8);
    }

    #[test]
    fn too_many_pairs() {
        assert!(matches!(
            smallest_eigenpairs(&DMatrix::identity(3, 3), 4),
            Err(Error::TooManyEigenpairs { requested: 4, n: 3 })
        ));
    }

    fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            let a = DMatrix::from_vec(n, n, v);
            &a + a.transpose()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn trace_identity(m in symmetric(6)) {
            let e = smallest_eigenpairs(&m, 6).unwrap();
            prop_assert!((e.values.sum() - m.trace()).abs() < 1e-8);
        }

        #[test]
        fn residual_and_orthonormality(n in 1usize..200, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let m = &a + a.transpose();
            let c = n.min(5);
            let e = smallest_eigenpairs(&m, c).unwrap();
            let fro = m.norm();
            for k in 0..c {
                let v = e.vectors.column(k);
                prop_assert!((&m * v - v * e.values[k]).norm() <= 1e-8 * fro.max(1.0));
            }
            let gram = e.vectors.transpose() * &e.vectors;
            prop_assert!((gram - DMatrix::identity(c, c)).amax() <= 1e-8);
            for k in 1..c {
                prop_assert!(e.values[k - 1] <= e.values[k]);
            }
        }
    }
}
