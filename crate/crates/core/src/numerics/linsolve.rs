use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Cholesky factor of a symmetric positive-definite matrix. Factor once,
/// then solve from any number of threads.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Cholesky::new(a.clone())
            .map(|chol| Self { chol })
            .ok_or(Error::NotPositiveDefinite)
    }

    pub fn n(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.n() {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, factor is {}x{}",
                b.nrows(),
                self.n(),
                self.n()
            )));
        }
        Ok(self.chol.solve(b))
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

pub fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    SpdFactor::new(a)?.solve(b)
}
