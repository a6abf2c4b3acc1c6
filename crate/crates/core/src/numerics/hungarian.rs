use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A perfect matching of rows to columns. `perm[i]` is the column assigned
/// to row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub cost: f64,
}

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(c^3)).
pub fn hungarian(cost: &DMatrix<f64>) -> Result<Assignment> {
    if !cost.is_square() {
        return Err(Error::Dimension(format!(
            "assignment needs a square cost matrix, got {}x{}",
            cost.nrows(),
            cost.ncols()
        )));
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("cost matrix has non-finite entries".into()));
    }
    let n = cost.nrows();
    if n == 0 {
        return Ok(Assignment {
            perm: Vec::new(),
            cost: 0.0,
        });
    }

    // 1-based arrays; index 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched_row[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    let cost = perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    Ok(Assignment { perm, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cost: &DMatrix<f64>) -> f64 {
        fn rec(cost: &DMatrix<f64>, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == cost.nrows() {
                *best = best.min(acc);
                return;
            }
            for j in 0..cost.ncols() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, row + 1, used, acc + cost[(row, j)], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.ncols()], 0.0, &mut best);
        best
    }

    #[test]
    fn two_by_two() {
        let a = hungarian(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert_eq!(a, Assignment { perm: vec![0, 1], cost: 2.0 });
        let a = hungarian(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert_eq!(a, Assignment { perm: vec![1, 0], cost: 2.0 });
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            hungarian(&DMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn five_by_five_integer_matches_exhaustive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let cost = DMatrix::from_fn(5, 5, |_, _| rng.random_range(0..20) as f64);
            let a = hungarian(&cost).unwrap();
            assert_eq!(a.cost, brute_force(&cost));
        }
    }

    proptest! {
        #[test]
        fn matches_exhaustive(c in 1usize..=7, v in proptest::collection::vec(-50.0f64..50.0, 49)) {
            let cost = DMatrix::from_fn(c, c, |i, j| v[i * 7 + j]);
            let a = hungarian(&cost).unwrap();
            let mut seen = vec![false; c];
            for &j in &a.perm {
                prop_assert!(!seen[j]);
                seen[j] = true;
            }
            let sum: f64 = a.perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
            prop_assert_eq!(sum, a.cost);
            prop_assert!((a.cost - brute_force(&cost)).abs() < 1e-9);
        }
    }
}
