//! Small labeled synthetic datasets with known structure.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data_io::DataMatrix;
use crate::error::{Error, Result};

/// A dataset and its ground-truth classes.
#[derive(Debug, Clone)]
pub struct Labeled {
    pub data: DataMatrix,
    pub classes: Vec<usize>,
}

fn normal(std: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, std).map_err(|e| Error::InvalidValue {
        key: "std".into(),
        message: e.to_string(),
    })
}

/// Isotropic Gaussian blobs, `n / centers.len()` points per center (the
/// remainder goes to the first centers), samples grouped by class.
pub fn gaussian_blobs(centers: &[[f64; 2]], n: usize, std: f64, seed: u64) -> Result<Labeled> {
    if centers.is_empty() || n < 2 {
        return Err(Error::InvalidData("need at least one center and two samples".into()));
    }
    let noise = normal(std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = centers.len();
    let mut rows = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        let count = n / k + usize::from(c < n % k);
        for _ in 0..count {
            rows.push(vec![
                center[0] + noise.sample(&mut rng),
                center[1] + noise.sample(&mut rng),
            ]);
            classes.push(c);
        }
    }
    Ok(Labeled {
        data: DataMatrix::from_rows(&rows)?,
        classes,
    })
}

/// Three unit-variance blobs on a triangle with side 10, i.e. centers ten
/// standard deviations apart.
pub fn three_blobs(n: usize, seed: u64) -> Result<Labeled> {
    let side = 10.0;
    let centers = [[0.0, 0.0], [side, 0.0], [side / 2.0, side * 3f64.sqrt() / 2.0]];
    gaussian_blobs(&centers, n, 1.0, seed)
}

/// Two interleaving half circles with Gaussian noise; the upper moon is
/// class 0.
pub fn two_moons(n: usize, noise_std: f64, seed: u64) -> Result<Labeled> {
    if n < 2 {
        return Err(Error::InvalidData("two moons need at least two samples".into()));
    }
    let noise = normal(noise_std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outer = n - n / 2;
    let inner = n / 2;
    let mut rows = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    let angle = |i: usize, m: usize| {
        if m > 1 {
            std::f64::consts::PI * i as f64 / (m - 1) as f64
        } else {
            0.0
        }
    };
    for i in 0..outer {
        let t = angle(i, outer);
        rows.push(vec![t.cos(), t.sin()]);
        classes.push(0);
    }
    for i in 0..inner {
        let t = angle(i, inner);
        rows.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
        classes.push(1);
    }
    for r in rows.iter_mut() {
        r[0] += noise.sample(&mut rng);
        r[1] += noise.sample(&mut rng);
    }
    Ok(Labeled {
        data: DataMatrix::from_rows(&rows)?,
        classes,
    })
}

/// Pure noise features, for uninformative kernels.
pub fn uniform_noise(n: usize, d: usize, seed: u64) -> Result<DataMatrix> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DataMatrix::new(DMatrix::from_fn(n, d, |_, _| rng.random::<f64>()))
}
