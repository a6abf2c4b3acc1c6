//! Base kernel construction.
//!
//! Two fixed recipes are provided: a 12-member bank for clustering (seven
//! Gaussians, a linear kernel and four polynomials) and a 7-member bank for
//! semi-supervised classification. Every member is symmetrized and rescaled
//! so that its largest absolute entry is 1.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data_io::{read_matrix, write_matrix, DataMatrix};
use crate::error::{Error, Result};

const CLUSTERING_WIDTHS: [f64; 7] = [0.01, 0.05, 0.1, 1.0, 10.0, 50.0, 100.0];
const SSL_WIDTHS: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `exp(-|x - y|^2 / (t * d_max^2))`
    Gaussian { t: f64 },
    Linear,
    /// `(a + <x, y>)^b`
    Polynomial { a: f64, b: u32 },
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Gaussian { t } => write!(f, "gaussian:{t}"),
            KernelKind::Linear => write!(f, "linear"),
            KernelKind::Polynomial { a, b } => write!(f, "polynomial:{a}:{b}"),
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidValue {
            key: "kernel".into(),
            message: format!("cannot parse kernel descriptor {s:?}"),
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["linear"] => Ok(KernelKind::Linear),
            ["gaussian", t] => {
                let t: f64 = t.parse().map_err(|_| bad())?;
                if t > 0.0 && t.is_finite() {
                    Ok(KernelKind::Gaussian { t })
                } else {
                    Err(bad())
                }
            }
            ["polynomial", a, b] => {
                let a: f64 = a.parse().map_err(|_| bad())?;
                let b: u32 = b.parse().map_err(|_| bad())?;
                if b == 0 || !a.is_finite() {
                    return Err(bad());
                }
                Ok(KernelKind::Polynomial { a, b })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
    kind: KernelKind,
}

impl KernelMatrix {
    /// Wraps `values` after symmetrizing them as `(H + H^T) / 2`.
    pub fn new(values: DMatrix<f64>, kind: KernelKind) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::Dimension(format!(
                "kernel must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("kernel has non-finite entries".into()));
        }
        Ok(Self {
            values: symmetrize(values),
            kind,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Squared Euclidean distances between rows, with the largest one.
pub fn pairwise_sq_dists(x: &DataMatrix) -> (DMatrix<f64>, f64) {
    let v = x.values();
    let n = v.nrows();
    let mut d2 = DMatrix::zeros(n, n);
    let mut max = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for k in 0..v.ncols() {
                let diff = v[(i, k)] - v[(j, k)];
                s += diff * diff;
            }
            d2[(i, j)] = s;
            d2[(j, i)] = s;
            max = max.max(s);
        }
    }
    (d2, max)
}

pub fn gaussian_kernel(d2: &DMatrix<f64>, t: f64, dmax2: f64) -> Result<KernelMatrix> {
    if dmax2 <= 0.0 {
        return Err(Error::DegenerateData);
    }
    let scale = t * dmax2;
    let values = d2.map(|d| (-d / scale).exp());
    KernelMatrix::new(values, KernelKind::Gaussian { t })
}

pub fn linear_kernel(x: &DataMatrix) -> KernelMatrix {
    let v = x.values();
    KernelMatrix::new(v * v.transpose(), KernelKind::Linear).expect("Gram matrix of finite data")
}

pub fn polynomial_kernel(x: &DataMatrix, a: f64, b: u32) -> KernelMatrix {
    let v = x.values();
    let b_i32 = i32::try_from(b).unwrap_or(i32::MAX);
    let values = (v * v.transpose()).map(|g| (a + g).powi(b_i32));
    KernelMatrix::new(values, KernelKind::Polynomial { a, b }).expect("finite polynomial kernel")
}

/// Divides by the largest absolute entry.
pub fn rescale_kernel(h: &KernelMatrix) -> Result<KernelMatrix> {
    let max = h.values.amax();
    if max == 0.0 {
        return Err(Error::DegenerateKernel);
    }
    Ok(KernelMatrix {
        values: h.values.map(|v| v / max),
        kind: h.kind,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    Clustering12,
    Ssl7,
    Custom(Vec<KernelKind>),
}

impl Recipe {
    pub fn kinds(&self) -> Vec<KernelKind> {
        match self {
            Recipe::Clustering12 => {
                let mut kinds: Vec<KernelKind> = CLUSTERING_WIDTHS
                    .iter()
                    .map(|&t| KernelKind::Gaussian { t })
                    .collect();
                kinds.push(KernelKind::Linear);
                for a in [0.0, 1.0] {
                    for b in [2, 4] {
                        kinds.push(KernelKind::Polynomial { a, b });
                    }
                }
                kinds
            }
            Recipe::Ssl7 => {
                let mut kinds: Vec<KernelKind> = SSL_WIDTHS
                    .iter()
                    .map(|&t| KernelKind::Gaussian { t })
                    .collect();
                kinds.push(KernelKind::Linear);
                kinds.push(KernelKind::Polynomial { a: 0.0, b: 2 });
                kinds.push(KernelKind::Polynomial { a: 1.0, b: 2 });
                kinds
            }
            Recipe::Custom(kinds) => kinds.clone(),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recipe::Clustering12 => write!(f, "clustering12"),
            Recipe::Ssl7 => write!(f, "ssl7"),
            Recipe::Custom(kinds) => {
                write!(f, "custom:")?;
                for (i, k) in kinds.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Recipe {
    type Err = Error;

    /// `clustering12`, `ssl7`, or `custom:` followed by comma-separated
    /// kernel descriptors such as `gaussian:1,linear,polynomial:1:2`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "clustering12" => Ok(Recipe::Clustering12),
            "ssl7" => Ok(Recipe::Ssl7),
            other => {
                let list = other.strip_prefix("custom:").ok_or_else(|| Error::InvalidValue {
                    key: "recipe".into(),
                    message: format!("unknown recipe {other:?}"),
                })?;
                let kinds = list
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<Vec<KernelKind>>>()?;
                if kinds.is_empty() {
                    return Err(Error::InvalidValue {
                        key: "recipe".into(),
                        message: "custom recipe lists no kernels".into(),
                    });
                }
                Ok(Recipe::Custom(kinds))
            }
        }
    }
}

/// An ordered, immutable set of same-sized base kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    kernels: Vec<KernelMatrix>,
    recipe_name: String,
}

impl KernelBank {
    pub fn new(kernels: Vec<KernelMatrix>, recipe_name: impl Into<String>) -> Result<Self> {
        let Some(first) = kernels.first() else {
            return Err(Error::InvalidData("kernel bank is empty".into()));
        };
        let n = first.n();
        if let Some(k) = kernels.iter().find(|k| k.n() != n) {
            return Err(Error::Dimension(format!(
                "bank members must share n={n}, found {}",
                k.n()
            )));
        }
        Ok(Self {
            kernels,
            recipe_name: recipe_name.into(),
        })
    }

    pub fn kernels(&self) -> &[KernelMatrix] {
        &self.kernels
    }

    pub fn get(&self, i: usize) -> Option<&KernelMatrix> {
        self.kernels.get(i)
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn n(&self) -> usize {
        self.kernels[0].n()
    }

    pub fn recipe_name(&self) -> &str {
        &self.recipe_name
    }

    /// Bank holding only member `i`.
    pub fn single(&self, i: usize) -> Option<KernelBank> {
        let k = self.kernels.get(i)?.clone();
        Some(KernelBank {
            recipe_name: format!("{}[{i}]", self.recipe_name),
            kernels: vec![k],
        })
    }

    /// Unweighted mean of the members.
    pub fn mean(&self) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.n(), self.n());
        for k in &self.kernels {
            acc += k.values();
        }
        acc / self.len() as f64
    }

    /// Writes `kernel_XX.csv` files plus a `manifest.txt` listing kinds in order.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = format!("recipe={}\n", self.recipe_name);
        for (i, k) in self.kernels.iter().enumerate() {
            let file = format!("kernel_{i:02}.csv");
            write_matrix(dir.join(&file), k.values(), ',')?;
            manifest.push_str(&format!("{file}={}\n", k.kind()));
        }
        let path = dir.join("manifest.txt");
        fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<KernelBank> {
        let dir = dir.as_ref();
        let path = dir.join("manifest.txt");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut recipe = String::from("cached");
        let mut kernels = Vec::new();
        for entry in crate::data_io::parse_key_values(&text, &path)? {
            if entry.key == "recipe" {
                recipe = entry.value;
                continue;
            }
            let kind: KernelKind = entry.value.parse()?;
            let values = read_matrix(&dir.join(&entry.key), ',')?;
            kernels.push(KernelMatrix::new(values, kind)?);
        }
        KernelBank::new(kernels, recipe)
    }
}

/// Builds one unscaled kernel of the given kind.
pub fn build_kernel(
    x: &DataMatrix,
    kind: KernelKind,
    dists: &(DMatrix<f64>, f64),
) -> Result<KernelMatrix> {
    match kind {
        KernelKind::Gaussian { t } => gaussian_kernel(&dists.0, t, dists.1),
        KernelKind::Linear => Ok(linear_kernel(x)),
        KernelKind::Polynomial { a, b } => Ok(polynomial_kernel(x, a, b)),
    }
}

/// Builds and rescales every member of `recipe`, in recipe order.
pub fn build_bank(x: &DataMatrix, recipe: &Recipe) -> Result<KernelBank> {
    let kinds = recipe.kinds();
    let dists = pairwise_sq_dists(x);
    let kernels = kinds
        .par_iter()
        .map(|&kind| rescale_kernel(&build_kernel(x, kind, &dists)?))
        .collect::<Result<Vec<_>>>()?;
    KernelBank::new(kernels, recipe.name())
}
