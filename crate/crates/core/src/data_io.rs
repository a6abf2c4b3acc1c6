//! Loading of data matrices, label files and solver configuration, plus the
//! stratified labeled/unlabeled split used by the semi-supervised protocol.
//!
//! All file formats are plain text:
//!
//! - dense matrix: one sample per line, delimiter-separated reals, no header;
//! - labels: one integer per line, `-1` marks an unlabeled sample;
//! - configuration: `key=value` lines, `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sentinel used in label files for samples whose class is unknown.
pub const UNLABELED: i64 = -1;

/// The raw input: `n` samples (rows) by `d` features (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    row_ids: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 samples, got {}",
                values.nrows()
            )));
        }
        if values.ncols() < 1 {
            return Err(Error::InvalidData("need at least 1 feature".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (col, row) = (pos / values.nrows(), pos % values.nrows());
            return Err(Error::InvalidData(format!(
                "non-finite entry at row {row}, column {col}"
            )));
        }
        Ok(Self {
            values,
            row_ids: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidData(format!(
                "row {i} has {} columns, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn with_row_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.nrows() {
            return Err(Error::Dimension(format!(
                "{} row ids for {} samples",
                ids.len(),
                self.nrows()
            )));
        }
        self.row_ids = Some(ids);
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row_ids(&self) -> Option<&[String]> {
        self.row_ids.as_deref()
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

/// Reads a delimiter-separated dense matrix. Blank lines are skipped.
pub fn load_dense_matrix(path: impl AsRef<Path>, delimiter: char) -> Result<DataMatrix> {
    let values = read_matrix(path.as_ref(), delimiter)?;
    DataMatrix::new(values)
}

/// Reads a dense matrix without the sample-count restrictions of [`DataMatrix`].
pub fn read_matrix(path: &Path, delimiter: char) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row_no = lineno + 1;
        let row = line
            .split(delimiter)
            .enumerate()
            .map(|(j, cell)| {
                let cell = cell.trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::NonNumeric {
                        path: path.to_path_buf(),
                        row: row_no,
                        col: j + 1,
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::RaggedRows {
                    path: path.to_path_buf(),
                    row: row_no,
                    expected: w,
                    found: row.len(),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    let d = width.unwrap_or(0);
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

/// Writes `m` in the dense text format. Values use the shortest decimal form
/// that parses back to the identical `f64`.
pub fn write_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>, delimiter: char) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(m, delimiter)).map_err(|e| Error::io(path, e))
}

pub fn format_matrix(m: &DMatrix<f64>, delimiter: char) -> String {
    let mut out = String::with_capacity(m.len() * 12);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(delimiter);
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Integer class labels, `-1` for unlabeled samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<i64>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<i64>) -> Result<Self> {
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l < UNLABELED) {
            return Err(Error::InvalidLabel {
                line: i + 1,
                label: l,
            });
        }
        let max = labels.iter().copied().max().unwrap_or(UNLABELED);
        if max < 0 {
            return Err(Error::NoLabels);
        }
        Ok(Self {
            labels,
            num_classes: max as usize + 1,
        })
    }

    /// Fully labeled vector from 0-based class ids.
    pub fn from_classes(classes: &[usize]) -> Result<Self> {
        Self::new(classes.iter().map(|&c| c as i64).collect())
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Class of sample `i`, `None` when unlabeled.
    pub fn class_of(&self, i: usize) -> Option<usize> {
        let l = self.labels[i];
        (l >= 0).then_some(l as usize)
    }

    /// Labels as class ids; unlabeled samples map to `None`.
    pub fn classes(&self) -> Vec<Option<usize>> {
        (0..self.len()).map(|i| self.class_of(i)).collect()
    }
}

pub fn load_labels(path: impl AsRef<Path>, n: usize) -> Result<LabelVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    // A single trailing blank line is the usual end-of-file newline artifact.
    let lines = match lines.split_last() {
        Some((last, rest)) if last.trim().is_empty() => rest,
        _ => &lines[..],
    };
    if lines.len() != n {
        return Err(Error::LabelCount {
            expected: n,
            found: lines.len(),
        });
    }
    let labels = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse::<i64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("cannot parse {:?} as an integer label", l.trim()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabelVector::new(labels)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Partition of `0..n` into labeled and unlabeled samples. Both index lists
/// are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl LabelMask {
    pub fn new(n: usize, mut labeled: Vec<usize>) -> Result<Self> {
        labeled.sort_unstable();
        labeled.dedup();
        if let Some(&bad) = labeled.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        let mut is_labeled = vec![false; n];
        for &i in &labeled {
            is_labeled[i] = true;
        }
        let unlabeled = (0..n).filter(|&i| !is_labeled[i]).collect();
        Ok(Self { labeled, unlabeled })
    }

    /// Mask taking every sample with a known label as labeled.
    pub fn from_labels(labels: &LabelVector) -> Self {
        let labeled = (0..labels.len())
            .filter(|&i| labels.class_of(i).is_some())
            .collect();
        Self::new(labels.len(), labeled).expect("indices are in range")
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn n(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }
}

/// Stratified random choice of `round(fraction * n)` labeled samples with at
/// least one sample of every class present in `labels`.
///
/// Class quotas follow the largest-remainder method on `fraction * n_k`,
/// after reserving one slot per class. Deterministic given `seed`.
pub fn split_labeled(labels: &LabelVector, fraction: f64, seed: u64) -> Result<LabelMask> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidValue {
            key: "label_fraction".into(),
            message: format!("{fraction} is not in (0, 1)"),
        });
    }
    let n = labels.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labels.num_classes()];
    for i in 0..n {
        if let Some(k) = labels.class_of(i) {
            members[k].push(i);
        }
    }
    let present: Vec<usize> = (0..members.len())
        .filter(|&k| !members[k].is_empty())
        .collect();
    let available: usize = present.iter().map(|&k| members[k].len()).sum();
    let slots = ((fraction * n as f64).round() as usize).min(available);
    if slots < present.len() {
        return Err(Error::FractionTooSmall {
            slots,
            classes: present.len(),
        });
    }

    let mut quota = vec![0usize; members.len()];
    for &k in &present {
        quota[k] = 1;
    }
    let mut remaining = slots - present.len();
    // Largest remainder on the ideal proportional share of the free slots.
    let free_total: usize = present.iter().map(|&k| members[k].len() - 1).sum();
    if remaining > 0 && free_total > 0 {
        let mut shares: Vec<(usize, f64)> = present
            .iter()
            .map(|&k| {
                let ideal = remaining as f64 * (members[k].len() - 1) as f64 / free_total as f64;
                (k, ideal)
            })
            .collect();
        for (k, ideal) in &shares {
            let whole = (ideal.floor() as usize).min(members[*k].len() - quota[*k]);
            quota[*k] += whole;
        }
        remaining = slots - quota.iter().sum::<usize>();
        shares.sort_by(|a, b| {
            let ra = a.1 - a.1.floor();
            let rb = b.1 - b.1.floor();
            rb.total_cmp(&ra).then(a.0.cmp(&b.0))
        });
        while remaining > 0 {
            let mut progressed = false;
            for (k, _) in &shares {
                if remaining == 0 {
                    break;
                }
                if quota[*k] < members[*k].len() {
                    quota[*k] += 1;
                    remaining -= 1;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled = Vec::with_capacity(slots);
    for (k, idx) in members.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        labeled.extend_from_slice(&idx[..quota[k]]);
    }
    LabelMask::new(n, labeled)
}

/// Solver hyper-parameters. `c` is optional here because the experiment
/// runner can infer it from the label file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: Option<usize>,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub adaptive_alpha: bool,
    pub kmeans_restarts: usize,
    pub epsilon_w: f64,
    pub ridge: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            c: None,
            max_iter: 200,
            rel_tol: 1e-5,
            seed: 0,
            adaptive_alpha: true,
            kmeans_restarts: 10,
            epsilon_w: 1e-12,
            ridge: 1e-8,
        }
    }
}

impl SolverConfig {
    pub const KEYS: [&'static str; 11] = [
        "alpha",
        "beta",
        "gamma",
        "c",
        "max_iter",
        "rel_tol",
        "seed",
        "adaptive_alpha",
        "kmeans_restarts",
        "epsilon_w",
        "ridge",
    ];

    /// Sets one field from its textual value. Range checks happen in
    /// [`SolverConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_value(key, value)?,
            "beta" => self.beta = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "c" => self.c = Some(parse_value(key, value)?),
            "max_iter" => self.max_iter = parse_value(key, value)?,
            "rel_tol" => self.rel_tol = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "adaptive_alpha" => self.adaptive_alpha = parse_value(key, value)?,
            "kmeans_restarts" => self.kmeans_restarts = parse_value(key, value)?,
            "epsilon_w" => self.epsilon_w = parse_value(key, value)?,
            "ridge" => self.ridge = parse_value(key, value)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("rel_tol", self.rel_tol),
            ("epsilon_w", self.epsilon_w),
            ("ridge", self.ridge),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidValue {
                    key: key.into(),
                    message: format!("{v} must be positive"),
                });
            }
        }
        if self.rel_tol >= 1.0 {
            return Err(Error::InvalidValue {
                key: "rel_tol".into(),
                message: format!("{} must be below 1", self.rel_tol),
            });
        }
        let counts = [
            ("max_iter", self.max_iter),
            ("kmeans_restarts", self.kmeans_restarts),
            ("c", self.c.unwrap_or(1)),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::InvalidValue {
                    key: key.into(),
                    message: "must be a positive integer".into(),
                });
            }
        }
        Ok(())
    }

    /// The class count, or an error naming the missing key.
    pub fn clusters(&self) -> Result<usize> {
        self.c.ok_or_else(|| Error::InvalidValue {
            key: "c".into(),
            message: "cluster count is not set".into(),
        })
    }

    pub fn with_clusters(mut self, c: usize) -> Self {
        self.c = Some(c);
        self
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SolverConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    for entry in parse_key_values(text, path)? {
        cfg.set(&entry.key, &entry.value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One `key=value` line of a configuration or experiment file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyValue {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits `key=value` text into entries, dropping blank lines and `#`
/// comments. Later duplicates are kept; callers apply entries in order.
pub fn parse_key_values(text: &str, path: &Path) -> Result<Vec<KeyValue>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected key=value, got {line:?}"),
            });
        };
        out.push(KeyValue {
            line: i + 1,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

/// Collapses entries into a map, keeping the last value per key.
pub fn key_value_map(entries: &[KeyValue]) -> BTreeMap<String, String> {
    entries
        .iter()
        .map(|e| (e.key.clone(), e.value.clone()))
        .collect()
}

pub fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::InvalidValue {
        key: key.to_string(),
        message: format!("cannot parse {value:?}"),
    })
}
