//! Experiment spec files: `key=value` lines, dotted keys for the solver
//! settings and the parameter sweep.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use smkl::data_io::{parse_key_values, parse_value};
use smkl::kernel_bank::Recipe;
use smkl::{Error, Result, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Clustering,
    Ssl,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "clustering" => Ok(Mode::Clustering),
            "ssl" => Ok(Mode::Ssl),
            other => Err(Error::InvalidValue {
                key: "mode".into(),
                message: format!("{other:?} is not clustering or ssl"),
            }),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Clustering => "clustering",
            Mode::Ssl => "ssl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MethodName {
    Smkl,
    Kgl,
    Pmkl,
}

impl FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "smkl" => Ok(MethodName::Smkl),
            "kgl" => Ok(MethodName::Kgl),
            "pmkl" => Ok(MethodName::Pmkl),
            other => Err(Error::InvalidValue {
                key: "method".into(),
                message: format!("{other:?} is not smkl, kgl or pmkl"),
            }),
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodName::Smkl => "smkl",
            MethodName::Kgl => "kgl",
            MethodName::Pmkl => "pmkl",
        })
    }
}

/// Which base kernel a single-kernel method uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPick {
    Index(usize),
    /// Every kernel of the bank, one point each.
    Best,
}

impl FromStr for KernelPick {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "best" => Ok(KernelPick::Best),
            other => other
                .parse()
                .map(KernelPick::Index)
                .map_err(|_| Error::InvalidValue {
                    key: "kernel_index".into(),
                    message: format!("{other:?} is neither an index nor \"best\""),
                }),
        }
    }
}

impl fmt::Display for KernelPick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelPick::Index(i) => write!(f, "{i}"),
            KernelPick::Best => f.write_str("best"),
        }
    }
}

/// Explicit value lists; an empty list means "use the solver setting".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sweep {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Sweep {
    pub fn alphas(&self, cfg: &SolverConfig) -> Vec<f64> {
        or_default(&self.alpha, cfg.alpha)
    }

    pub fn betas(&self, cfg: &SolverConfig) -> Vec<f64> {
        or_default(&self.beta, cfg.beta)
    }

    pub fn gammas(&self, cfg: &SolverConfig) -> Vec<f64> {
        or_default(&self.gamma, cfg.gamma)
    }

    /// Names of the swept parameters with more than one value.
    pub fn axes(&self) -> Vec<&'static str> {
        [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
        ]
        .into_iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(k, _)| k)
        .collect()
    }
}

fn or_default(values: &[f64], fallback: f64) -> Vec<f64> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub data: PathBuf,
    pub labels: PathBuf,
    pub delimiter: char,
    pub mode: Mode,
    pub methods: Vec<MethodName>,
    pub recipe: Recipe,
    pub kernel_index: Option<KernelPick>,
    pub label_fractions: Vec<f64>,
    pub repeats: usize,
    pub sweep: Sweep,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    /// Parallel parameter points; 0 uses every core.
    pub workers: usize,
    pub save_matrices: bool,
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| parse_value(key, v))
        .collect()
}

fn parse_delimiter(value: &str) -> Result<char> {
    match value {
        "tab" | "\\t" => Ok('\t'),
        "space" => Ok(' '),
        "comma" => Ok(','),
        "semicolon" => Ok(';'),
        _ => {
            let mut chars = value.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(Error::InvalidValue {
                    key: "delimiter".into(),
                    message: format!("{value:?} is not a single character"),
                }),
            }
        }
    }
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl ExperimentSpec {
    /// Reads a spec file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<Self> {
        let entries = parse_key_values(text, path)?;
        let mut seen = BTreeSet::new();
        let mut data = None;
        let mut labels = None;
        let mut delimiter = ',';
        let mut mode = Mode::Clustering;
        let mut methods = vec![MethodName::Smkl];
        let mut recipe = None;
        let mut kernel_index = None;
        let mut label_fractions = Vec::new();
        let mut repeats = 1;
        let mut sweep = Sweep::default();
        let mut solver = SolverConfig::default();
        let mut out_dir = base.join("out");
        let mut workers = 0;
        let mut save_matrices = false;

        for e in &entries {
            if !seen.insert(e.key.clone()) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: e.line,
                    message: format!("duplicate key {:?}", e.key),
                });
            }
            let key = e.key.as_str();
            let value = e.value.as_str();
            let at_line = |err: Error| Error::Parse {
                path: path.to_path_buf(),
                line: e.line,
                message: err.to_string(),
            };
            match key {
                "data" => data = Some(resolve(base, value)),
                "labels" => labels = Some(resolve(base, value)),
                "delimiter" => delimiter = parse_delimiter(value).map_err(at_line)?,
                "mode" => mode = value.parse().map_err(at_line)?,
                "method" => methods = list(key, value).map_err(at_line)?,
                "recipe" => recipe = Some(value.parse().map_err(at_line)?),
                "kernel_index" => kernel_index = Some(value.parse().map_err(at_line)?),
                "label_fraction" => label_fractions = list(key, value).map_err(at_line)?,
                "repeats" => repeats = parse_value(key, value).map_err(at_line)?,
                "sweep.alpha" => sweep.alpha = list(key, value).map_err(at_line)?,
                "sweep.beta" => sweep.beta = list(key, value).map_err(at_line)?,
                "sweep.gamma" => sweep.gamma = list(key, value).map_err(at_line)?,
                "out_dir" => out_dir = resolve(base, value),
                "workers" => workers = parse_value(key, value).map_err(at_line)?,
                "save_matrices" => save_matrices = parse_value(key, value).map_err(at_line)?,
                _ => match key.strip_prefix("solver.") {
                    Some(field) => solver.set(field, value).map_err(at_line)?,
                    None => return Err(Error::UnknownKey(key.to_string())),
                },
            }
        }

        let missing = |key: &str| Error::InvalidValue {
            key: key.into(),
            message: "required key is missing".into(),
        };
        let mut dedup = BTreeSet::new();
        methods.retain(|m| dedup.insert(*m));
        let recipe = recipe.unwrap_or(match mode {
            Mode::Clustering => Recipe::Clustering12,
            Mode::Ssl => Recipe::Ssl7,
        });
        let spec = ExperimentSpec {
            data: data.ok_or_else(|| missing("data"))?,
            labels: labels.ok_or_else(|| missing("labels"))?,
            delimiter,
            mode,
            methods,
            recipe,
            kernel_index,
            label_fractions,
            repeats,
            sweep,
            solver,
            out_dir,
            workers,
            save_matrices,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |key: &str, message: String| Error::InvalidValue {
            key: key.into(),
            message,
        };
        self.solver.validate()?;
        if self.methods.is_empty() {
            return Err(invalid("method", "no method given".into()));
        }
        if self.methods.contains(&MethodName::Kgl) && self.kernel_index.is_none() {
            return Err(invalid(
                "kernel_index",
                "kgl needs a kernel index or \"best\"".into(),
            ));
        }
        if let Some(KernelPick::Index(i)) = self.kernel_index {
            let r = self.recipe.kinds().len();
            if i >= r {
                return Err(invalid(
                    "kernel_index",
                    format!("{i} is out of range for a bank of {r} kernels"),
                ));
            }
        }
        for (key, values) in [
            ("sweep.alpha", &self.sweep.alpha),
            ("sweep.beta", &self.sweep.beta),
            ("sweep.gamma", &self.sweep.gamma),
        ] {
            if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(invalid(key, format!("{v} must be positive")));
            }
        }
        match self.mode {
            Mode::Ssl => {
                if self.label_fractions.is_empty() {
                    return Err(invalid("label_fraction", "ssl mode needs label_fraction".into()));
                }
                if let Some(f) = self.label_fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
                    return Err(invalid("label_fraction", format!("{f} is not in (0, 1)")));
                }
                if self.repeats == 0 {
                    return Err(invalid("repeats", "must be at least 1".into()));
                }
            }
            Mode::Clustering => {
                if !self.label_fractions.is_empty() {
                    return Err(invalid(
                        "label_fraction",
                        "only meaningful in ssl mode".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Normalized `key=value` listing of every setting, paths excluded so
    /// that the text does not depend on where the files live.
    pub fn describe(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let methods = self
            .methods
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let s = &self.solver;
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("mode", self.mode.to_string());
        push("method", methods);
        push("recipe", self.recipe.to_string());
        if let Some(k) = self.kernel_index {
            push("kernel_index", k.to_string());
        }
        if self.mode == Mode::Ssl {
            push("label_fraction", join(&self.label_fractions));
            push("repeats", self.repeats.to_string());
        }
        push("sweep.alpha", join(&self.sweep.alphas(s)));
        push("sweep.beta", join(&self.sweep.betas(s)));
        push("sweep.gamma", join(&self.sweep.gammas(s)));
        push("solver.c", s.c.map_or("inferred".into(), |c| c.to_string()));
        push("solver.max_iter", s.max_iter.to_string());
        push("solver.rel_tol", s.rel_tol.to_string());
        push("solver.seed", s.seed.to_string());
        push("solver.adaptive_alpha", s.adaptive_alpha.to_string());
        push("solver.kmeans_restarts", s.kmeans_restarts.to_string());
        push("solver.epsilon_w", s.epsilon_w.to_string());
        push("solver.ridge", s.ridge.to_string());
        out
    }
}
