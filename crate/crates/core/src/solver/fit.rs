use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data_io::{LabelMask, LabelVector, SolverConfig};
use crate::error::{Error, Result};
use crate::kernel_bank::{KernelBank, KernelMatrix};
use crate::numerics::{kmeans, smallest_eigenpairs};

use super::graph::{row_sq_dists, AffinityGraph};
use super::updates::{
    combine_kernels, count_below, graph_objective, kernel_fidelity, one_hot_labeled,
    pmkl_update_theta, project_psd, update_k, update_p_ssl, update_s, update_w,
};

/// Which kernel model drives the fit.
#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    /// Consensus kernel learned jointly with self-weighted base kernels.
    Smkl(&'a KernelBank),
    /// One fixed kernel.
    Kgl(&'a KernelMatrix),
    /// `K = sum_i theta_i H_i` with `sum_i sqrt(theta_i) = 1`.
    Pmkl(&'a KernelBank),
}

impl Method<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Smkl(_) => "smkl",
            Method::Kgl(_) => "kgl",
            Method::Pmkl(_) => "pmkl",
        }
    }

    fn n(&self) -> usize {
        match self {
            Method::Smkl(b) | Method::Pmkl(b) => b.n(),
            Method::Kgl(k) => k.n(),
        }
    }
}

/// What the indicator matrix encodes.
#[derive(Debug, Clone, Copy)]
pub enum Task<'a> {
    Clustering,
    Ssl {
        labels: &'a LabelVector,
        mask: &'a LabelMask,
    },
}

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Keep the kernel weights at their initial values for the whole run.
    pub freeze_weights: bool,
    /// Replace the random initial affinity.
    pub initial_s: Option<DMatrix<f64>>,
}

/// How the final labels were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    /// Connected components of S, which numbered exactly c.
    Components,
    /// k-means on the rows of P.
    KMeans,
    /// Row-wise argmax of P.
    Argmax,
}

impl LabelSource {
    pub fn name(&self) -> &'static str {
        match self {
            LabelSource::Components => "components",
            LabelSource::KMeans => "kmeans",
            LabelSource::Argmax => "argmax",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Objective at the start of the iteration.
    pub objective_before: f64,
    /// Objective after the S, K and P updates, with the same weights and
    /// alpha as `objective_before`.
    pub objective: f64,
    /// Alpha used during the iteration.
    pub alpha: f64,
    /// Near-zero Laplacian eigenvalues after the P update (clustering only).
    pub zero_eigenvalues: Option<usize>,
    /// Smallest eigenvalue of K before the PSD projection (SMKL only).
    pub k_min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub method: &'static str,
    pub graph: AffinityGraph,
    pub k: DMatrix<f64>,
    /// Kernel weights w for SMKL, theta for PMKL, `[1]` for KGL.
    pub weights: Vec<f64>,
    pub p: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub alpha_final: f64,
    pub label_source: LabelSource,
}

impl FitResult {
    pub fn s(&self) -> &DMatrix<f64> {
        self.graph.s()
    }

    /// Structured key-value summary; matrices are omitted.
    pub fn summary(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let labels = self
            .labels
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "method={}\niterations={}\nconverged={}\nalpha_final={}\nweights={}\nlabel_source={}\nobjective_trace={}\nlabels={}\n",
            self.method,
            self.iterations,
            self.converged,
            self.alpha_final,
            join(&self.weights),
            self.label_source.name(),
            join(&self.objective_trace),
            labels
        )
    }
}

/// Nonnegative columns with unit sum, filled column by column from `seed`.
pub fn random_affinity(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DMatrix::from_fn(n, n, |_, _| 0.0);
    for j in 0..n {
        for i in 0..n {
            s[(i, j)] = rng.random::<f64>();
        }
        let total: f64 = s.column(j).sum();
        if total > 0.0 {
            s.column_mut(j).unscale_mut(total);
        } else {
            s.column_mut(j).fill(1.0 / n as f64);
        }
    }
    s
}

pub fn fit_clustering(bank: &KernelBank, cfg: &SolverConfig) -> Result<FitResult> {
    fit(Method::Smkl(bank), Task::Clustering, cfg, &FitOptions::default())
}

pub fn fit_ssl(
    bank: &KernelBank,
    labels: &LabelVector,
    mask: &LabelMask,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    fit(
        Method::Smkl(bank),
        Task::Ssl { labels, mask },
        cfg,
        &FitOptions::default(),
    )
}

pub fn fit_kgl(kernel: &KernelMatrix, cfg: &SolverConfig) -> Result<FitResult> {
    fit(Method::Kgl(kernel), Task::Clustering, cfg, &FitOptions::default())
}

pub fn fit_pmkl(bank: &KernelBank, cfg: &SolverConfig) -> Result<FitResult> {
    fit(Method::Pmkl(bank), Task::Clustering, cfg, &FitOptions::default())
}

struct IndicatorStep {
    p: DMatrix<f64>,
    zero_eigenvalues: Option<usize>,
}

enum Indicator<'a> {
    Clustering { c: usize },
    Ssl { y_l: DMatrix<f64>, mask: &'a LabelMask, ridge: f64 },
}

impl Indicator<'_> {
    fn update(&self, graph: &AffinityGraph) -> Result<IndicatorStep> {
        match self {
            Indicator::Clustering { c } => {
                let l = graph.laplacian();
                let n = l.nrows();
                let eig = smallest_eigenpairs(l, (*c + 1).min(n))?;
                let threshold = 1e-8 * l.norm();
                let zeros = count_below(&eig.values, threshold);
                let p = eig.vectors.columns(0, *c).into_owned();
                Ok(IndicatorStep {
                    p,
                    zero_eigenvalues: Some(zeros),
                })
            }
            Indicator::Ssl { y_l, mask, ridge } => Ok(IndicatorStep {
                p: update_p_ssl(graph.laplacian(), y_l, mask, *ridge)?,
                zero_eigenvalues: None,
            }),
        }
    }
}

/// Kernel-side state: the current K and its weights.
struct KernelState<'a> {
    method: Method<'a>,
    k: DMatrix<f64>,
    weights: Vec<f64>,
}

impl<'a> KernelState<'a> {
    fn init(method: Method<'a>, epsilon_w: f64) -> Self {
        match method {
            Method::Smkl(bank) => {
                let k = bank.mean();
                let weights = update_w(bank, &k, epsilon_w);
                Self { method, k, weights }
            }
            Method::Kgl(h) => Self {
                method,
                k: h.values().clone(),
                weights: vec![1.0],
            },
            Method::Pmkl(bank) => {
                let r = bank.len() as f64;
                let weights = vec![1.0 / (r * r); bank.len()];
                let k = combine_kernels(bank, &weights);
                Self { method, k, weights }
            }
        }
    }

    /// Kernel fidelity term, zero except for SMKL.
    fn fidelity(&self, beta: f64) -> f64 {
        match self.method {
            Method::Smkl(bank) => beta * kernel_fidelity(bank, &self.k, &self.weights),
            _ => 0.0,
        }
    }

    /// Minimizes over K (and theta for PMKL) with S fixed. Returns the
    /// smallest eigenvalue of the unprojected SMKL update.
    fn update(&mut self, s: &DMatrix<f64>, beta: f64) -> Result<Option<f64>> {
        match self.method {
            Method::Smkl(bank) => {
                let raw = update_k(s, bank, &self.weights, beta)?;
                let (k, min) = project_psd(raw)?;
                self.k = k;
                Ok(Some(min))
            }
            Method::Kgl(_) => Ok(None),
            Method::Pmkl(bank) => {
                self.weights = pmkl_update_theta(bank, s)?;
                self.k = combine_kernels(bank, &self.weights);
                Ok(None)
            }
        }
    }

    fn reweight(&mut self, epsilon_w: f64) {
        if let Method::Smkl(bank) = self.method {
            self.weights = update_w(bank, &self.k, epsilon_w);
        }
    }
}

fn total_objective(
    graph: &AffinityGraph,
    kernel: &KernelState,
    p: &DMatrix<f64>,
    alpha: f64,
    cfg: &SolverConfig,
) -> f64 {
    graph_objective(graph, &kernel.k, p, alpha, cfg.gamma).total() + kernel.fidelity(cfg.beta)
}

/// Alternating minimization over S, K (with its weights) and P.
pub fn fit(method: Method, task: Task, cfg: &SolverConfig, opts: &FitOptions) -> Result<FitResult> {
    cfg.validate()?;
    let n = method.n();
    let indicator = match task {
        Task::Clustering => {
            let c = cfg.clusters()?;
            if c < 2 || c > n {
                return Err(Error::InvalidValue {
                    key: "c".into(),
                    message: format!("{c} clusters for {n} samples"),
                });
            }
            Indicator::Clustering { c }
        }
        Task::Ssl { labels, mask } => {
            if labels.len() != n || mask.n() != n {
                return Err(Error::Dimension(format!(
                    "{} labels and a mask over {} samples for a {n}x{n} kernel",
                    labels.len(),
                    mask.n()
                )));
            }
            let c = cfg.c.unwrap_or(0).max(labels.num_classes());
            Indicator::Ssl {
                y_l: one_hot_labeled(labels, mask, c)?,
                mask,
                ridge: cfg.ridge,
            }
        }
    };
    let adaptive = cfg.adaptive_alpha && matches!(indicator, Indicator::Clustering { .. });

    let s0 = match &opts.initial_s {
        Some(s) => {
            if s.shape() != (n, n) || s.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::InvalidData(
                    "initial affinity must be a nonnegative n x n matrix".into(),
                ));
            }
            s.clone()
        }
        None => random_affinity(n, cfg.seed),
    };
    let mut graph = AffinityGraph::from_s(s0);
    let mut kernel = KernelState::init(method, cfg.epsilon_w);
    let mut p = indicator.update(&graph)?.p;
    let mut alpha = cfg.alpha;

    let mut history: Vec<IterationRecord> = Vec::new();
    let mut converged = false;
    for iter in 0..cfg.max_iter {
        let objective_before = total_objective(&graph, &kernel, &p, alpha, cfg);

        let g = row_sq_dists(&p);
        graph = update_s(&kernel.k, &g, alpha, cfg.gamma, Some(graph.s()))?.graph;
        let k_min_eigenvalue = kernel.update(graph.s(), cfg.beta)?;
        let step = indicator.update(&graph)?;
        p = step.p;

        let objective = total_objective(&graph, &kernel, &p, alpha, cfg);
        let record = IterationRecord {
            objective_before,
            objective,
            alpha,
            zero_eigenvalues: step.zero_eigenvalues,
            k_min_eigenvalue,
        };

        let mut alpha_changed = false;
        if adaptive {
            if let (Some(zeros), Indicator::Clustering { c }) = (step.zero_eigenvalues, &indicator) {
                if zeros < *c {
                    alpha *= 2.0;
                    alpha_changed = true;
                } else if zeros > *c {
                    alpha /= 2.0;
                    alpha_changed = true;
                }
            }
        }
        if !opts.freeze_weights {
            kernel.reweight(cfg.epsilon_w);
        }

        let previous = history.last().map(|r| r.objective);
        history.push(record);
        log::debug!("iteration {iter}: objective {objective:e}, alpha {alpha}");
        if let Some(prev) = previous {
            let change = (objective - prev).abs() / prev.abs().max(1.0);
            if change < cfg.rel_tol && !alpha_changed {
                converged = true;
                break;
            }
        }
        if !objective.is_finite() {
            return Err(Error::InvalidData(format!(
                "objective became non-finite at iteration {iter}"
            )));
        }
    }

    let (labels, label_source) = match &indicator {
        Indicator::Clustering { c } => {
            let comps = graph.components();
            if comps.count == *c {
                (comps.labels, LabelSource::Components)
            } else {
                (
                    kmeans(&p, *c, cfg.kmeans_restarts, cfg.seed)?,
                    LabelSource::KMeans,
                )
            }
        }
        Indicator::Ssl { .. } => (super::updates::decide_labels(&p), LabelSource::Argmax),
    };

    Ok(FitResult {
        method: method.name(),
        objective_trace: history.iter().map(|r| r.objective).collect(),
        iterations: history.len(),
        graph,
        k: kernel.k,
        weights: kernel.weights,
        p,
        labels,
        history,
        converged,
        alpha_final: alpha,
        label_source,
    })
}
