use rayon::prelude::*;

use smkl::data_io::{load_dense_matrix, load_labels, split_labeled, LabelMask};
use smkl::evaluation::{evaluate, EvalMode};
use smkl::kernel_bank::build_bank;
use smkl::solver::{fit, FitOptions, FitResult, Method, Task};
use smkl::{DataMatrix, Error, KernelBank, LabelVector, Result, SolverConfig};

use crate::spec::{ExperimentSpec, KernelPick, MethodName, Mode};

/// One cell of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub method: MethodName,
    /// Bank member for single-kernel methods.
    pub kernel: Option<usize>,
    pub fraction: Option<f64>,
    pub alpha: f64,
    /// `None` for methods without a kernel-fidelity term.
    pub beta: Option<f64>,
    pub gamma: f64,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMetrics {
    pub acc: Stat,
    pub nmi: Stat,
    pub iterations: Stat,
    /// Runs that met the stopping tolerance.
    pub converged: usize,
    pub runs: usize,
    /// Predicted labels of the first run.
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: Point,
    /// Human-readable kernel column: the recipe for bank methods, the member
    /// for single-kernel ones.
    pub kernel_label: String,
    pub outcome: std::result::Result<PointMetrics, PointFailure>,
}

impl PointResult {
    pub fn acc(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|m| m.acc.mean)
    }
}

/// Everything loaded before the grid runs.
pub struct Prepared {
    pub data: DataMatrix,
    pub truth: LabelVector,
    pub bank: KernelBank,
    pub clusters: usize,
}

pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared> {
    let data = load_dense_matrix(&spec.data, spec.delimiter)?;
    let truth = load_labels(&spec.labels, data.nrows())?;
    let bank = build_bank(&data, &spec.recipe)?;
    let clusters = spec.solver.c.unwrap_or(truth.num_classes());
    Ok(Prepared {
        data,
        truth,
        bank,
        clusters,
    })
}

/// The grid in report order: method, then kernel, fraction, alpha, beta,
/// gamma.
pub fn plan(spec: &ExperimentSpec, bank_len: usize) -> Vec<Point> {
    let cfg = &spec.solver;
    let fractions: Vec<Option<f64>> = match spec.mode {
        Mode::Clustering => vec![None],
        Mode::Ssl => spec.label_fractions.iter().map(|&f| Some(f)).collect(),
    };
    let mut points = Vec::new();
    for &method in &spec.methods {
        let kernels: Vec<Option<usize>> = match (method, spec.kernel_index) {
            (MethodName::Kgl, Some(KernelPick::Index(i))) => vec![Some(i)],
            (MethodName::Kgl, _) => (0..bank_len).map(Some).collect(),
            _ => vec![None],
        };
        let betas: Vec<Option<f64>> = match method {
            MethodName::Smkl => spec.sweep.betas(cfg).into_iter().map(Some).collect(),
            _ => vec![None],
        };
        for &kernel in &kernels {
            for &fraction in &fractions {
                for &alpha in &spec.sweep.alphas(cfg) {
                    for &beta in &betas {
                        for &gamma in &spec.sweep.gammas(cfg) {
                            points.push(Point {
                                method,
                                kernel,
                                fraction,
                                alpha,
                                beta,
                                gamma,
                            });
                        }
                    }
                }
            }
        }
    }
    points
}

pub fn point_config(spec: &ExperimentSpec, prepared: &Prepared, point: &Point) -> SolverConfig {
    let mut cfg = spec.solver.clone();
    cfg.alpha = point.alpha;
    cfg.beta = point.beta.unwrap_or(cfg.beta);
    cfg.gamma = point.gamma;
    cfg.c = Some(prepared.clusters);
    cfg
}

/// One solver run of `point`; `run` selects the repeat for ssl.
pub fn fit_point(
    spec: &ExperimentSpec,
    prepared: &Prepared,
    point: &Point,
    run: usize,
) -> Result<(FitResult, Option<LabelMask>)> {
    let mut cfg = point_config(spec, prepared, point);
    let kernel;
    let method = match (point.method, point.kernel) {
        (MethodName::Smkl, _) => Method::Smkl(&prepared.bank),
        (MethodName::Pmkl, _) => Method::Pmkl(&prepared.bank),
        (MethodName::Kgl, Some(i)) => {
            kernel = prepared
                .bank
                .get(i)
                .ok_or(Error::IndexOutOfRange {
                    index: i,
                    n: prepared.bank.len(),
                })?;
            Method::Kgl(kernel)
        }
        (MethodName::Kgl, None) => {
            return Err(Error::InvalidValue {
                key: "kernel_index".into(),
                message: "kgl point without a kernel".into(),
            })
        }
    };
    match point.fraction {
        None => Ok((fit(method, Task::Clustering, &cfg, &FitOptions::default())?, None)),
        Some(fraction) => {
            let seed = spec.solver.seed.wrapping_add(run as u64);
            cfg.seed = seed;
            let mask = split_labeled(&prepared.truth, fraction, seed)?;
            let task = Task::Ssl {
                labels: &prepared.truth,
                mask: &mask,
            };
            let result = fit(method, task, &cfg, &FitOptions::default())?;
            Ok((result, Some(mask)))
        }
    }
}

fn run_point(spec: &ExperimentSpec, prepared: &Prepared, point: &Point) -> Result<PointMetrics> {
    let truth: Vec<Option<usize>> = prepared.truth.classes();
    let known: Vec<usize> = truth.iter().map(|c| c.unwrap_or(usize::MAX)).collect();
    let runs = match point.fraction {
        Some(_) => spec.repeats,
        None => 1,
    };
    let mut accs = Vec::with_capacity(runs);
    let mut nmis = Vec::with_capacity(runs);
    let mut iterations = Vec::with_capacity(runs);
    let mut converged = 0;
    let mut first_labels = None;
    for run in 0..runs {
        let (result, mask) = fit_point(spec, prepared, point, run)?;
        let (restrict, mode): (Vec<usize>, EvalMode) = match &mask {
            Some(m) => (
                m.unlabeled()
                    .iter()
                    .copied()
                    .filter(|&i| truth[i].is_some())
                    .collect(),
                EvalMode::Ssl,
            ),
            None => (
                (0..truth.len()).filter(|&i| truth[i].is_some()).collect(),
                EvalMode::Clustering,
            ),
        };
        let report = evaluate(&result.labels, &known, Some(&restrict), mode)?;
        accs.push(report.acc);
        nmis.push(report.nmi);
        iterations.push(result.iterations as f64);
        converged += usize::from(result.converged);
        if first_labels.is_none() {
            first_labels = Some(result.labels);
        }
    }
    Ok(PointMetrics {
        acc: Stat::of(&accs),
        nmi: Stat::of(&nmis),
        iterations: Stat::of(&iterations),
        converged,
        runs,
        labels: first_labels.unwrap_or_default(),
    })
}

pub fn kernel_label(spec: &ExperimentSpec, prepared: &Prepared, point: &Point) -> String {
    match point.kernel {
        Some(i) => format!(
            "{i}:{}",
            prepared
                .bank
                .get(i)
                .map_or("?".to_string(), |k| k.kind().to_string())
        ),
        None => spec.recipe.name(),
    }
}

/// Runs every point; a failing point is recorded and does not stop the
/// others. Results come back in plan order.
pub fn run_points(spec: &ExperimentSpec, prepared: &Prepared, points: &[Point]) -> Vec<PointResult> {
    let work = || {
        points
            .par_iter()
            .map(|point| {
                let outcome = run_point(spec, prepared, point).map_err(|e| {
                    log::warn!("point {point:?} failed: {e}");
                    PointFailure {
                        kind: e.kind(),
                        message: e.to_string(),
                    }
                });
                PointResult {
                    point: point.clone(),
                    kernel_label: kernel_label(spec, prepared, point),
                    outcome,
                }
            })
            .collect::<Vec<_>>()
    };
    if spec.workers == 0 {
        work()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(spec.workers).build() {
            Ok(pool) => pool.install(work),
            Err(e) => {
                log::warn!("could not build a pool of {} workers: {e}", spec.workers);
                work()
            }
        }
    }
}

/// Index of the best successful point per (method, fraction) group, by mean
/// accuracy; ties go to the earlier point.
pub fn best_points(results: &[PointResult]) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let Some(acc) = r.acc() else { continue };
        let group = |x: &PointResult| (x.point.method, x.point.fraction.map(f64::to_bits));
        match best.iter_mut().find(|b| group(&results[**b]) == group(r)) {
            Some(b) => {
                if acc > results[*b].acc().unwrap_or(f64::NEG_INFINITY) {
                    *b = i;
                }
            }
            None => best.push(i),
        }
    }
    best
}

pub struct Experiment {
    pub prepared: Prepared,
    pub results: Vec<PointResult>,
    pub best: Vec<usize>,
}

impl Experiment {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Highest-accuracy point over every group.
    pub fn overall_best(&self) -> Option<usize> {
        let mut out: Option<usize> = None;
        for &b in &self.best {
            match out {
                Some(o) if self.results[o].acc() >= self.results[b].acc() => {}
                _ => out = Some(b),
            }
        }
        out
    }
}

/// Loads the inputs and runs the whole grid. Errors here are input errors;
/// per-point errors are inside the results.
pub fn run_grid(spec: &ExperimentSpec) -> Result<Experiment> {
    let prepared = prepare(spec)?;
    if spec.mode == Mode::Clustering && prepared.clusters < 2 {
        return Err(Error::InvalidValue {
            key: "solver.c".into(),
            message: format!("{} clusters; need at least 2", prepared.clusters),
        });
    }
    let points = plan(spec, prepared.bank.len());
    log::info!(
        "{} points over {} samples, {} kernels",
        points.len(),
        prepared.data.nrows(),
        prepared.bank.len()
    );
    let results = run_points(spec, &prepared, &points);
    let best = best_points(&results);
    Ok(Experiment {
        prepared,
        results,
        best,
    })
}
