//! Self-weighted multiple kernel learning for graph-based clustering and
//! semi-supervised classification.
//!
//! A bank of base kernels is built from the data ([`kernel_bank`]); the
//! [`solver`] then alternates between a nonnegative self-expressive affinity
//! graph, a consensus kernel that every base kernel is weighted against, and
//! an indicator matrix (spectral embedding for clustering, harmonic label
//! scores for semi-supervised learning). [`evaluation`] scores the result.

pub mod data_io;
pub mod error;
pub mod evaluation;
pub mod kernel_bank;
pub mod numerics;
pub mod solver;
pub mod synthetic;

pub use data_io::{DataMatrix, LabelMask, LabelVector, SolverConfig};
pub use error::{Error, Result};
pub use evaluation::{clustering_accuracy, evaluate, nmi, EvalMode, MetricReport};
pub use kernel_bank::{build_bank, KernelBank, KernelKind, KernelMatrix, Recipe};
pub use solver::{fit, fit_clustering, fit_kgl, fit_pmkl, fit_ssl, FitOptions, FitResult};
