//! Alternating solver for kernel-based graph learning: the affinity graph,
//! the consensus kernel and the indicator matrix are updated in turn.

mod fit;
mod graph;
mod updates;

pub use fit::{
    fit, fit_clustering, fit_kgl, fit_pmkl, fit_ssl, random_affinity, FitOptions, FitResult,
    IterationRecord, LabelSource, Method, Task,
};
pub use graph::{laplacian, row_sq_dists, smoothness, AffinityGraph};
pub use updates::{
    combine_kernels, decide_labels, graph_objective, kernel_fidelity, objective, one_hot_labeled,
    pmkl_residuals, pmkl_update_theta, project_psd, self_expression, theta_from_residuals,
    update_k, update_p_clustering, update_p_ssl, update_s, update_w, ObjectiveTerms, SUpdate,
};
