//! Dense numeric building blocks shared by the solver.

mod components;
mod eigen;
mod hungarian;
mod kmeans;
mod linsolve;

pub use components::{connected_components, default_component_tol, Components};
pub use eigen::{smallest_eigenpairs, symmetric_eigen, EigenPairs};
pub use hungarian::{hungarian, Assignment};
pub use kmeans::{kmeans, kmeans_with_trace, normalize_rows, KMeansRun};
pub use linsolve::{solve_spd, SpdFactor};
