//! Reference and comparison distances.

pub mod exact;
pub mod line;
pub mod sinkhorn;

pub use exact::{
    exact_wasserstein, exact_wasserstein_with, solve_transport, DenseMatrix, ExactConfig,
    OptimalityCertificate, TransportSolution,
};
pub use line::{one_greedy_distance, project_to_line_random, solve_1d_exact, LineEmbedding, LineSolution};
pub use sinkhorn::{round_to_feasible, sinkhorn_cost, sinkhorn_plan, SinkhornConfig};
