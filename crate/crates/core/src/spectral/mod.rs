//! Eigensolvers, spectral projections, functions of operators and resolvent diagnostics.

mod dense;
mod functions;
mod lanczos;

pub use dense::{
    dense_eigen, gram_factor, hermitian_eigen, hermitian_norm, low_rank_norm, real_symmetric_eigen, spectral_norm,
    DenseEigen,
};
pub use functions::{
    apply_function, cluster_threshold, eigs_lowest, ground_multiplicity, propagation_decay, spectral_projection,
    weighted_resolvent_norm, LowRank, PropagationCurve, SpectralWindowProjection, CLUSTER_RTOL,
};
pub use lanczos::{
    lanczos_largest, lanczos_lowest, DenseOperator, EigenSolution, FnOperator, LinearOperator, Method, SolverOptions,
};
