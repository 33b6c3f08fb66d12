//! Finite elements for the integral fractional Laplacian on (-1, 1) and the unit disk.
//!
//! The crate assembles the dense Galerkin stiffness matrix of the nonlocal
//! form with piecewise linear elements, solves the resulting system and
//! measures errors against the closed-form solutions available on balls.
//! The [`study`] module drives convergence sweeps over families of uniform
//! and boundary-graded meshes.

pub mod analytic;
pub mod assembly;
pub mod error;
pub mod mesh;
pub mod norms;
pub mod oracle;
pub mod quadrature;
pub mod solve;
pub mod study;

pub use analytic::{
    exact_gradient, exact_rhs, exact_solution, gamma_fn, jacobi_poly, normalization_constant, Domain,
    ExactSolution, ProblemSpec,
};
pub use error::{Error, Result};
pub use mesh::{build_disk_mesh, build_graded_1d, build_uniform_1d, mesh_stats, Mesh, MeshStats};
pub use quadrature::{
    complement_integral, element_rule, gauss_legendre, pair_integral, pair_matrix, tail_local, triangle_rule, PairMatrix,
    QuadPoint, QuadratureConfig, QuadratureRule, RuleKind,
};
pub use assembly::{
    assemble_load, assemble_load_with, assemble_stiffness, assemble_stiffness_with, AssemblyOptions, LoadVector,
    SymmetricMatrix,
};
pub use solve::{cholesky, condition_estimate, conjugate_gradient, solve_spd, Cholesky, DiscreteSolution};
pub use norms::{
    energy_error, error_report, fit_order, fit_order_of, h1_error, h1_seminorm_discrete, l2_error, ConvergenceRecord,
    ErrorReport, XField, YField,
};
