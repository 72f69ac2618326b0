//! Finite element solver for the incompressible Navier-Stokes equations on
//! triangulated 2D domains.
//!
//! The time discretization is a BDF2 consistent-splitting scheme: a
//! velocity prediction with extrapolated convection, a pressure update from
//! a consistent pressure Poisson equation, and a scalar auxiliary variable
//! that multiplies the pressure coupling so the fully discrete system
//! satisfies an exact energy balance. The balance is assembled and checked
//! at runtime, not just assumed.
//!
//! Crate layout:
//!
//! - [`mesh`]: triangle meshes, structured generators, file input
//! - [`fem`]: P1/P2 Lagrange spaces, quadrature, interpolation
//! - [`sparse`] and [`solvers`]: CSR matrices, CG and BiCGStab
//! - [`operators`]: matrix and right-hand-side assembly, boundary conditions
//! - [`stepper`]: the time integrator and its runtime energy audit
//! - [`benchmarks`]: Taylor-Green, lid-driven cavity, cylinder benchmark
//! - [`config`] and [`output`]: run configuration, VTK and CSV writers
//!
//! The `examples/` directory contains one runnable driver per benchmark;
//! the `savflow` binary exposes the same runs behind a small CLI.

pub mod benchmarks;
pub mod config;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod operators;
pub mod output;
pub mod problem;
pub mod sparse;
pub mod solvers;
pub mod stepper;

pub use benchmarks::{
    cavity_mesh, compute_forces, inflow_velocity, lid_velocity, locate_primary_vortex,
    pressure_l2_error, run_lid_cavity, run_taylor_green_convergence, run_turek_cylinder,
    streamfunction, taylor_green_exact, taylor_green_gradient, velocity_gradient_l2_error,
    CavityResult,
    CavityStudy, ConvergenceRow, ConvergenceTable, CylinderProblem, DecayingVortexProblem,
    LidCavityProblem, TaylorGreenProblem, TaylorGreenStudy, TurekResult, TurekStudy,
    VortexLocation,
};
pub use config::{parse_config, CaseId, MeshSpec, RunConfig};
pub use error::{ConfigError, LinalgError, MeshError, StepError};
pub use fem::{build_space, quadrature_rule, reference_basis, FeSpace, QuadratureRule};
pub use mesh::{
    generate_turek_channel, generate_unit_square, read_mesh, BoundaryTag, DiagonalPattern, Mesh,
    MeshFormat,
};
pub use operators::{
    apply_dirichlet, assemble_convection, assemble_convection_with_degree, assemble_graddiv,
    assemble_mass, assemble_momentum_load, assemble_ppe_rhs, assemble_pressure_coupling,
    assemble_stiffness, project_neumann_pressure, MomentumSystem, PpeSystem,
};
pub use output::{read_diagnostics_csv, write_diagnostics_csv, write_vtk};
pub use problem::{FlowProblem, RestProblem};
pub use stepper::{
    bdf2_identity_residual, energy_residual, phi_value, DiagnosticsRecord, ElementPair,
    FlowSolver, FlowState, SchemeParams, StepDetail,
};
pub use solvers::{bicgstab_solve, cg_solve, Nullspace, Preconditioner, SolveStats, SolverConfig};
pub use sparse::{CooBuilder, SparseMatrix};
