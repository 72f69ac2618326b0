//! Problem data: initial condition, boundary data, forcing and traction.
//!
//! A [`FlowProblem`] supplies the analytic data of one flow configuration;
//! the stepper owns everything discrete. Benchmark problems live in
//! [`crate::benchmarks`].

use crate::mesh::BoundaryTag;

/// Analytic data for one incompressible-flow computation.
///
/// All methods take physical coordinates and time; the defaults describe
/// the common case (no forcing, no traction, no analytic boundary rate).
pub trait FlowProblem {
    /// Initial velocity field, divergence-free in the continuous sense.
    fn initial_velocity(&self, x: [f64; 2]) -> [f64; 2];

    /// Velocity boundary data on the Dirichlet part of the boundary.
    fn dirichlet(&self, x: [f64; 2], t: f64, tag: BoundaryTag) -> [f64; 2];

    /// Body force. Only consulted when [`Self::has_forcing`] is true.
    fn forcing(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn has_forcing(&self) -> bool {
        false
    }

    /// Traction data on the outflow boundary. Only consulted when
    /// [`Self::has_traction`] is true.
    fn traction(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn has_traction(&self) -> bool {
        false
    }

    /// Analytic time derivative of n·g on the Dirichlet boundary, used by
    /// the pressure Poisson right-hand side. Returning None falls back to
    /// a one-sided finite difference of [`Self::dirichlet`] in time.
    fn normal_rate(&self, _x: [f64; 2], _n: [f64; 2], _t: f64, _tag: BoundaryTag) -> Option<f64> {
        None
    }

    /// True when g ≡ 0 on the whole boundary for all time; combined with
    /// zero forcing and an all-Dirichlet boundary this enables the
    /// per-step energy-identity audit.
    fn homogeneous_dirichlet(&self) -> bool {
        false
    }
}

/// Quiescent flow with zero data everywhere; the solver must keep it at
/// rest with ψ = 1 exactly.
pub struct RestProblem;

impl FlowProblem for RestProblem {
    fn initial_velocity(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn dirichlet(&self, _x: [f64; 2], _t: f64, _tag: BoundaryTag) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn homogeneous_dirichlet(&self) -> bool {
        true
    }
}
