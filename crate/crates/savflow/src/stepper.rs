//! BDF2 time integration of the splitting scheme.
//!
//! Each step solves two velocity systems sharing one matrix — a predictor
//! with the boundary data and a pressure-driven corrector — combines them
//! through the closed-form update of the scalar auxiliary variable, and
//! recovers the pressure from a Poisson solve. The first step runs the same
//! machinery with BDF1 coefficients and the auxiliary scalar pinned at 1.
//!
//! For runs with zero forcing and homogeneous boundary data the stepper
//! audits the per-step energy identity
//!
//! Φ_{n+1} − Φ_n + (δ²ψ)²/α + ‖δ²u‖² + 4τν‖∇u_{n+1}‖² + 4γτν‖∇·u_{n+1}‖² = 0
//!
//! with Φ_n = ψ_n²/α + ψ*_{n+1}²/α + ‖u_n‖² + ‖u*_{n+1}‖², all norms taken
//! through the assembled matrices; the relative residual lands at solver
//! tolerance when assembly is exact.

use std::sync::Arc;

use crate::error::StepError;
use crate::fem::{build_space, FeSpace};
use crate::mesh::{BoundaryTag, Mesh};
use crate::operators::{
    apply_dirichlet, assemble_momentum_load, assemble_ppe_rhs, assemble_pressure_coupling,
    project_neumann_pressure, MomentumSystem, PpeSystem,
};
use crate::problem::FlowProblem;
use crate::solvers::{bicgstab_solve, SolverConfig};
use crate::sparse::{dot, SparseMatrix};

/// Velocity/pressure element pairing; pressure is always P1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementPair {
    /// P2 velocity with P1 pressure (inf-sup stable).
    TaylorHoodP2P1,
    /// P1 velocity with P1 pressure (equal order, reduced accuracy).
    EqualOrderP1P1,
}

impl ElementPair {
    pub fn velocity_degree(self) -> usize {
        match self {
            ElementPair::TaylorHoodP2P1 => 2,
            ElementPair::EqualOrderP1P1 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementPair::TaylorHoodP2P1 => "p2p1",
            ElementPair::EqualOrderP1P1 => "p1p1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "p2p1" | "taylor_hood_p2p1" => Some(ElementPair::TaylorHoodP2P1),
            "p1p1" | "equal_order_p1p1" => Some(ElementPair::EqualOrderP1P1),
            _ => None,
        }
    }
}

/// Physical and numerical parameters of one run.
#[derive(Debug, Clone)]
pub struct SchemeParams {
    pub nu: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub tau: f64,
    pub t_end: f64,
    pub element_pair: ElementPair,
    pub momentum_solver: SolverConfig,
    pub ppe_solver: SolverConfig,
}

impl SchemeParams {
    pub fn new(nu: f64, gamma: f64, alpha: f64, tau: f64, t_end: f64, pair: ElementPair) -> Self {
        SchemeParams {
            nu,
            gamma,
            alpha,
            tau,
            t_end,
            element_pair: pair,
            momentum_solver: SolverConfig::default(),
            ppe_solver: SolverConfig::default(),
        }
    }

    /// Number of time steps covering [0, t_end].
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.tau).round() as usize
    }
}

/// Rolling two-level history of the scheme.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u_n: Vec<f64>,
    pub u_nm1: Vec<f64>,
    pub p_n: Vec<f64>,
    pub p_nm1: Vec<f64>,
    pub psi_n: f64,
    pub psi_nm1: f64,
    pub t_n: f64,
    pub n: usize,
}

/// Per-step diagnostics.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub psi: f64,
    pub phi: f64,
    /// Relative residual of the energy identity; None when the identity
    /// does not apply (forcing, inhomogeneous data, outflow boundary, or
    /// the BDF1 startup step).
    pub energy_residual: Option<f64>,
    pub div_u_l2: f64,
    pub grad_u_l2: f64,
}

/// Intermediate quantities of one step, exposed for verification.
#[derive(Debug, Clone)]
pub struct StepDetail {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// ⟨p*, ∇·u¹⟩ and ⟨p*, ∇·u²⟩ as used by the auxiliary update.
    pub work_u1: f64,
    pub work_u2: f64,
}

/// Assembled pieces of one BDF2 velocity update.
struct Bdf2System {
    a_unc: SparseMatrix,
    a_bc: SparseMatrix,
    b_unc: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    bp: Vec<f64>,
}

/// Relative residual of the BDF2 telescoping identity
/// 2⟨3v₂−4v₁+v₀, v₂⟩ = ‖v₂‖² − ‖v₁‖² + ‖2v₂−v₁‖² − ‖2v₁−v₀‖² + ‖δ²v‖²
/// in the inner product induced by `m`. Pure algebra: near machine zero
/// for any inputs and any symmetric positive matrix.
pub fn bdf2_identity_residual(m: &SparseMatrix, v2: &[f64], v1: &[f64], v0: &[f64]) -> f64 {
    let bdf: Vec<f64> = v2
        .iter()
        .zip(v1)
        .zip(v0)
        .map(|((&a, &b), &c)| 3.0 * a - 4.0 * b + c)
        .collect();
    let lhs = 2.0 * dot(&bdf, &m.spmv(v2));
    let star2 = linear2(2.0, v2, -1.0, v1);
    let star1 = linear2(2.0, v1, -1.0, v0);
    let d2: Vec<f64> = v2
        .iter()
        .zip(v1)
        .zip(v0)
        .map(|((&a, &b), &c)| a - 2.0 * b + c)
        .collect();
    let terms = [
        m.quadratic_form(v2),
        -m.quadratic_form(v1),
        m.quadratic_form(&star2),
        -m.quadratic_form(&star1),
        m.quadratic_form(&d2),
    ];
    let rhs: f64 = terms.iter().sum();
    let scale = lhs.abs().max(terms.iter().map(|t| t.abs()).sum());
    (lhs - rhs).abs() / scale.max(1e-300)
}

/// Φ_n given (v_n, v_{n−1}) and (ψ_n, ψ_{n−1}): the extrapolations
/// v*_{n+1} = 2v_n − v_{n−1} are formed internally.
pub fn phi_value(
    mass: &SparseMatrix,
    u: &[f64],
    u_prev: &[f64],
    psi: f64,
    psi_prev: f64,
    alpha: f64,
) -> f64 {
    let u_star = linear2(2.0, u, -1.0, u_prev);
    let psi_star = 2.0 * psi - psi_prev;
    psi * psi / alpha
        + psi_star * psi_star / alpha
        + mass.quadratic_form(u)
        + mass.quadratic_form(&u_star)
}

/// Relative residual of the per-step energy identity for one completed
/// BDF2 step (new, n, n−1 levels). Meaningful only for zero forcing and
/// homogeneous Dirichlet data on the whole boundary.
#[allow(clippy::too_many_arguments)]
pub fn energy_residual(
    mass: &SparseMatrix,
    stiffness: &SparseMatrix,
    graddiv: &SparseMatrix,
    nu: f64,
    gamma: f64,
    alpha: f64,
    tau: f64,
    u_new: &[f64],
    u_n: &[f64],
    u_nm1: &[f64],
    psi_new: f64,
    psi_n: f64,
    psi_nm1: f64,
) -> f64 {
    let phi_new = phi_value(mass, u_new, u_n, psi_new, psi_n, alpha);
    let phi_old = phi_value(mass, u_n, u_nm1, psi_n, psi_nm1, alpha);
    let d2_psi = psi_new - 2.0 * psi_n + psi_nm1;
    let d2_u: Vec<f64> = u_new
        .iter()
        .zip(u_n)
        .zip(u_nm1)
        .map(|((&a, &b), &c)| a - 2.0 * b + c)
        .collect();
    let lhs = phi_new - phi_old
        + d2_psi * d2_psi / alpha
        + mass.quadratic_form(&d2_u)
        + 4.0 * tau * nu * stiffness.quadratic_form(u_new)
        + 4.0 * gamma * tau * nu * graddiv.quadratic_form(u_new);
    lhs.abs() / phi_old.max(1e-300)
}

fn linear2(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(&xi, &yi)| a * xi + b * yi).collect()
}

/// The time integrator: spaces, cached operators and rolling state.
pub struct FlowSolver<P: FlowProblem> {
    problem: P,
    params: SchemeParams,
    space_u: Arc<FeSpace>,
    space_p: Arc<FeSpace>,
    momentum: MomentumSystem,
    ppe: PpeSystem,
    coupling: SparseMatrix,
    base_bdf2: SparseMatrix,
    /// Scalar velocity DOFs on the Dirichlet boundary with their tags.
    dirichlet_scalar: Vec<(usize, BoundaryTag)>,
    audit_energy: bool,
    state: FlowState,
    warm_u2: Vec<f64>,
    /// Unconstrained momentum residual of the last completed step; its
    /// boundary-DOF entries are the discrete reaction forces.
    last_residual: Vec<f64>,
}

impl<P: FlowProblem> FlowSolver<P> {
    pub fn new(mesh: Arc<Mesh>, params: SchemeParams, problem: P) -> Result<Self, StepError> {
        assert!(params.nu > 0.0, "viscosity must be positive");
        assert!(params.gamma > 0.0, "grad-div coefficient must be positive");
        assert!(params.alpha > 0.0, "auxiliary coefficient must be positive");
        assert!(params.tau > 0.0, "time step must be positive");
        let space_u = Arc::new(build_space(
            mesh.clone(),
            params.element_pair.velocity_degree(),
            2,
        ));
        let space_p = Arc::new(build_space(mesh, 1, 1));
        let momentum = MomentumSystem::new(space_u.clone(), params.nu, params.gamma);
        let ppe = PpeSystem::new(&space_p);
        let coupling = assemble_pressure_coupling(&space_u, &space_p);
        let base_bdf2 = momentum.base_matrix(1.5 / params.tau);
        let mut dirichlet_scalar = Vec::new();
        for (&tag, dofs) in space_u.boundary_dofs() {
            if tag.is_dirichlet() {
                for &d in dofs {
                    dirichlet_scalar.push((d, tag));
                }
            }
        }
        dirichlet_scalar.sort_unstable();
        let audit_energy =
            !problem.has_forcing() && problem.homogeneous_dirichlet() && ppe.is_pure_neumann();
        let u0 = space_u.interpolate_vector(|x| problem.initial_velocity(x));
        let n_dofs = space_u.n_dofs();
        let mut solver = FlowSolver {
            problem,
            params,
            space_u,
            space_p,
            momentum,
            ppe,
            coupling,
            base_bdf2,
            dirichlet_scalar,
            audit_energy,
            state: FlowState {
                u_n: u0.clone(),
                u_nm1: u0,
                p_n: Vec::new(),
                p_nm1: Vec::new(),
                psi_n: 1.0,
                psi_nm1: 1.0,
                t_n: 0.0,
                n: 0,
            },
            warm_u2: vec![0.0; n_dofs],
            last_residual: vec![0.0; n_dofs],
        };
        let p0 = solver.solve_ppe(&solver.state.u_n.clone(), 1.0, 0.0, None)?;
        solver.state.p_n = p0.clone();
        solver.state.p_nm1 = p0;
        Ok(solver)
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }

    pub fn space_u(&self) -> &Arc<FeSpace> {
        &self.space_u
    }

    pub fn space_p(&self) -> &Arc<FeSpace> {
        &self.space_p
    }

    pub fn velocity(&self) -> &[f64] {
        &self.state.u_n
    }

    pub fn pressure(&self) -> &[f64] {
        &self.state.p_n
    }

    pub fn time(&self) -> f64 {
        self.state.t_n
    }

    pub fn mass(&self) -> &SparseMatrix {
        self.momentum.mass()
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        self.momentum.stiffness()
    }

    pub fn graddiv(&self) -> &SparseMatrix {
        self.momentum.graddiv()
    }

    pub fn coupling(&self) -> &SparseMatrix {
        &self.coupling
    }

    /// Unconstrained momentum residual of the last completed step.
    pub fn last_residual(&self) -> &[f64] {
        &self.last_residual
    }

    /// Net force the fluid exerts on the boundary piece carrying `tag`,
    /// from the reaction entries of the momentum residual.
    pub fn boundary_force(&self, tag: BoundaryTag) -> [f64; 2] {
        let mut force = [0.0, 0.0];
        if let Some(dofs) = self.space_u.boundary_dofs().get(&tag) {
            for &d in dofs {
                force[0] -= self.last_residual[2 * d];
                force[1] -= self.last_residual[2 * d + 1];
            }
        }
        force
    }

    /// Diagnostics of the current state (valid for step 0 before the first
    /// advance, and after each advance for the step just completed).
    pub fn current_record(&self) -> DiagnosticsRecord {
        self.make_record(None)
    }

    /// Advance one time step (BDF1 for the first, BDF2 after).
    pub fn advance(&mut self) -> Result<DiagnosticsRecord, StepError> {
        self.advance_detailed().map(|(record, _)| record)
    }

    /// Advance one step, also returning the intermediate solutions.
    pub fn advance_detailed(&mut self) -> Result<(DiagnosticsRecord, StepDetail), StepError> {
        if self.state.n == 0 {
            self.first_step()
        } else {
            self.bdf2_step()
        }
    }

    /// BDF1 startup: same operators with mass coefficient 1/τ, first-order
    /// extrapolations u* = u₀, p* = p₀, and the auxiliary scalar fixed at 1
    /// so the pressure coupling sits directly on the right-hand side.
    fn first_step(&mut self) -> Result<(DiagnosticsRecord, StepDetail), StepError> {
        let tau = self.params.tau;
        let t_new = self.state.t_n + tau;
        let base = self.momentum.base_matrix(1.0 / tau);
        let a_unc = self.momentum.system_matrix(&base, &self.state.u_n);
        let bp = self.coupling.spmv(&self.state.p_n);
        let load = self.momentum_load(t_new);
        let mut b_unc = self.momentum.mass().spmv(&self.state.u_n);
        for i in 0..b_unc.len() {
            b_unc[i] = b_unc[i] / tau + load[i] + bp[i];
        }
        let (dofs, values) = self.dirichlet_values(t_new);
        let mut a_bc = a_unc.clone();
        let mut b = b_unc.clone();
        apply_dirichlet(&mut a_bc, &mut b, &dofs, &values);
        let u1 = self.solve_momentum(&a_bc, &b, Some(&self.state.u_n))?;
        let p1 = self.solve_ppe(&u1, 1.0, t_new, Some(&self.state.p_n))?;

        let mut residual = a_unc.spmv(&u1);
        for (r, b) in residual.iter_mut().zip(&b_unc) {
            *r -= b;
        }
        self.last_residual = residual;

        let detail = StepDetail {
            u1: u1.clone(),
            u2: Vec::new(),
            work_u1: dot(&u1, &bp),
            work_u2: 0.0,
        };
        self.state.u_nm1 = std::mem::replace(&mut self.state.u_n, u1);
        self.state.p_nm1 = std::mem::replace(&mut self.state.p_n, p1);
        self.state.t_n = t_new;
        self.state.n = 1;
        Ok((self.make_record(None), detail))
    }

    /// Assemble everything of the next BDF2 step that does not depend on
    /// the auxiliary scalar: the velocity update solves
    /// a_bc·u = b1 + ψ_{n+1}·b2.
    fn build_bdf2_system(&self) -> Bdf2System {
        let tau = self.params.tau;
        let t_new = self.state.t_n + tau;

        let u_star = linear2(2.0, &self.state.u_n, -1.0, &self.state.u_nm1);
        let p_star = linear2(2.0, &self.state.p_n, -1.0, &self.state.p_nm1);
        let a_unc = self.momentum.system_matrix(&self.base_bdf2, &u_star);
        let bp = self.coupling.spmv(&p_star);
        let load = self.momentum_load(t_new);
        let hist = linear2(4.0, &self.state.u_n, -1.0, &self.state.u_nm1);
        let mut b_unc = self.momentum.mass().spmv(&hist);
        for i in 0..b_unc.len() {
            b_unc[i] = b_unc[i] / (2.0 * tau) + load[i];
        }

        let (dofs, values) = self.dirichlet_values(t_new);
        let mut a_bc = a_unc.clone();
        let mut b1 = b_unc.clone();
        apply_dirichlet(&mut a_bc, &mut b1, &dofs, &values);

        // Same matrix, homogeneous boundary: only the right-hand side differs.
        let mut b2 = bp.clone();
        for &d in &dofs {
            b2[d] = 0.0;
        }
        Bdf2System {
            a_unc,
            a_bc,
            b_unc,
            b1,
            b2,
            bp,
        }
    }

    /// The constrained linear system of the upcoming BDF2 step, exposed so
    /// the splitting can be checked against one coupled solve of
    /// a·u = b1 + ψ_{n+1}·b2. Requires at least one completed step.
    pub fn bdf2_system(&self) -> (SparseMatrix, Vec<f64>, Vec<f64>) {
        assert!(self.state.n >= 1, "startup step is not a BDF2 step");
        let sys = self.build_bdf2_system();
        (sys.a_bc, sys.b1, sys.b2)
    }

    fn bdf2_step(&mut self) -> Result<(DiagnosticsRecord, StepDetail), StepError> {
        let tau = self.params.tau;
        let alpha = self.params.alpha;
        let t_new = self.state.t_n + tau;
        let step = self.state.n + 1;

        let Bdf2System {
            a_unc,
            a_bc,
            b_unc,
            b1,
            b2,
            bp,
        } = self.build_bdf2_system();
        let u1 = self.solve_momentum(&a_bc, &b1, Some(&self.state.u_n))?;
        let u2 = self.solve_momentum(&a_bc, &b2, Some(&self.warm_u2))?;

        let work_u1 = dot(&u1, &bp);
        let work_u2 = dot(&u2, &bp);
        let den = 3.0 + 2.0 * tau * alpha * work_u2;
        if den.abs() < 1e-10 {
            return Err(StepError::DegenerateUpdate { step, den });
        }
        let psi_new = (4.0 * self.state.psi_n - self.state.psi_nm1 - 2.0 * tau * alpha * work_u1) / den;
        if psi_new.abs() < 1e-6 {
            return Err(StepError::PsiCollapse {
                step,
                psi: psi_new,
            });
        }
        let u_new = linear2(1.0, &u1, psi_new, &u2);
        let p_new = self.solve_ppe(&u_new, psi_new, t_new, Some(&self.state.p_n))?;

        let mut residual = a_unc.spmv(&u_new);
        for i in 0..residual.len() {
            residual[i] -= b_unc[i] + psi_new * bp[i];
        }

        let energy = if self.audit_energy {
            Some(energy_residual(
                self.momentum.mass(),
                self.momentum.stiffness(),
                self.momentum.graddiv(),
                self.params.nu,
                self.params.gamma,
                alpha,
                tau,
                &u_new,
                &self.state.u_n,
                &self.state.u_nm1,
                psi_new,
                self.state.psi_n,
                self.state.psi_nm1,
            ))
        } else {
            None
        };

        self.last_residual = residual;
        self.warm_u2 = u2.clone();
        let detail = StepDetail {
            u1,
            u2,
            work_u1,
            work_u2,
        };
        self.state.u_nm1 = std::mem::replace(&mut self.state.u_n, u_new);
        self.state.p_nm1 = std::mem::replace(&mut self.state.p_n, p_new);
        self.state.psi_nm1 = self.state.psi_n;
        self.state.psi_n = psi_new;
        self.state.t_n = t_new;
        self.state.n = step;
        Ok((self.make_record(energy), detail))
    }

    fn make_record(&self, energy_residual: Option<f64>) -> DiagnosticsRecord {
        let s = &self.state;
        DiagnosticsRecord {
            step: s.n,
            time: s.t_n,
            psi: s.psi_n,
            phi: phi_value(
                self.momentum.mass(),
                &s.u_n,
                &s.u_nm1,
                s.psi_n,
                s.psi_nm1,
                self.params.alpha,
            ),
            energy_residual,
            div_u_l2: self.momentum.graddiv().quadratic_form(&s.u_n).max(0.0).sqrt(),
            grad_u_l2: self
                .momentum
                .stiffness()
                .quadratic_form(&s.u_n)
                .max(0.0)
                .sqrt(),
        }
    }

    fn solve_momentum(
        &self,
        a: &SparseMatrix,
        b: &[f64],
        warm: Option<&[f64]>,
    ) -> Result<Vec<f64>, StepError> {
        let step = self.state.n + 1;
        let (x, stats) = bicgstab_solve(a, b, warm, &self.params.momentum_solver).map_err(|e| {
            StepError::SolveFailed {
                system: "momentum",
                step,
                detail: e.to_string(),
            }
        })?;
        if !stats.converged {
            return Err(StepError::SolveFailed {
                system: "momentum",
                step,
                detail: format!(
                    "no convergence in {} iterations (residual {:.3e})",
                    stats.iterations, stats.residual
                ),
            });
        }
        Ok(x)
    }

    fn solve_ppe(
        &self,
        u: &[f64],
        psi: f64,
        t: f64,
        warm: Option<&[f64]>,
    ) -> Result<Vec<f64>, StepError> {
        let step = self.state.n;
        let forcing = |x: [f64; 2]| self.problem.forcing(x, t);
        let f_opt: Option<&dyn Fn([f64; 2]) -> [f64; 2]> = if self.problem.has_forcing() {
            Some(&forcing)
        } else {
            None
        };
        let rate = |x: [f64; 2], n: [f64; 2], tag: BoundaryTag| {
            self.problem
                .normal_rate(x, n, t, tag)
                .unwrap_or_else(|| self.numeric_normal_rate(x, n, t, tag))
        };
        let mut rhs = assemble_ppe_rhs(
            &self.space_p,
            &self.space_u,
            u,
            f_opt,
            Some(&rate),
            self.params.nu,
        );
        for v in &mut rhs {
            *v /= psi;
        }
        let traction = |x: [f64; 2]| self.problem.traction(x, t);
        let t_opt: Option<&dyn Fn([f64; 2]) -> [f64; 2]> = if self.problem.has_traction() {
            Some(&traction)
        } else {
            None
        };
        let dirichlet = if self.ppe.is_pure_neumann() {
            Vec::new()
        } else {
            project_neumann_pressure(
                &self.space_p,
                &self.space_u,
                u,
                t_opt,
                psi,
                self.params.nu,
            )
        };
        let (p, stats) = self
            .ppe
            .solve(&rhs, &dirichlet, &self.params.ppe_solver, warm)
            .map_err(|e| StepError::SolveFailed {
                system: "ppe",
                step,
                detail: e.to_string(),
            })?;
        if !stats.converged {
            return Err(StepError::SolveFailed {
                system: "ppe",
                step,
                detail: format!(
                    "no convergence in {} iterations (residual {:.3e})",
                    stats.iterations, stats.residual
                ),
            });
        }
        Ok(p)
    }

    /// Interleaved Dirichlet constraint (DOF, value) lists at time t.
    fn dirichlet_values(&self, t: f64) -> (Vec<usize>, Vec<f64>) {
        let mut dofs = Vec::with_capacity(2 * self.dirichlet_scalar.len());
        let mut values = Vec::with_capacity(2 * self.dirichlet_scalar.len());
        for &(d, tag) in &self.dirichlet_scalar {
            let g = self.problem.dirichlet(self.space_u.dof_coords()[d], t, tag);
            dofs.push(2 * d);
            values.push(g[0]);
            dofs.push(2 * d + 1);
            values.push(g[1]);
        }
        (dofs, values)
    }

    fn momentum_load(&self, t: f64) -> Vec<f64> {
        let forcing = |x: [f64; 2]| self.problem.forcing(x, t);
        let f_opt: Option<&dyn Fn([f64; 2]) -> [f64; 2]> = if self.problem.has_forcing() {
            Some(&forcing)
        } else {
            None
        };
        let traction = |x: [f64; 2]| self.problem.traction(x, t);
        let t_opt: Option<&dyn Fn([f64; 2]) -> [f64; 2]> = if self.problem.has_traction() {
            Some(&traction)
        } else {
            None
        };
        assemble_momentum_load(&self.space_u, f_opt, t_opt)
    }

    /// Second-order one-sided difference of n·g in time, used when the
    /// problem provides no analytic rate.
    fn numeric_normal_rate(&self, x: [f64; 2], n: [f64; 2], t: f64, tag: BoundaryTag) -> f64 {
        let tau = self.params.tau;
        let g_dot_n = |s: f64| {
            let g = self.problem.dirichlet(x, s, tag);
            g[0] * n[0] + g[1] * n[1]
        };
        if t >= 2.0 * tau * (1.0 - 1e-9) {
            (3.0 * g_dot_n(t) - 4.0 * g_dot_n(t - tau) + g_dot_n(t - 2.0 * tau)) / (2.0 * tau)
        } else {
            (-3.0 * g_dot_n(t) + 4.0 * g_dot_n(t + tau) - g_dot_n(t + 2.0 * tau)) / (2.0 * tau)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_unit_square, DiagonalPattern};
    use crate::problem::RestProblem;
    use crate::sparse::CooBuilder;
    use rand::{Rng, SeedableRng};

    fn square_mesh(n: usize) -> Arc<Mesh> {
        Arc::new(generate_unit_square(n, n, DiagonalPattern::Right))
    }

    #[test]
    fn rest_state_stays_at_rest_exactly() {
        for pair in [ElementPair::TaylorHoodP2P1, ElementPair::EqualOrderP1P1] {
            let params = SchemeParams::new(0.1, 10.0, 1.0, 0.1, 0.5, pair);
            let mut solver = FlowSolver::new(square_mesh(4), params, RestProblem).unwrap();
            for _ in 0..5 {
                let record = solver.advance().unwrap();
                assert_eq!(record.psi, 1.0);
                assert!(solver.velocity().iter().all(|&v| v == 0.0));
                assert!(solver.pressure().iter().all(|&v| v == 0.0));
                if record.step >= 2 {
                    assert_eq!(record.energy_residual, Some(0.0));
                }
            }
        }
    }

    /// A stationary exact solution entirely inside the P2 space: the
    /// divergence-free, curl-free field u = (−6xy, 3y²−3x²) with forcing
    /// equal to its own (skew-form) convection makes p ≡ 0, so every part
    /// of the step — predictor, corrector, auxiliary update, pressure
    /// recovery — must reproduce the state to solver accuracy.
    struct PolynomialSteady;

    fn poly_velocity(x: [f64; 2]) -> [f64; 2] {
        [-6.0 * x[0] * x[1], 3.0 * (x[1] * x[1] - x[0] * x[0])]
    }

    impl FlowProblem for PolynomialSteady {
        fn initial_velocity(&self, x: [f64; 2]) -> [f64; 2] {
            poly_velocity(x)
        }

        fn dirichlet(&self, x: [f64; 2], _t: f64, _tag: BoundaryTag) -> [f64; 2] {
            poly_velocity(x)
        }

        fn forcing(&self, x: [f64; 2], _t: f64) -> [f64; 2] {
            let r2 = x[0] * x[0] + x[1] * x[1];
            [18.0 * x[0] * r2, 18.0 * x[1] * r2]
        }

        fn has_forcing(&self) -> bool {
            true
        }
    }

    #[test]
    fn stationary_polynomial_flow_is_reproduced() {
        let params = SchemeParams::new(0.2, 5.0, 1.0, 0.05, 1.0, ElementPair::TaylorHoodP2P1);
        let mut solver = FlowSolver::new(square_mesh(8), params, PolynomialSteady).unwrap();
        let exact = solver.space_u().interpolate_vector(poly_velocity);
        for _ in 0..3 {
            solver.advance().unwrap();
        }
        let err = solver
            .velocity()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-7, "velocity drift {err:e}");
        assert!((solver.state().psi_n - 1.0).abs() < 1e-9);
        let p_max = solver.pressure().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(p_max < 1e-6, "pressure residue {p_max:e}");
    }

    /// Steady shear u = (y, 0): the exact discrete solution on every mesh.
    /// The viscous reaction on the bottom wall is the hand-computable
    /// traction −ν per unit length, pulling the wall along the flow.
    struct ShearProblem;

    impl FlowProblem for ShearProblem {
        fn initial_velocity(&self, x: [f64; 2]) -> [f64; 2] {
            [x[1], 0.0]
        }

        fn dirichlet(&self, x: [f64; 2], _t: f64, _tag: BoundaryTag) -> [f64; 2] {
            [x[1], 0.0]
        }
    }

    #[test]
    fn shear_flow_wall_force() {
        let nu = 0.5;
        let params = SchemeParams::new(nu, 1.0, 1.0, 0.1, 1.0, ElementPair::TaylorHoodP2P1);
        let mut solver = FlowSolver::new(square_mesh(8), params, ShearProblem).unwrap();
        let exact = solver.space_u().interpolate_vector(|x| [x[1], 0.0]);
        for _ in 0..2 {
            solver.advance().unwrap();
        }
        let err = solver
            .velocity()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-8, "shear drift {err:e}");
        // Sum the reaction over the DOFs on y = 0; the fluid drags the
        // bottom wall in +x with force ν · length = ν.
        let mut force_x = 0.0;
        for (d, xy) in solver.space_u().dof_coords().iter().enumerate() {
            if xy[1].abs() < 1e-12 {
                force_x -= solver.last_residual()[2 * d];
            }
        }
        assert!((force_x - nu).abs() < 1e-6, "wall force {force_x}");
    }

    /// Confined decaying vortex: the curl of (sin πx sin πy · x(1−x)y(1−y)),
    /// which vanishes on the boundary together with its stream function.
    struct DecayProblem;

    fn decay_velocity(x: [f64; 2]) -> [f64; 2] {
        let pi = std::f64::consts::PI;
        let (sx, cx) = (pi * x[0]).sin_cos();
        let (sy, cy) = (pi * x[1]).sin_cos();
        let bx = x[0] * (1.0 - x[0]);
        let by = x[1] * (1.0 - x[1]);
        let dbx = 1.0 - 2.0 * x[0];
        let dby = 1.0 - 2.0 * x[1];
        // u = (∂_y φ, −∂_x φ) for φ = sx·sy·bx·by.
        [
            sx * bx * (pi * cy * by + sy * dby),
            -(sy * by * (pi * cx * bx + sx * dbx)),
        ]
    }

    impl FlowProblem for DecayProblem {
        fn initial_velocity(&self, x: [f64; 2]) -> [f64; 2] {
            decay_velocity(x)
        }

        fn dirichlet(&self, _x: [f64; 2], _t: f64, _tag: BoundaryTag) -> [f64; 2] {
            [0.0, 0.0]
        }

        fn homogeneous_dirichlet(&self) -> bool {
            true
        }
    }

    #[test]
    fn energy_identity_audited_on_decay() {
        let params = SchemeParams::new(0.1, 10.0, 1.0, 0.5, 2.5, ElementPair::TaylorHoodP2P1);
        let mut solver = FlowSolver::new(square_mesh(16), params, DecayProblem).unwrap();
        let mut phi_prev = solver.current_record().phi;
        for step in 1..=5 {
            let record = solver.advance().unwrap();
            if step >= 2 {
                let res = record.energy_residual.expect("audit applies");
                assert!(res <= 1e-8, "step {step}: energy residual {res:e}");
            }
            assert!(
                record.phi <= phi_prev * (1.0 + 1e-12),
                "step {step}: {} > {phi_prev}",
                record.phi
            );
            assert!((record.psi - 1.0).abs() < 0.05);
            phi_prev = record.phi;
        }
    }

    #[test]
    fn bdf2_identity_constant_and_random() {
        let m = SparseMatrix::identity(4);
        let v = vec![1.0, -2.0, 3.0, 0.5];
        assert_eq!(bdf2_identity_residual(&m, &v, &v, &v), 0.0);

        let mut rng = rand::rngs::StdRng::seed_from_u64(99);
        let n = 12;
        // Random SPD matrix: diagonally dominated symmetric pattern.
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            builder.add(i, i, 4.0 + rng.gen_range(0.0..1.0));
            if i + 1 < n {
                let off = rng.gen_range(-0.5..0.5);
                builder.add(i, i + 1, off);
                builder.add(i + 1, i, off);
            }
        }
        let m = builder.build();
        for _ in 0..20 {
            let v2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let res = bdf2_identity_residual(&m, &v2, &v1, &v0);
            assert!(res <= 1e-12, "residual {res:e}");
        }
    }

    #[test]
    fn element_pair_names_round_trip() {
        for pair in [ElementPair::TaylorHoodP2P1, ElementPair::EqualOrderP1P1] {
            assert_eq!(ElementPair::from_name(pair.name()), Some(pair));
        }
        assert_eq!(
            ElementPair::from_name("taylor_hood_p2p1"),
            Some(ElementPair::TaylorHoodP2P1)
        );
        assert!(ElementPair::from_name("p3p2").is_none());
    }
}
