//! Runtime verification of the per-step energy identity.
//!
//! Drives a confined decaying vortex (no forcing, homogeneous boundary
//! data) and prints the audited energy-identity residual for a range of
//! time steps, including deliberately huge ones: the balance holds to
//! solver accuracy and the discrete energy never grows, no matter how
//! large τ is.
//!
//! Usage: energy_decay [n] [steps]
//!   n      mesh subdivisions per side (default 32)
//!   steps  steps per time-step value  (default 10)

use std::sync::Arc;

use savflow::{
    generate_unit_square, DecayingVortexProblem, DiagonalPattern, ElementPair, FlowSolver,
    SchemeParams,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(32, |s| s.parse().expect("n"));
    let steps: usize = args.get(2).map_or(10, |s| s.parse().expect("steps"));
    let mesh = Arc::new(generate_unit_square(n, n, DiagonalPattern::Right));

    for &tau in &[0.01, 0.1, 1.0, 10.0] {
        let params = SchemeParams::new(
            0.1,
            10.0,
            1.0,
            tau,
            tau * steps as f64,
            ElementPair::TaylorHoodP2P1,
        );
        let mut solver = FlowSolver::new(mesh.clone(), params, DecayingVortexProblem)
            .unwrap_or_else(|e| panic!("setup failed: {e}"));
        println!("tau = {tau}");
        println!(
            "{:>5} {:>12} {:>14} {:>14} {:>12}",
            "step", "psi", "Phi", "energy_resid", "div_u_L2"
        );
        let mut phi_prev = f64::INFINITY;
        for _ in 0..steps {
            let r = solver.advance().unwrap_or_else(|e| panic!("step failed: {e}"));
            let resid = r
                .energy_residual
                .map_or("    (startup)".to_string(), |e| format!("{e:14.3e}"));
            println!(
                "{:>5} {:>12.9} {:>14.8e} {} {:>12.3e}",
                r.step, r.psi, r.phi, resid, r.div_u_l2
            );
            assert!(r.phi <= phi_prev, "discrete energy grew");
            phi_prev = r.phi;
        }
        println!();
    }
}
