//! Regularized lid-driven cavity at Re = 400.
//!
//! Spins up the cavity with the smooth lid profile and reports the primary
//! vortex location of the final state, the range of the auxiliary scalar,
//! and the advective step ratio τ·max|u|/h — the scheme takes steps far
//! beyond any advective CFL limit and stays stable.
//!
//! Usage: lid_cavity [n] [pair] [t_end]
//!   n      mesh subdivisions per side (default 64)
//!   pair   p2p1 | p1p1                (default p2p1)
//!   t_end  final time                 (default 30)

use std::sync::Arc;

use savflow::{cavity_mesh, run_lid_cavity, CavityStudy, ElementPair};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(64, |s| s.parse().expect("n"));
    let pair = args.get(2).map_or(ElementPair::TaylorHoodP2P1, |s| {
        ElementPair::from_name(s).expect("pair must be p2p1 or p1p1")
    });
    let t_end: f64 = args.get(3).map_or(30.0, |s| s.parse().expect("t_end"));

    let mesh = Arc::new(cavity_mesh(n));
    let study = CavityStudy {
        t_end,
        ..CavityStudy::default()
    };
    println!(
        "lid-driven cavity, {}x{} mesh, {} elements, nu={}, gamma={}, alpha={}, tau={}, T={}",
        n, n, pair.name(), study.nu, study.gamma, study.alpha, study.tau, study.t_end
    );
    let start = std::time::Instant::now();
    let result = run_lid_cavity(&mesh, pair, &study).unwrap_or_else(|e| panic!("run failed: {e}"));

    let psi_min = result.psi_history.iter().cloned().fold(f64::INFINITY, f64::min);
    let psi_max = result.psi_history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let v = &result.vortex;
    println!("primary vortex: ({:.4}, {:.4})  |u| = {:.3e}", v.x, v.y, v.speed);
    if v.boundary_warning {
        println!("warning: vortex minimum sits on the sampling boundary");
    }
    println!("psi range: [{psi_min:.6}, {psi_max:.6}]");
    println!("advective step ratio tau*max|u|/h = {:.1}", result.cfl);
    println!("elapsed: {:.1?}", start.elapsed());
}
