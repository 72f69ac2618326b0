//! Temporal convergence study on the decaying analytic vortex.
//!
//! Runs the scheme to T = 1 on a sequence of halved time steps and prints
//! the L² pressure and velocity-gradient errors against the closed-form
//! solution, with observed orders.
//!
//! Usage: taylor_green [n] [pair] [tau0] [halvings]
//!   n        mesh subdivisions per side   (default 48)
//!   pair     p2p1 | p1p1                  (default p2p1)
//!   tau0     largest time step            (default 0.25)
//!   halvings number of τ halvings         (default 3)

use std::sync::Arc;

use savflow::{
    generate_unit_square, run_taylor_green_convergence, DiagonalPattern, ElementPair,
    TaylorGreenStudy,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(48, |s| s.parse().expect("n"));
    let pair = args
        .get(2)
        .map_or(ElementPair::TaylorHoodP2P1, |s| {
            ElementPair::from_name(s).expect("pair must be p2p1 or p1p1")
        });
    let tau0: f64 = args.get(3).map_or(0.25, |s| s.parse().expect("tau0"));
    let halvings: usize = args.get(4).map_or(3, |s| s.parse().expect("halvings"));

    let mesh = Arc::new(generate_unit_square(n, n, DiagonalPattern::Right));
    let study = TaylorGreenStudy {
        tau0,
        n_halvings: halvings,
        ..TaylorGreenStudy::default()
    };
    println!(
        "decaying vortex, {}x{} mesh ({} cells), {} elements, nu={}, gamma={}, alpha={}, T={}",
        n,
        n,
        mesh.cells().len(),
        pair.name(),
        study.nu,
        study.gamma,
        study.alpha,
        study.t_end
    );
    let start = std::time::Instant::now();
    let table = run_taylor_green_convergence(&mesh, pair, &study)
        .unwrap_or_else(|e| panic!("run failed: {e}"));
    print!("{table}");
    println!("elapsed: {:.1?}", start.elapsed());
}
