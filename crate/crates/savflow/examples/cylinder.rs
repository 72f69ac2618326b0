//! Pulsating flow past a cylinder in a channel (drag/lift benchmark).
//!
//! Runs one period of the time-periodic inflow and prints the drag and
//! lift coefficient maxima. Reference values for this configuration are
//! C_D max ≈ 2.95 and C_L max ≈ 0.478; approaching them requires the
//! default resolution (refinement level 2, ~12k cells) or finer and the
//! small default time step, so the full run takes a while.
//!
//! Usage: cylinder [level] [tau] [t_end]
//!   level  mesh refinement level  (default 2)
//!   tau    time step              (default 0.0025)
//!   t_end  final time             (default 8)

use std::sync::Arc;

use savflow::{generate_turek_channel, run_turek_cylinder, ElementPair, TurekStudy};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let level: usize = args.get(1).map_or(2, |s| s.parse().expect("level"));
    let tau: f64 = args.get(2).map_or(0.0025, |s| s.parse().expect("tau"));
    let t_end: f64 = args.get(3).map_or(8.0, |s| s.parse().expect("t_end"));

    let mesh = Arc::new(generate_turek_channel(level));
    let study = TurekStudy {
        tau,
        t_end,
        ..TurekStudy::default()
    };
    println!(
        "cylinder in channel, level {} mesh ({} cells), nu={}, gamma={}, alpha={}, tau={}",
        level,
        mesh.cells().len(),
        study.nu,
        study.gamma,
        study.alpha,
        study.tau
    );
    let start = std::time::Instant::now();
    let result =
        run_turek_cylinder(&mesh, ElementPair::TaylorHoodP2P1, &study)
            .unwrap_or_else(|e| panic!("run failed: {e}"));

    // Print a coarse trace of the coefficient evolution.
    let stride = (result.times.len() / 32).max(1);
    println!("{:>8} {:>10} {:>10}", "t", "C_D", "C_L");
    for i in (0..result.times.len()).step_by(stride) {
        println!(
            "{:>8.3} {:>10.4} {:>10.4}",
            result.times[i], result.drag[i], result.lift[i]
        );
    }
    println!("C_D max = {:.4}", result.cd_max);
    println!("C_L max = {:.4}", result.cl_max);
    let psi_dev = result
        .records
        .iter()
        .map(|r| (r.psi - 1.0).abs())
        .fold(0.0f64, f64::max);
    println!("max |psi - 1| = {psi_dev:.2e}");
    println!("elapsed: {:.1?}", start.elapsed());
}
