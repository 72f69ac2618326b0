//! Scratch experiment: track the primary-vortex trajectory while the
//! cavity settles, along with the step-to-step velocity change.
//!
//! Usage: cavity_settle [n] [pair] [tau] [t_end] [stride] [gamma] [lid]

use std::sync::Arc;

use savflow::benchmarks::{locate_primary_vortex, LidCavityProblem};
use savflow::mesh::BoundaryTag;
use savflow::problem::FlowProblem;
use savflow::stepper::{ElementPair, FlowSolver, SchemeParams};
use savflow::cavity_mesh;

struct UniformLid;

impl FlowProblem for UniformLid {
    fn initial_velocity(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn dirichlet(&self, _x: [f64; 2], t: f64, tag: BoundaryTag) -> [f64; 2] {
        match tag {
            BoundaryTag::DirichletLid => [1.0 - (-3.0 * t).exp(), 0.0],
            _ => [0.0, 0.0],
        }
    }

    fn normal_rate(&self, _x: [f64; 2], _n: [f64; 2], _t: f64, _tag: BoundaryTag) -> Option<f64> {
        Some(0.0)
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(96, |s| s.parse().expect("n"));
    let pair = args.get(2).map_or(ElementPair::EqualOrderP1P1, |s| {
        ElementPair::from_name(s).expect("pair")
    });
    let tau: f64 = args.get(3).map_or(1.0, |s| s.parse().expect("tau"));
    let t_end: f64 = args.get(4).map_or(300.0, |s| s.parse().expect("t_end"));
    let stride: usize = args.get(5).map_or(10, |s| s.parse().expect("stride"));
    let gamma: f64 = args.get(6).map_or(100.0, |s| s.parse().expect("gamma"));
    let uniform = args.get(7).map_or(false, |s| s == "uniform");

    let mesh = Arc::new(cavity_mesh(n));
    let params = SchemeParams::new(0.0025, gamma, 0.1, tau, t_end, pair);

    println!(
        "cavity settle: n={n} pair={} tau={tau} t_end={t_end} gamma={gamma} lid={}",
        pair.name(),
        if uniform { "uniform" } else { "regularized" }
    );
    if uniform {
        drive(FlowSolver::new(mesh, params, UniformLid).expect("setup"), stride);
    } else {
        drive(FlowSolver::new(mesh, params, LidCavityProblem).expect("setup"), stride);
    }
}

fn drive<P: FlowProblem>(mut solver: FlowSolver<P>, stride: usize) {
    let n_steps = solver.params().n_steps();
    println!("{:>6} {:>8} {:>9} {:>9} {:>11} {:>9}", "step", "t", "vx", "vy", "du_rel", "psi");
    let mut prev = solver.state().u_n.clone();
    for step in 1..=n_steps {
        let rec = solver.advance().expect("step");
        let cur = &solver.state().u_n;
        let mut d2 = 0.0;
        let mut n2 = 0.0;
        for (a, b) in cur.iter().zip(&prev) {
            d2 += (a - b) * (a - b);
            n2 += a * a;
        }
        prev.clone_from(cur);
        if step % stride == 0 || step == n_steps {
            let v = locate_primary_vortex(solver.space_u(), cur);
            println!(
                "{:>6} {:>8.2} {:>9.4} {:>9.4} {:>11.3e} {:>9.6}",
                step,
                solver.time(),
                v.x,
                v.y,
                (d2 / n2).sqrt(),
                rec.psi
            );
        }
    }
}
