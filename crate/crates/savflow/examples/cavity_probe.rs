//! Scratch experiment: settle the cavity, then compare the state against
//! the classical Re=400 reference profile extremes and report the
//! streamfunction extremum and the global interior speed minimum
//! separately.
//!
//! Usage: cavity_probe [n] [pair] [t_end]

use std::sync::Arc;

use savflow::benchmarks::{locate_primary_vortex, streamfunction, LidCavityProblem};
use savflow::stepper::{ElementPair, FlowSolver, SchemeParams};
use savflow::cavity_mesh;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(96, |s| s.parse().expect("n"));
    let pair = args.get(2).map_or(ElementPair::EqualOrderP1P1, |s| {
        ElementPair::from_name(s).expect("pair")
    });
    let t_end: f64 = args.get(3).map_or(60.0, |s| s.parse().expect("t_end"));

    let mesh = Arc::new(cavity_mesh(n));
    let params = SchemeParams::new(0.0025, 100.0, 0.1, 1.0, t_end, pair);
    let n_steps = params.n_steps();
    let mut solver = FlowSolver::new(mesh, params, LidCavityProblem).expect("setup");
    let mut rec = None;
    for _ in 0..n_steps {
        rec = Some(solver.advance().expect("step"));
    }
    let rec = rec.expect("at least one step");
    println!("n={n} pair={} t_end={t_end}: div_u_l2={:.3e}", pair.name(), rec.div_u_l2);

    let space = solver.space_u();
    let u = &solver.state().u_n;
    let eval = |x: f64, y: f64| -> [f64; 2] {
        let v = space.evaluate(u, [x, y]).expect("point inside");
        [v[0], v[1]]
    };

    // Vertical centerline: u_x(0.5, y). Reference (Re=400): min ~ -0.3273
    // near y ~ 0.28.
    let mut umin = (f64::INFINITY, 0.0);
    let mut umax = (f64::NEG_INFINITY, 0.0);
    for k in 1..400 {
        let y = k as f64 / 400.0;
        let v = eval(0.5, y)[0];
        if v < umin.0 {
            umin = (v, y);
        }
        if v > umax.0 && y < 0.99 {
            umax = (v, y);
        }
    }
    println!("centerline u_x: min {:.4} at y={:.4} (ref -0.3273 near 0.28)", umin.0, umin.1);

    // Horizontal centerline: u_y(x, 0.5). Reference (Re=400): max ~ 0.3020
    // near x ~ 0.22, min ~ -0.4499 near x ~ 0.86.
    let mut vmin = (f64::INFINITY, 0.0);
    let mut vmax = (f64::NEG_INFINITY, 0.0);
    for k in 1..400 {
        let x = k as f64 / 400.0;
        let v = eval(x, 0.5)[1];
        if v < vmin.0 {
            vmin = (v, x);
        }
        if v > vmax.0 {
            vmax = (v, x);
        }
    }
    println!("centerline u_y: max {:.4} at x={:.4} (ref 0.3020 near 0.22)", vmax.0, vmax.1);
    println!("centerline u_y: min {:.4} at x={:.4} (ref -0.4499 near 0.86)", vmin.0, vmin.1);

    // Locator output vs the raw global interior speed minimum.
    let v = locate_primary_vortex(space, u);
    println!("locator: ({:.4}, {:.4}) speed {:.3e} boundary_warning={}", v.x, v.y, v.speed, v.boundary_warning);
    let mut smin = (f64::INFINITY, 0.0, 0.0);
    for iy in 1..=201 {
        for ix in 1..=201 {
            let x = ix as f64 / 202.0;
            let y = iy as f64 / 202.0;
            let vv = eval(x, y);
            let sp = vv[0].hypot(vv[1]);
            if sp < smin.0 {
                smin = (sp, x, y);
            }
        }
    }
    println!("global interior |u| min: {:.3e} at ({:.4}, {:.4})", smin.0, smin.1, smin.2);

    // Streamfunction extremum: position and strength (ref psi_min -0.1139
    // at the primary vortex for Re=400).
    let (space_s, s) = streamfunction(space, u);
    let mut sext = (0.0f64, 0.0, 0.0);
    for iy in 1..=201 {
        for ix in 1..=201 {
            let x = ix as f64 / 202.0;
            let y = iy as f64 / 202.0;
            let v = space_s.evaluate(&s, [x, y]).expect("inside")[0];
            if v.abs() > sext.0.abs() {
                sext = (v, x, y);
            }
        }
    }
    println!("streamfunction extremum: {:.4} at ({:.4}, {:.4}) (ref -0.1139)", sext.0, sext.1, sext.2);
}
