//! Command-line driver: run a configured benchmark case, run the temporal
//! convergence study, or validate a mesh file. Thin orchestration only —
//! everything numerical lives in the library.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use savflow::benchmarks::{
    compute_forces, locate_primary_vortex, pressure_l2_error, run_taylor_green_convergence,
    taylor_green_exact, taylor_green_gradient, velocity_gradient_l2_error, TaylorGreenStudy,
};
use savflow::config::{parse_config, CaseId, RunConfig};
use savflow::mesh::{read_mesh, BoundaryTag, Mesh, MeshFormat};
use savflow::output::{write_diagnostics_csv, write_vtk};
use savflow::problem::FlowProblem;
use savflow::stepper::{DiagnosticsRecord, FlowSolver};
use savflow::{CylinderProblem, LidCavityProblem, TaylorGreenProblem};

#[derive(Parser)]
#[command(name = "savflow", version, about = "Incompressible flow solver with an auxiliary-variable splitting scheme")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Native,
    Gmsh,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured case to its final time, writing diagnostics and
    /// solution snapshots.
    Run {
        /// Configuration file.
        config: PathBuf,
        /// Override the output directory.
        #[arg(long, value_name = "DIR")]
        output: Option<PathBuf>,
        /// Force bitwise-reproducible runs. Assembly and solves are
        /// sequential and deterministic already, so this is a no-op kept
        /// for interface stability.
        #[arg(long)]
        deterministic: bool,
        /// Write a VTK snapshot every N steps (0: only the final state).
        #[arg(long, value_name = "N")]
        snapshot_every: Option<usize>,
        /// Suppress per-step progress output.
        #[arg(long)]
        quiet: bool,
    },
    /// Run the decaying-vortex convergence study: halve the time step and
    /// report errors and observed orders.
    Convergence {
        /// Configuration file; the case must be taylor_green.
        config: PathBuf,
        /// Override the output directory.
        #[arg(long, value_name = "DIR")]
        output: Option<PathBuf>,
        /// Accepted for interface stability; runs are deterministic.
        #[arg(long)]
        deterministic: bool,
        /// Only print the final table.
        #[arg(long)]
        quiet: bool,
    },
    /// Read a mesh file, check its invariants and print summary statistics.
    ValidateMesh {
        /// Mesh file (native format, or Gmsh MSH 2.2 ASCII with --format gmsh).
        path: PathBuf,
        /// File format; defaults to gmsh for `.msh` files, native otherwise.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output, deterministic: _, snapshot_every, quiet } => {
            run_case(&config, output, snapshot_every, quiet)
        }
        Command::Convergence { config, output, deterministic: _, quiet } => {
            run_convergence(&config, output, quiet)
        }
        Command::ValidateMesh { path, format } => validate_mesh(&path, format),
    };
    if let Err(msg) = result {
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}

fn load_config(
    path: &Path,
    output: Option<PathBuf>,
    snapshot_every: Option<usize>,
    quiet: bool,
) -> Result<RunConfig, String> {
    let mut config = parse_config(path).map_err(|e| e.to_string())?;
    if let Some(dir) = output {
        config.output_dir = dir;
    }
    if let Some(n) = snapshot_every {
        config.snapshot_every = n;
    }
    config.quiet |= quiet;
    Ok(config)
}

fn prepare_output_dir(config: &RunConfig) -> Result<(), String> {
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| format!("cannot create output directory {}: {e}", config.output_dir.display()))
}

fn run_case(
    path: &Path,
    output: Option<PathBuf>,
    snapshot_every: Option<usize>,
    quiet: bool,
) -> Result<(), String> {
    let config = load_config(path, output, snapshot_every, quiet)?;
    prepare_output_dir(&config)?;
    let mesh = Arc::new(config.build_mesh().map_err(|e| e.to_string())?);
    if !config.quiet {
        println!(
            "case {} on {} cells ({} nodes), pair {}, nu={:?}, gamma={:?}, alpha={:?}, tau={:?}, T={:?}",
            config.case.name(),
            mesh.cells().len(),
            mesh.nodes().len(),
            config.pair.name(),
            config.nu,
            config.gamma,
            config.alpha,
            config.tau,
            config.t_end,
        );
    }
    match config.case {
        CaseId::TaylorGreen => {
            let problem = TaylorGreenProblem { nu: config.nu };
            let solver = FlowSolver::new(mesh, config.scheme_params(), problem)
                .map_err(|e| e.to_string())?;
            let records = drive(solver, &config, |solver| {
                let nu = config.nu;
                let t = solver.time();
                let p_err = pressure_l2_error(solver.space_p(), &solver.state().p_n, |x| {
                    taylor_green_exact(x, t, nu).1
                });
                let g_err =
                    velocity_gradient_l2_error(solver.space_u(), &solver.state().u_n, |x| {
                        taylor_green_gradient(x, t, nu)
                    });
                println!("final pressure L2 error:          {p_err:.6e}");
                println!("final velocity gradient L2 error: {g_err:.6e}");
                Ok(())
            })?;
            summarize(&records, &config);
        }
        CaseId::LidCavity => {
            let solver = FlowSolver::new(mesh, config.scheme_params(), LidCavityProblem)
                .map_err(|e| e.to_string())?;
            let records = drive(solver, &config, |solver| {
                let vortex = locate_primary_vortex(solver.space_u(), &solver.state().u_n);
                println!("primary vortex at ({:.4}, {:.4}), speed {:.3e}", vortex.x, vortex.y, vortex.speed);
                if vortex.boundary_warning {
                    println!("warning: vortex search hit the sampling boundary");
                }
                Ok(())
            })?;
            summarize(&records, &config);
        }
        CaseId::TurekCylinder => {
            let solver = FlowSolver::new(mesh, config.scheme_params(), CylinderProblem)
                .map_err(|e| e.to_string())?;
            let mut forces: Vec<(f64, [f64; 2])> = Vec::new();
            let records = drive_with(solver, &config, |solver| {
                let (_, coeffs) = compute_forces(solver).map_err(|e| e.to_string())?;
                forces.push((solver.time(), coeffs));
                Ok(())
            })?;
            write_forces_csv(&forces, &config.output_dir.join("forces.csv"))
                .map_err(|e| format!("cannot write forces.csv: {e}"))?;
            let cd_max = forces.iter().map(|(_, c)| c[0]).fold(f64::MIN, f64::max);
            let cl_max = forces.iter().map(|(_, c)| c[1]).fold(f64::MIN, f64::max);
            println!("max drag coefficient: {cd_max:.4}");
            println!("max lift coefficient: {cl_max:.4}");
            summarize(&records, &config);
        }
    }
    Ok(())
}

/// Advance the solver to the final time, writing snapshots and the
/// diagnostics CSV; `finish` runs once at the final state.
fn drive<P: FlowProblem>(
    solver: FlowSolver<P>,
    config: &RunConfig,
    finish: impl FnOnce(&FlowSolver<P>) -> Result<(), String>,
) -> Result<Vec<DiagnosticsRecord>, String> {
    let mut finish = Some(finish);
    drive_with_hooks(solver, config, |_| Ok(()), |solver| {
        finish.take().expect("finish runs once")(solver)
    })
}

/// Like [`drive`], with a per-step hook.
fn drive_with<P: FlowProblem>(
    solver: FlowSolver<P>,
    config: &RunConfig,
    per_step: impl FnMut(&FlowSolver<P>) -> Result<(), String>,
) -> Result<Vec<DiagnosticsRecord>, String> {
    drive_with_hooks(solver, config, per_step, |_| Ok(()))
}

fn drive_with_hooks<P: FlowProblem>(
    mut solver: FlowSolver<P>,
    config: &RunConfig,
    mut per_step: impl FnMut(&FlowSolver<P>) -> Result<(), String>,
    finish: impl FnOnce(&FlowSolver<P>) -> Result<(), String>,
) -> Result<Vec<DiagnosticsRecord>, String> {
    let n_steps = config.scheme_params().n_steps();
    let mut records = Vec::with_capacity(n_steps);
    let progress_stride = (n_steps / 20).max(1);
    for step in 1..=n_steps {
        let record = solver.advance().map_err(|e| e.to_string())?;
        if !config.quiet && (step % progress_stride == 0 || step == n_steps) {
            println!(
                "step {step:>6}/{n_steps}  t={:<8.4}  psi={:.6}  Phi={:.6e}  div_u={:.3e}",
                record.time, record.psi, record.phi, record.div_u_l2
            );
        }
        records.push(record);
        per_step(&solver)?;
        if config.snapshot_every > 0 && step % config.snapshot_every == 0 && step != n_steps {
            let name = format!("solution_{step:06}.vtk");
            write_snapshot(&solver, config, &name)?;
        }
    }
    write_snapshot(&solver, config, "solution.vtk")?;
    let csv = config.output_dir.join("diagnostics.csv");
    write_diagnostics_csv(&records, &csv).map_err(|e| format!("cannot write diagnostics: {e}"))?;
    finish(&solver)?;
    if !config.quiet {
        println!("wrote {}", csv.display());
    }
    Ok(records)
}

fn write_snapshot<P: FlowProblem>(
    solver: &FlowSolver<P>,
    config: &RunConfig,
    name: &str,
) -> Result<(), String> {
    let path = config.output_dir.join(name);
    let title = format!("{} t={:?}", config.case.name(), solver.time());
    write_vtk(
        solver.space_u(),
        solver.space_p(),
        &solver.state().u_n,
        &solver.state().p_n,
        &title,
        &path,
    )
    .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn summarize(records: &[DiagnosticsRecord], config: &RunConfig) {
    if config.quiet {
        return;
    }
    if let Some(last) = records.last() {
        println!(
            "finished at t={:?}: psi={:.6}, Phi={:.6e}",
            last.time, last.psi, last.phi
        );
    }
    let worst = records
        .iter()
        .filter_map(|r| r.energy_residual)
        .fold(f64::NAN, f64::max);
    if worst.is_nan() {
        println!("energy identity: not audited (inhomogeneous boundary data or forcing)");
    } else {
        println!("max energy identity residual: {worst:.3e}");
    }
}

fn write_forces_csv(forces: &[(f64, [f64; 2])], path: &Path) -> std::io::Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "time,drag_coefficient,lift_coefficient")?;
    for (t, c) in forces {
        writeln!(w, "{t:?},{:?},{:?}", c[0], c[1])?;
    }
    w.flush()
}

fn run_convergence(path: &Path, output: Option<PathBuf>, quiet: bool) -> Result<(), String> {
    let config = load_config(path, output, None, quiet)?;
    if config.case != CaseId::TaylorGreen {
        return Err(format!(
            "convergence studies need case taylor_green, got {}",
            config.case.name()
        ));
    }
    prepare_output_dir(&config)?;
    let mesh = Arc::new(config.build_mesh().map_err(|e| e.to_string())?);
    let study = TaylorGreenStudy {
        nu: config.nu,
        gamma: config.gamma,
        alpha: config.alpha,
        t_end: config.t_end,
        tau0: config.tau0,
        n_halvings: config.n_halvings,
    };
    if !config.quiet {
        println!(
            "convergence study on {} cells, pair {}, tau0={:?}, {} halvings",
            mesh.cells().len(),
            config.pair.name(),
            study.tau0,
            study.n_halvings,
        );
    }
    let table =
        run_taylor_green_convergence(&mesh, config.pair, &study).map_err(|e| e.to_string())?;
    print!("{table}");
    let csv = config.output_dir.join("convergence.csv");
    write_convergence_csv(&table.rows, &csv).map_err(|e| format!("cannot write {}: {e}", csv.display()))?;
    if !config.quiet {
        println!("wrote {}", csv.display());
    }
    Ok(())
}

fn write_convergence_csv(
    rows: &[savflow::ConvergenceRow],
    path: &Path,
) -> std::io::Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "tau,pressure_error,gradient_error")?;
    for r in rows {
        writeln!(w, "{:?},{:?},{:?}", r.tau, r.pressure_error, r.gradient_error)?;
    }
    w.flush()
}

fn validate_mesh(path: &Path, format: Option<FormatArg>) -> Result<(), String> {
    let format = match format {
        Some(FormatArg::Native) => MeshFormat::Native,
        Some(FormatArg::Gmsh) => MeshFormat::GmshMsh2Ascii,
        None => {
            if path.extension().is_some_and(|e| e == "msh") {
                MeshFormat::GmshMsh2Ascii
            } else {
                MeshFormat::Native
            }
        }
    };
    let mesh = read_mesh(path, format).map_err(|e| e.to_string())?;
    print_mesh_stats(&mesh);
    Ok(())
}

fn print_mesh_stats(mesh: &Mesh) {
    println!("nodes:            {}", mesh.nodes().len());
    println!("cells:            {}", mesh.cells().len());
    println!("boundary facets:  {}", mesh.facets().len());
    for tag in BoundaryTag::ALL {
        let count = mesh.facets().iter().filter(|f| f.tag == tag).count();
        if count > 0 {
            println!("  {:<15} {count}", format!("{}:", tag.name()));
        }
    }
    println!("total area:       {:.6}", mesh.total_area());
    println!("mesh size h:      {:.6}", mesh.h());
    println!("quasi_uniformity: {:.3}", mesh.quasi_uniformity());
    if !mesh.repaired_cells().is_empty() {
        println!("repaired cells:   {}", mesh.repaired_cells().len());
    }
    println!("mesh is valid");
}
