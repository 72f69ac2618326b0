//! Mesh statistics and validation report.
//!
//! Reads a mesh file (native or Gmsh MSH 2.2, chosen by extension) or
//! generates a built-in mesh, validates it, and prints size, boundary-tag
//! and quality statistics.
//!
//! Usage: mesh_report [path | square <n> | channel <level>]
//!   default: square 16

use std::path::Path;
use std::sync::Arc;

use savflow::{
    build_space, generate_turek_channel, generate_unit_square, read_mesh, BoundaryTag,
    DiagonalPattern, Mesh, MeshFormat,
};

fn load(args: &[String]) -> Mesh {
    match args.first().map(String::as_str) {
        None | Some("square") => {
            let n = args.get(1).map_or(16, |s| s.parse().expect("n"));
            generate_unit_square(n, n, DiagonalPattern::Right)
        }
        Some("channel") => {
            let level = args.get(1).map_or(1, |s| s.parse().expect("level"));
            generate_turek_channel(level)
        }
        Some(path) => {
            let format = if path.ends_with(".msh") {
                MeshFormat::GmshMsh2Ascii
            } else {
                MeshFormat::Native
            };
            read_mesh(Path::new(path), format).unwrap_or_else(|e| panic!("{e}"))
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mesh = Arc::new(load(&args));

    println!("nodes:  {}", mesh.nodes().len());
    println!("cells:  {}", mesh.cells().len());
    println!("facets: {}", mesh.facets().len());
    for tag in BoundaryTag::ALL {
        let count = mesh.facets().iter().filter(|f| f.tag == tag).count();
        if count > 0 {
            println!("  {:<18} {count}", tag.name());
        }
    }
    println!("total area:       {:.6}", mesh.total_area());
    println!("mesh size h:      {:.6}", mesh.h());
    println!("quasi-uniformity: {:.3}", mesh.quasi_uniformity());
    if !mesh.repaired_cells().is_empty() {
        println!("repaired cells:   {}", mesh.repaired_cells().len());
    }

    let space_p1 = build_space(mesh.clone(), 1, 1);
    let space_p2 = build_space(mesh.clone(), 2, 1);
    println!("P1 scalar DOFs:   {}", space_p1.n_dofs());
    println!("P2 scalar DOFs:   {}", space_p2.n_dofs());
}
