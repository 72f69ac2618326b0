//! Solution output: VTK legacy ASCII snapshots for visualization and CSV
//! time-series diagnostics. Floats are written in Rust's shortest
//! round-trip form, so reading a file back reproduces the values exactly.

use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::fem::FeSpace;
use crate::stepper::DiagnosticsRecord;

/// Write velocity and pressure as a VTK legacy ASCII unstructured grid.
///
/// Points are the mesh vertices (z = 0) and cells its triangles. Point
/// data holds a 3-component `velocity` vector, the `pressure`, and the
/// scalar `velocity_magnitude`; quadratic velocities are downsampled to
/// their vertex values.
pub fn write_vtk(
    space_u: &FeSpace,
    space_p: &FeSpace,
    u: &[f64],
    p: &[f64],
    title: &str,
    path: &Path,
) -> io::Result<()> {
    assert_eq!(space_u.components(), 2, "velocity space must be vector-valued");
    assert_eq!(u.len(), space_u.n_dofs(), "velocity vector length mismatch");
    assert_eq!(p.len(), space_p.n_dofs(), "pressure vector length mismatch");
    let mesh = space_u.mesh();
    let n_vertices = mesh.nodes().len();

    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# vtk DataFile Version 2.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;

    writeln!(w, "POINTS {n_vertices} double")?;
    for node in mesh.nodes() {
        writeln!(w, "{:?} {:?} 0", node[0], node[1])?;
    }

    let n_cells = mesh.cells().len();
    writeln!(w, "CELLS {n_cells} {}", 4 * n_cells)?;
    for cell in mesh.cells() {
        writeln!(w, "3 {} {} {}", cell[0], cell[1], cell[2])?;
    }
    writeln!(w, "CELL_TYPES {n_cells}")?;
    for _ in 0..n_cells {
        writeln!(w, "5")?;
    }

    // Vertex DOFs come first in both spaces, so downsampling a quadratic
    // field is a prefix read of the interleaved coefficients.
    writeln!(w, "POINT_DATA {n_vertices}")?;
    writeln!(w, "VECTORS velocity double")?;
    for v in 0..n_vertices {
        writeln!(w, "{:?} {:?} 0", u[2 * v], u[2 * v + 1])?;
    }
    writeln!(w, "SCALARS pressure double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in 0..n_vertices {
        writeln!(w, "{:?}", p[v])?;
    }
    writeln!(w, "SCALARS velocity_magnitude double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in 0..n_vertices {
        writeln!(w, "{:?}", u[2 * v].hypot(u[2 * v + 1]))?;
    }
    w.flush()
}

fn format_field(v: f64) -> String {
    format!("{v:?}")
}

/// Write per-step diagnostics as CSV. The `energy_residual` column is
/// empty on steps where the identity does not apply.
pub fn write_diagnostics_csv(records: &[DiagnosticsRecord], path: &Path) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "step,time,psi,Phi,energy_residual,div_u_l2,grad_u_l2")?;
    for r in records {
        let energy = r.energy_residual.map(format_field).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.step,
            format_field(r.time),
            format_field(r.psi),
            format_field(r.phi),
            energy,
            format_field(r.div_u_l2),
            format_field(r.grad_u_l2),
        )?;
    }
    w.flush()
}

/// Read a diagnostics CSV back; inverse of [`write_diagnostics_csv`].
pub fn read_diagnostics_csv(path: &Path) -> io::Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "step,time,psi,Phi,energy_residual,div_u_l2,grad_u_l2" {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unexpected diagnostics header `{header}`"),
        ));
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("line {}: expected 7 fields, got {}", idx + 2, fields.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("line {}: `{s}` is not a number", idx + 2),
                )
            })
        };
        records.push(DiagnosticsRecord {
            step: fields[0].parse().map_err(|_| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("line {}: `{}` is not a step index", idx + 2, fields[0]),
                )
            })?,
            time: num(fields[1])?,
            psi: num(fields[2])?,
            phi: num(fields[3])?,
            energy_residual: if fields[4].is_empty() { None } else { Some(num(fields[4])?) },
            div_u_l2: num(fields[5])?,
            grad_u_l2: num(fields[6])?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::taylor_green_exact;
    use crate::fem::build_space;
    use crate::mesh::{generate_unit_square, DiagonalPattern};
    use std::sync::Arc;

    #[test]
    fn rest_state_vtk_has_expected_structure() {
        let mesh = Arc::new(generate_unit_square(4, 4, DiagonalPattern::Right));
        let space_u = build_space(mesh.clone(), 2, 2);
        let space_p = build_space(mesh.clone(), 1, 1);
        let u = vec![0.0; space_u.n_dofs()];
        let p = vec![0.0; space_p.n_dofs()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rest.vtk");
        write_vtk(&space_u, &space_p, &u, &p, "rest", &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 2.0");
        assert_eq!(lines[2], "ASCII");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        let n_vertices = mesh.nodes().len();
        assert_eq!(lines[4], format!("POINTS {n_vertices} double"));
        let n_cells = mesh.cells().len();
        assert!(text.contains(&format!("CELLS {n_cells} {}", 4 * n_cells)));
        assert!(text.contains(&format!("POINT_DATA {n_vertices}")));
        assert!(text.contains("VECTORS velocity double"));
        assert!(text.contains("SCALARS pressure double 1"));
        assert!(text.contains("SCALARS velocity_magnitude double 1"));

        // Every data row of a rest state is exactly zero, and each point
        // data block holds one row per vertex.
        let vec_start = lines.iter().position(|l| *l == "VECTORS velocity double").unwrap();
        for line in &lines[vec_start + 1..vec_start + 1 + n_vertices] {
            assert_eq!(*line, "0.0 0.0 0");
        }
        let p_start = lines.iter().position(|l| *l == "SCALARS pressure double 1").unwrap();
        assert_eq!(lines[p_start + 1], "LOOKUP_TABLE default");
        for line in &lines[p_start + 2..p_start + 2 + n_vertices] {
            assert_eq!(*line, "0.0");
        }
        let m_start = lines
            .iter()
            .position(|l| *l == "SCALARS velocity_magnitude double 1")
            .unwrap();
        assert_eq!(m_start + 2 + n_vertices, lines.len());
    }

    #[test]
    fn quadratic_velocity_is_downsampled_to_vertices() {
        let mesh = Arc::new(generate_unit_square(8, 8, DiagonalPattern::Right));
        let space_u = build_space(mesh.clone(), 2, 2);
        let space_p = build_space(mesh.clone(), 1, 1);
        let u = space_u.interpolate_vector(|x| taylor_green_exact(x, 0.0, 0.1).0);
        let p = space_p.interpolate(|x| taylor_green_exact(x, 0.0, 0.1).1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tg.vtk");
        write_vtk(&space_u, &space_p, &u, &p, "taylor-green", &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let mag_start = lines
            .iter()
            .position(|l| *l == "SCALARS velocity_magnitude double 1")
            .unwrap()
            + 2;
        let n_vertices = mesh.nodes().len();
        let magnitudes: Vec<f64> = lines[mag_start..mag_start + n_vertices]
            .iter()
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(magnitudes.len(), n_vertices);
        // |u| peaks at 1 on the vertex (1/2, 0) of the initial vortex.
        let max = magnitudes.iter().cloned().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12, "max |u| = {max}");
    }

    #[test]
    fn diagnostics_csv_roundtrips_exactly() {
        let records = vec![
            DiagnosticsRecord {
                step: 1,
                time: 0.1,
                psi: 1.0,
                phi: 0.25,
                energy_residual: None,
                div_u_l2: 1.234e-5,
                grad_u_l2: 3.0_f64.sqrt(),
            },
            DiagnosticsRecord {
                step: 2,
                time: 0.2,
                psi: 1.0 - 1e-13,
                phi: 0.25 * (-0.3_f64).exp(),
                energy_residual: Some(4.4e-16),
                div_u_l2: 9.87e-6,
                grad_u_l2: 2.0_f64.ln(),
            },
            DiagnosticsRecord {
                step: 3,
                time: 0.30000000000000004,
                psi: 0.999,
                phi: 0.2,
                energy_residual: Some(0.0),
                div_u_l2: 0.0,
                grad_u_l2: 1.0,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diag.csv");
        write_diagnostics_csv(&records, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("step,time,psi,Phi,energy_residual,div_u_l2,grad_u_l2\n"));

        let back = read_diagnostics_csv(&path).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.step, b.step);
            assert_eq!(a.time, b.time);
            assert_eq!(a.psi, b.psi);
            assert_eq!(a.phi, b.phi);
            assert_eq!(a.energy_residual, b.energy_residual);
            assert_eq!(a.div_u_l2, b.div_u_l2);
            assert_eq!(a.grad_u_l2, b.grad_u_l2);
        }
    }

    #[test]
    fn repeated_writes_are_bitwise_identical() {
        let records = vec![DiagnosticsRecord {
            step: 7,
            time: 0.7,
            psi: 0.99999,
            phi: 1.0 / 3.0,
            energy_residual: Some(1e-15),
            div_u_l2: 2e-7,
            grad_u_l2: 4.5,
        }];
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_diagnostics_csv(&records, &a).unwrap();
        write_diagnostics_csv(&records, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
