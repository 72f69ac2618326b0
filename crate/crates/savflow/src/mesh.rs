//! Conforming triangle meshes with tagged boundaries.
//!
//! A [`Mesh`] owns node coordinates, counterclockwise cells, and a facet
//! list covering exactly the boundary edges. Construction validates the
//! topology (each interior edge shared by two cells, each boundary edge by
//! one and carrying one tag) and repairs clockwise cells, recording which
//! ones were flipped.

mod generate;
mod io;

pub use generate::{generate_turek_channel, generate_unit_square, DiagonalPattern};
pub use io::{read_gmsh_with_map, read_mesh, MeshFormat};

use crate::error::MeshError;
use std::collections::HashMap;

/// Boundary condition class attached to a boundary facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    DirichletWall,
    DirichletLid,
    DirichletInflow,
    NeumannOutflow,
    DirichletCylinder,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 5] = [
        BoundaryTag::DirichletWall,
        BoundaryTag::DirichletLid,
        BoundaryTag::DirichletInflow,
        BoundaryTag::NeumannOutflow,
        BoundaryTag::DirichletCylinder,
    ];

    /// True for tags forming the Dirichlet part of the boundary.
    pub fn is_dirichlet(self) -> bool {
        !matches!(self, BoundaryTag::NeumannOutflow)
    }

    /// Stable lowercase name used in mesh files and configs.
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::DirichletWall => "wall",
            BoundaryTag::DirichletLid => "lid",
            BoundaryTag::DirichletInflow => "inflow",
            BoundaryTag::NeumannOutflow => "outflow",
            BoundaryTag::DirichletCylinder => "cylinder",
        }
    }

    pub fn from_name(s: &str) -> Option<BoundaryTag> {
        Some(match s {
            "wall" => BoundaryTag::DirichletWall,
            "lid" => BoundaryTag::DirichletLid,
            "inflow" => BoundaryTag::DirichletInflow,
            "outflow" => BoundaryTag::NeumannOutflow,
            "cylinder" => BoundaryTag::DirichletCylinder,
            _ => return None,
        })
    }
}

impl std::fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One boundary edge: its node pair (oriented along the counterclockwise
/// traversal of the owning cell, so the outward normal is a 90° clockwise
/// rotation of the edge direction), the owning cell, and the tag.
#[derive(Debug, Clone, Copy)]
pub struct Facet {
    pub nodes: [usize; 2],
    pub cell: usize,
    pub tag: BoundaryTag,
}

/// A validated triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    element_sizes: Vec<f64>,
    h: f64,
    /// Cells whose input orientation was clockwise and got repaired.
    repaired_cells: Vec<usize>,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Validate raw arrays into a mesh.
    ///
    /// Clockwise cells are repaired by swapping their last two indices and
    /// recorded in [`Mesh::repaired_cells`]. Facets are reoriented to the
    /// owning cell's traversal direction.
    pub fn from_parts(
        nodes: Vec<[f64; 2]>,
        mut cells: Vec<[usize; 3]>,
        facet_tags: Vec<([usize; 2], BoundaryTag)>,
    ) -> Result<Mesh, MeshError> {
        let n = nodes.len();
        let mut repaired_cells = Vec::new();
        for (ci, cell) in cells.iter_mut().enumerate() {
            for &v in cell.iter() {
                if v >= n {
                    return Err(MeshError::Invalid(format!(
                        "cell {ci} references node {v}, but only {n} nodes exist"
                    )));
                }
            }
            if cell[0] == cell[1] || cell[1] == cell[2] || cell[0] == cell[2] {
                return Err(MeshError::Invalid(format!(
                    "cell {ci} has repeated nodes {cell:?}"
                )));
            }
            let area = signed_area(nodes[cell[0]], nodes[cell[1]], nodes[cell[2]]);
            if area == 0.0 {
                return Err(MeshError::Invalid(format!("cell {ci} has zero area")));
            }
            if area < 0.0 {
                cell.swap(1, 2);
                repaired_cells.push(ci);
            }
        }

        // Edge incidence: interior edges must be shared by exactly two
        // cells, boundary edges by exactly one.
        let mut edge_cells: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (ci, cell) in cells.iter().enumerate() {
            for e in 0..3 {
                let a = cell[e];
                let b = cell[(e + 1) % 3];
                edge_cells.entry(edge_key(a, b)).or_default().push(ci);
            }
        }
        for (&(a, b), owners) in &edge_cells {
            if owners.len() > 2 {
                return Err(MeshError::Invalid(format!(
                    "edge ({a}, {b}) is shared by {} cells",
                    owners.len()
                )));
            }
        }

        // Match the facet list against the boundary edges.
        let mut facet_of_edge: HashMap<(usize, usize), usize> = HashMap::new();
        let mut facets = Vec::with_capacity(facet_tags.len());
        for (fi, &([a, b], tag)) in facet_tags.iter().enumerate() {
            if a >= n || b >= n {
                return Err(MeshError::Invalid(format!(
                    "facet {fi} references node out of range: ({a}, {b})"
                )));
            }
            let key = edge_key(a, b);
            let owners = edge_cells.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            match owners {
                [cell] => {
                    if facet_of_edge.insert(key, fi).is_some() {
                        return Err(MeshError::Invalid(format!(
                            "facet {fi} duplicates edge ({a}, {b})"
                        )));
                    }
                    // Orient along the cell's counterclockwise traversal.
                    let c = cells[*cell];
                    let nodes_oriented = (0..3)
                        .map(|e| [c[e], c[(e + 1) % 3]])
                        .find(|&[p, q]| edge_key(p, q) == key)
                        .unwrap();
                    facets.push(Facet {
                        nodes: nodes_oriented,
                        cell: *cell,
                        tag,
                    });
                }
                [] => {
                    return Err(MeshError::Invalid(format!(
                        "dangling facet {fi}: edge ({a}, {b}) belongs to no cell"
                    )));
                }
                _ => {
                    return Err(MeshError::Invalid(format!(
                        "dangling facet {fi}: edge ({a}, {b}) is interior (shared by two cells)"
                    )));
                }
            }
        }
        for (&(a, b), owners) in &edge_cells {
            if owners.len() == 1 && !facet_of_edge.contains_key(&(a, b)) {
                return Err(MeshError::UntaggedBoundary { a, b });
            }
        }

        let element_sizes: Vec<f64> = cells
            .iter()
            .map(|&[a, b, c]| {
                let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                d(nodes[a], nodes[b])
                    .max(d(nodes[b], nodes[c]))
                    .max(d(nodes[c], nodes[a]))
            })
            .collect();
        let h = element_sizes.iter().cloned().fold(0.0, f64::max);

        Ok(Mesh {
            nodes,
            cells,
            facets,
            element_sizes,
            h,
            repaired_cells,
        })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Per-cell diameters (longest edge).
    pub fn element_sizes(&self) -> &[f64] {
        &self.element_sizes
    }

    /// Mesh size h, the largest element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Indices of input cells whose orientation had to be repaired.
    pub fn repaired_cells(&self) -> &[usize] {
        &self.repaired_cells
    }

    pub fn cell_area(&self, ci: usize) -> f64 {
        let [a, b, c] = self.cells[ci];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.cells.len()).map(|ci| self.cell_area(ci)).sum()
    }

    /// Largest ratio of the mesh size to an element diameter; 1 on a
    /// uniform mesh, larger on graded meshes.
    pub fn quasi_uniformity(&self) -> f64 {
        let min = self.element_sizes.iter().cloned().fold(f64::INFINITY, f64::min);
        self.h / min
    }

    /// Outward unit normal of a facet (the owning cell lies to its left).
    pub fn facet_normal(&self, fi: usize) -> [f64; 2] {
        let [a, b] = self.facets[fi].nodes;
        let dx = self.nodes[b][0] - self.nodes[a][0];
        let dy = self.nodes[b][1] - self.nodes[a][1];
        let len = (dx * dx + dy * dy).sqrt();
        [dy / len, -dx / len]
    }

    pub fn facet_length(&self, fi: usize) -> f64 {
        let [a, b] = self.facets[fi].nodes;
        let dx = self.nodes[b][0] - self.nodes[a][0];
        let dy = self.nodes[b][1] - self.nodes[a][1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Midpoint of a facet, handy for geometric retagging.
    pub fn facet_midpoint(&self, fi: usize) -> [f64; 2] {
        let [a, b] = self.facets[fi].nodes;
        [
            0.5 * (self.nodes[a][0] + self.nodes[b][0]),
            0.5 * (self.nodes[a][1] + self.nodes[b][1]),
        ]
    }

    /// Reassign boundary tags facet by facet. The closure receives the
    /// facet midpoint and current tag and returns the new tag.
    pub fn retag_boundary(&mut self, f: impl Fn([f64; 2], BoundaryTag) -> BoundaryTag) {
        for fi in 0..self.facets.len() {
            let mid = self.facet_midpoint(fi);
            let tag = self.facets[fi].tag;
            self.facets[fi].tag = f(mid, tag);
        }
    }

    /// True if any facet carries the tag.
    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.facets.iter().any(|f| f.tag == tag)
    }

    /// Write the native ASCII format (see [`read_mesh`]).
    pub fn write_native(&self, path: &std::path::Path) -> Result<(), MeshError> {
        io::write_native(self, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_facets() -> Vec<([usize; 2], BoundaryTag)> {
        // Unit square 0:(0,0) 1:(1,0) 2:(0,1) 3:(1,1), cells (0,1,3), (0,3,2).
        vec![
            ([0, 1], BoundaryTag::DirichletWall),
            ([1, 3], BoundaryTag::DirichletWall),
            ([3, 2], BoundaryTag::DirichletWall),
            ([2, 0], BoundaryTag::DirichletWall),
        ]
    }

    fn square_nodes() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    }

    #[test]
    fn minimal_square_mesh_is_valid() {
        let mesh =
            Mesh::from_parts(square_nodes(), vec![[0, 1, 3], [0, 3, 2]], square_facets()).unwrap();
        assert_eq!(mesh.cells().len(), 2);
        assert_eq!(mesh.nodes().len(), 4);
        assert_eq!(mesh.facets().len(), 4);
        assert!((mesh.total_area() - 1.0).abs() < 1e-15);
        assert!(mesh.repaired_cells().is_empty());
    }

    #[test]
    fn clockwise_cell_is_repaired_and_reported() {
        let mesh =
            Mesh::from_parts(square_nodes(), vec![[0, 3, 1], [0, 3, 2]], square_facets()).unwrap();
        assert_eq!(mesh.repaired_cells(), &[0]);
        assert!(mesh.cell_area(0) > 0.0);
    }

    #[test]
    fn zero_area_cell_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let err = Mesh::from_parts(nodes, vec![[0, 1, 2]], vec![]).unwrap_err();
        assert!(err.to_string().contains("zero area"));
    }

    #[test]
    fn interior_facet_rejected_as_dangling() {
        let mut facets = square_facets();
        facets.push(([0, 3], BoundaryTag::DirichletWall));
        let err =
            Mesh::from_parts(square_nodes(), vec![[0, 1, 3], [0, 3, 2]], facets).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dangling facet 4"), "{msg}");
    }

    #[test]
    fn missing_facet_rejected_as_untagged() {
        let mut facets = square_facets();
        facets.pop();
        let err =
            Mesh::from_parts(square_nodes(), vec![[0, 1, 3], [0, 3, 2]], facets).unwrap_err();
        assert!(matches!(err, MeshError::UntaggedBoundary { .. }));
    }

    #[test]
    fn facet_normals_point_outward() {
        let mesh =
            Mesh::from_parts(square_nodes(), vec![[0, 1, 3], [0, 3, 2]], square_facets()).unwrap();
        for fi in 0..mesh.facets().len() {
            let n = mesh.facet_normal(fi);
            let mid = mesh.facet_midpoint(fi);
            // Outward means pointing away from the square's center.
            let out = [mid[0] - 0.5, mid[1] - 0.5];
            assert!(n[0] * out[0] + n[1] * out[1] > 0.0, "facet {fi}");
        }
    }

    #[test]
    fn quasi_uniformity_two_to_one() {
        // Two triangles meeting at one vertex, the second half the size of
        // the first, gives a size ratio of exactly 2.
        let nodes = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [-0.5, 0.0],
            [0.0, -0.5],
        ];
        let cells = vec![[0, 1, 2], [0, 3, 4]];
        let facets = vec![
            ([0, 1], BoundaryTag::DirichletWall),
            ([1, 2], BoundaryTag::DirichletWall),
            ([2, 0], BoundaryTag::DirichletWall),
            ([0, 3], BoundaryTag::DirichletWall),
            ([3, 4], BoundaryTag::DirichletWall),
            ([4, 0], BoundaryTag::DirichletWall),
        ];
        let mesh = Mesh::from_parts(nodes, cells, facets).unwrap();
        assert!((mesh.quasi_uniformity() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn retag_lid() {
        let mut mesh =
            Mesh::from_parts(square_nodes(), vec![[0, 1, 3], [0, 3, 2]], square_facets()).unwrap();
        mesh.retag_boundary(|mid, tag| {
            if mid[1] > 1.0 - 1e-12 {
                BoundaryTag::DirichletLid
            } else {
                tag
            }
        });
        assert!(mesh.has_tag(BoundaryTag::DirichletLid));
        let lids: Vec<_> = mesh
            .facets()
            .iter()
            .filter(|f| f.tag == BoundaryTag::DirichletLid)
            .collect();
        assert_eq!(lids.len(), 1);
    }
}
