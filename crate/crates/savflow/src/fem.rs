//! Lagrange finite element spaces on triangles: P1 and P2 reference bases,
//! symmetric quadrature rules, global DOF numbering, interpolation, and
//! point evaluation.
//!
//! Scalar DOFs are numbered vertices first, then (for P2) one DOF per mesh
//! edge; vector fields interleave components, so scalar DOF `i` owns vector
//! DOFs `2i` and `2i+1`. The vertices-first ordering is what lets the VTK
//! writer slice vertex values straight out of a P2 vector.

use crate::mesh::{BoundaryTag, Mesh};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// Values and reference gradients of the Lagrange basis at a barycentric
/// point. P1 has 3 functions, P2 has 6 (vertices then opposite-edge
/// midpoints: function 3 lives on edge (1,2), 4 on (2,0), 5 on (0,1)).
///
/// Reference coordinates are (ξ, η) with λ = (1−ξ−η, ξ, η).
pub fn reference_basis(degree: usize, bary: [f64; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let [l0, l1, l2] = bary;
    const GRAD_L: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    match degree {
        1 => (vec![l0, l1, l2], GRAD_L.to_vec()),
        2 => {
            let values = vec![
                l0 * (2.0 * l0 - 1.0),
                l1 * (2.0 * l1 - 1.0),
                l2 * (2.0 * l2 - 1.0),
                4.0 * l1 * l2,
                4.0 * l2 * l0,
                4.0 * l0 * l1,
            ];
            let g = |i: usize| GRAD_L[i];
            let lin = |c: f64, gi: [f64; 2], d: f64, gj: [f64; 2]| {
                [c * gi[0] + d * gj[0], c * gi[1] + d * gj[1]]
            };
            let grads = vec![
                lin(4.0 * l0 - 1.0, g(0), 0.0, g(0)),
                lin(4.0 * l1 - 1.0, g(1), 0.0, g(1)),
                lin(4.0 * l2 - 1.0, g(2), 0.0, g(2)),
                lin(4.0 * l2, g(1), 4.0 * l1, g(2)),
                lin(4.0 * l0, g(2), 4.0 * l2, g(0)),
                lin(4.0 * l1, g(0), 4.0 * l0, g(1)),
            ];
            (values, grads)
        }
        _ => panic!("unsupported basis degree {degree} (only 1 and 2)"),
    }
}

/// Number of scalar basis functions per cell.
pub fn basis_size(degree: usize) -> usize {
    match degree {
        1 => 3,
        2 => 6,
        _ => panic!("unsupported basis degree {degree}"),
    }
}

/// A symmetric quadrature rule on the reference triangle. Weights sum to
/// the reference area 1/2; all weights positive.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[b, a, a], [a, b, a], [a, a, b]]
}

fn orbit6(a: f64, b: f64) -> [[f64; 3]; 6] {
    let c = 1.0 - a - b;
    [
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ]
}

/// Quadrature rule exact for all polynomials up to `exactness_degree`
/// (supported: 1 through 6). Degree 3 returns the 6-point degree-4 rule to
/// keep all weights positive.
pub fn quadrature_rule(exactness_degree: usize) -> QuadratureRule {
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    // Normalized weights (summing to 1); scaled by the reference area below.
    match exactness_degree {
        1 => {
            points.push([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
            weights.push(1.0);
        }
        2 => {
            points.extend(orbit3(1.0 / 6.0));
            weights.extend([1.0 / 3.0; 3]);
        }
        3 | 4 => {
            points.extend(orbit3(0.445948490915965));
            weights.extend([0.223381589678011; 3]);
            points.extend(orbit3(0.091576213509771));
            weights.extend([0.109951743655322; 3]);
        }
        5 => {
            points.push([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
            weights.push(0.225);
            points.extend(orbit3(0.470142064105115));
            weights.extend([0.132394152788506; 3]);
            points.extend(orbit3(0.101286507323456));
            weights.extend([0.125939180544827; 3]);
        }
        6 => {
            points.extend(orbit3(0.063089014491502));
            weights.extend([0.050844906370207; 3]);
            points.extend(orbit3(0.249286745170910));
            weights.extend([0.116786275726379; 3]);
            points.extend(orbit6(0.053145049844817, 0.310352451033784));
            weights.extend([0.082851075618374; 6]);
        }
        other => panic!("unsupported quadrature exactness degree {other} (1..=6)"),
    }
    for w in &mut weights {
        *w *= 0.5;
    }
    QuadratureRule {
        points,
        weights,
        exactness: exactness_degree,
    }
}

/// Gauss-Legendre quadrature on [0,1] exact for the requested polynomial
/// degree, as (point, weight) pairs with weights summing to 1.
pub fn facet_quadrature(exactness_degree: usize) -> Vec<(f64, f64)> {
    let n = exactness_degree / 2 + 1;
    match n {
        1 => vec![(0.5, 1.0)],
        2 => {
            let d = 0.5 / 3.0f64.sqrt();
            vec![(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }
        3 => {
            let d = 0.5 * (3.0f64 / 5.0).sqrt();
            vec![
                (0.5 - d, 5.0 / 18.0),
                (0.5, 4.0 / 9.0),
                (0.5 + d, 5.0 / 18.0),
            ]
        }
        4 => {
            let x1 = 0.339981043584856;
            let x2 = 0.861136311594053;
            let w1 = 0.652145154862546 / 2.0;
            let w2 = 0.347854845137454 / 2.0;
            vec![
                (0.5 - 0.5 * x2, w2),
                (0.5 - 0.5 * x1, w1),
                (0.5 + 0.5 * x1, w1),
                (0.5 + 0.5 * x2, w2),
            ]
        }
        _ => panic!("unsupported facet quadrature degree {exactness_degree}"),
    }
}

/// Affine geometry of one cell: Jacobian of the reference-to-physical map,
/// its determinant (twice the area), and the inverse transpose used to push
/// reference gradients to physical ones.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub jac: [[f64; 2]; 2],
    pub inv_jt: [[f64; 2]; 2],
    pub det: f64,
}

impl CellGeometry {
    pub fn new(mesh: &Mesh, cell: usize) -> Self {
        let [a, b, c] = mesh.cells()[cell];
        let pa = mesh.nodes()[a];
        let pb = mesh.nodes()[b];
        let pc = mesh.nodes()[c];
        let jac = [
            [pb[0] - pa[0], pc[0] - pa[0]],
            [pb[1] - pa[1], pc[1] - pa[1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_jt = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        CellGeometry { jac, inv_jt, det }
    }

    /// Push a reference gradient to the physical cell.
    pub fn grad(&self, g_ref: [f64; 2]) -> [f64; 2] {
        [
            self.inv_jt[0][0] * g_ref[0] + self.inv_jt[0][1] * g_ref[1],
            self.inv_jt[1][0] * g_ref[0] + self.inv_jt[1][1] * g_ref[1],
        ]
    }
}

/// A global Lagrange space over a shared mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    components: usize,
    n_scalar: usize,
    dof_coords: Vec<[f64; 2]>,
    cell_dofs: Vec<Vec<usize>>,
    /// Scalar DOF sets per boundary tag. Dirichlet sets are disjoint: a DOF
    /// on two Dirichlet tags goes to the higher-precedence one (wall >
    /// cylinder > inflow > lid). The Neumann set keeps every DOF on a
    /// Neumann facet, shared corners included.
    boundary_dofs: BTreeMap<BoundaryTag, Vec<usize>>,
    /// For P2: global edge DOF index per facet (one midpoint per facet).
    facet_edge_dof: Vec<Option<usize>>,
    locator: CellLocator,
}

/// Dirichlet precedence at shared corners: lower value wins.
fn tag_precedence(tag: BoundaryTag) -> usize {
    match tag {
        BoundaryTag::DirichletWall => 0,
        BoundaryTag::DirichletCylinder => 1,
        BoundaryTag::DirichletInflow => 2,
        BoundaryTag::DirichletLid => 3,
        BoundaryTag::NeumannOutflow => usize::MAX,
    }
}

/// Build a P1 or P2 space with 1 (scalar) or 2 (vector) components.
pub fn build_space(mesh: Arc<Mesh>, degree: usize, components: usize) -> FeSpace {
    assert!(degree == 1 || degree == 2, "degree must be 1 or 2");
    assert!(
        components == 1 || components == 2,
        "components must be 1 or 2"
    );
    let n_vertices = mesh.nodes().len();
    let mut dof_coords: Vec<[f64; 2]> = mesh.nodes().to_vec();
    let mut cell_dofs: Vec<Vec<usize>> = Vec::with_capacity(mesh.cells().len());
    let mut edge_dof: HashMap<(usize, usize), usize> = HashMap::new();

    for cell in mesh.cells() {
        let mut dofs: Vec<usize> = cell.to_vec();
        if degree == 2 {
            // Local edges opposite each vertex: (1,2), (2,0), (0,1).
            for (a, b) in [(cell[1], cell[2]), (cell[2], cell[0]), (cell[0], cell[1])] {
                let key = if a < b { (a, b) } else { (b, a) };
                let next = n_vertices + edge_dof.len();
                let idx = *edge_dof.entry(key).or_insert(next);
                if idx == dof_coords.len() {
                    let pa = mesh.nodes()[a];
                    let pb = mesh.nodes()[b];
                    dof_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                }
                dofs.push(idx);
            }
        }
        cell_dofs.push(dofs);
    }
    let n_scalar = dof_coords.len();

    // Collect boundary DOFs per tag, then resolve Dirichlet corner clashes.
    let mut claimed: HashMap<usize, BoundaryTag> = HashMap::new();
    let mut neumann: Vec<usize> = Vec::new();
    let mut facet_edge_dof = Vec::with_capacity(mesh.facets().len());
    for facet in mesh.facets() {
        let [a, b] = facet.nodes;
        let mut on_facet = vec![a, b];
        if degree == 2 {
            let key = if a < b { (a, b) } else { (b, a) };
            let mid = edge_dof[&key];
            on_facet.push(mid);
            facet_edge_dof.push(Some(mid));
        } else {
            facet_edge_dof.push(None);
        }
        for dof in on_facet {
            if facet.tag == BoundaryTag::NeumannOutflow {
                neumann.push(dof);
            } else {
                let entry = claimed.entry(dof).or_insert(facet.tag);
                if tag_precedence(facet.tag) < tag_precedence(*entry) {
                    *entry = facet.tag;
                }
            }
        }
    }
    let mut boundary_dofs: BTreeMap<BoundaryTag, Vec<usize>> = BTreeMap::new();
    for (dof, tag) in claimed {
        boundary_dofs.entry(tag).or_default().push(dof);
    }
    if !neumann.is_empty() {
        neumann.sort_unstable();
        neumann.dedup();
        boundary_dofs.insert(BoundaryTag::NeumannOutflow, neumann);
    }
    for dofs in boundary_dofs.values_mut() {
        dofs.sort_unstable();
        dofs.dedup();
    }

    let locator = CellLocator::new(&mesh);
    FeSpace {
        mesh,
        degree,
        components,
        n_scalar,
        dof_coords,
        cell_dofs,
        boundary_dofs,
        facet_edge_dof,
        locator,
    }
}

impl FeSpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Scalar DOF count (independent of components).
    pub fn n_scalar_dofs(&self) -> usize {
        self.n_scalar
    }

    /// Total DOF count including components.
    pub fn n_dofs(&self) -> usize {
        self.n_scalar * self.components
    }

    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    /// Global scalar DOF indices of one cell (3 for P1, 6 for P2).
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell]
    }

    /// Scalar boundary DOF sets per tag (see the field docs for corner
    /// precedence).
    pub fn boundary_dofs(&self) -> &BTreeMap<BoundaryTag, Vec<usize>> {
        &self.boundary_dofs
    }

    /// Scalar DOFs on one facet: the two endpoints, plus the midpoint for P2.
    pub fn facet_dofs(&self, facet: usize) -> Vec<usize> {
        let [a, b] = self.mesh.facets()[facet].nodes;
        let mut dofs = vec![a, b];
        if let Some(mid) = self.facet_edge_dof[facet] {
            dofs.push(mid);
        }
        dofs
    }

    /// All scalar DOFs on Dirichlet facets (union over Dirichlet tags).
    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_dofs
            .iter()
            .filter(|(t, _)| t.is_dirichlet())
            .flat_map(|(_, d)| d.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nodal interpolation of a scalar field.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        assert_eq!(self.components, 1, "interpolate needs a scalar space");
        self.dof_coords.iter().map(|&p| f(p)).collect()
    }

    /// Nodal interpolation of a vector field (interleaved DOFs).
    pub fn interpolate_vector(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.components, 2, "interpolate_vector needs a vector space");
        let mut dofs = vec![0.0; self.n_dofs()];
        for (i, &p) in self.dof_coords.iter().enumerate() {
            let v = f(p);
            dofs[2 * i] = v[0];
            dofs[2 * i + 1] = v[1];
        }
        dofs
    }

    /// Locate the cell containing a physical point and its barycentric
    /// coordinates there, or None if the point is outside the mesh.
    pub fn locate(&self, point: [f64; 2]) -> Option<(usize, [f64; 3])> {
        self.locator.locate(&self.mesh, point)
    }

    /// Evaluate the FE function at a physical point. Returns one value per
    /// component. None if the point is outside the mesh.
    pub fn evaluate(&self, dofs: &[f64], point: [f64; 2]) -> Option<Vec<f64>> {
        let (cell, bary) = self.locate(point)?;
        Some(self.evaluate_in_cell(dofs, cell, bary).0)
    }

    /// Evaluate value and physical gradient at a point. The gradient is one
    /// [d/dx, d/dy] pair per component.
    pub fn evaluate_with_gradient(
        &self,
        dofs: &[f64],
        point: [f64; 2],
    ) -> Option<(Vec<f64>, Vec<[f64; 2]>)> {
        let (cell, bary) = self.locate(point)?;
        Some(self.evaluate_in_cell(dofs, cell, bary))
    }

    /// Evaluate in a known cell at known barycentric coordinates.
    pub fn evaluate_in_cell(
        &self,
        dofs: &[f64],
        cell: usize,
        bary: [f64; 3],
    ) -> (Vec<f64>, Vec<[f64; 2]>) {
        assert_eq!(dofs.len(), self.n_dofs());
        let (values, grads_ref) = reference_basis(self.degree, bary);
        let geo = CellGeometry::new(&self.mesh, cell);
        let mut out = vec![0.0; self.components];
        let mut grad = vec![[0.0; 2]; self.components];
        for (k, &gdof) in self.cell_dofs[cell].iter().enumerate() {
            let g = geo.grad(grads_ref[k]);
            for c in 0..self.components {
                let coeff = dofs[self.components * gdof + c];
                out[c] += coeff * values[k];
                grad[c][0] += coeff * g[0];
                grad[c][1] += coeff * g[1];
            }
        }
        (out, grad)
    }
}

/// Uniform-grid spatial index over cell bounding boxes for fast point
/// location.
#[derive(Debug, Clone)]
struct CellLocator {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<usize>>,
}

impl CellLocator {
    fn new(mesh: &Mesh) -> Self {
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in mesh.nodes() {
            x0 = x0.min(p[0]);
            y0 = y0.min(p[1]);
            x1 = x1.max(p[0]);
            y1 = y1.max(p[1]);
        }
        let n_cells = mesh.cells().len();
        let target = (n_cells as f64).sqrt().ceil() as usize;
        let aspect = ((x1 - x0) / (y1 - y0).max(1e-300)).sqrt();
        let nx = ((target as f64 * aspect).ceil() as usize).max(1);
        let ny = ((target as f64 / aspect).ceil() as usize).max(1);
        let dx = ((x1 - x0) / nx as f64).max(1e-300);
        let dy = ((y1 - y0) / ny as f64).max(1e-300);
        let mut bins = vec![Vec::new(); nx * ny];
        for (ci, cell) in mesh.cells().iter().enumerate() {
            let xs = cell.map(|v| mesh.nodes()[v][0]);
            let ys = cell.map(|v| mesh.nodes()[v][1]);
            let bx0 = (((xs.iter().cloned().fold(f64::INFINITY, f64::min) - x0) / dx) as usize)
                .min(nx - 1);
            let bx1 = (((xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x0) / dx)
                as usize)
                .min(nx - 1);
            let by0 = (((ys.iter().cloned().fold(f64::INFINITY, f64::min) - y0) / dy) as usize)
                .min(ny - 1);
            let by1 = (((ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y0) / dy)
                as usize)
                .min(ny - 1);
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    bins[by * nx + bx].push(ci);
                }
            }
        }
        CellLocator {
            x0,
            y0,
            dx,
            dy,
            nx,
            ny,
            bins,
        }
    }

    fn locate(&self, mesh: &Mesh, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let bx = (((p[0] - self.x0) / self.dx) as isize).clamp(0, self.nx as isize - 1) as usize;
        let by = (((p[1] - self.y0) / self.dy) as isize).clamp(0, self.ny as isize - 1) as usize;
        for &ci in &self.bins[by * self.nx + bx] {
            if let Some(bary) = barycentric_in(mesh, ci, p, 1e-12) {
                return Some((ci, bary));
            }
        }
        // Roundoff near bin borders or points on shared edges can miss the
        // binned candidates; fall back to a tolerant global scan.
        for ci in 0..mesh.cells().len() {
            if let Some(bary) = barycentric_in(mesh, ci, p, 1e-9) {
                return Some((ci, bary));
            }
        }
        None
    }
}

/// Barycentric coordinates of `p` with respect to cell `ci`, without any
/// inside check; the caller knows the point lies on this cell (e.g. on one
/// of its boundary facets).
pub fn barycentric(mesh: &Mesh, ci: usize, p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = mesh.cells()[ci];
    let pa = mesh.nodes()[a];
    let pb = mesh.nodes()[b];
    let pc = mesh.nodes()[c];
    let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    let l1 = ((p[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (p[1] - pa[1])) / det;
    let l2 = ((pb[0] - pa[0]) * (p[1] - pa[1]) - (p[0] - pa[0]) * (pb[1] - pa[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Barycentric coordinates of `p` in cell `ci` if inside (with tolerance).
fn barycentric_in(mesh: &Mesh, ci: usize, p: [f64; 2], tol: f64) -> Option<[f64; 3]> {
    let [a, b, c] = mesh.cells()[ci];
    let pa = mesh.nodes()[a];
    let pb = mesh.nodes()[b];
    let pc = mesh.nodes()[c];
    let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    let l1 = ((p[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (p[1] - pa[1])) / det;
    let l2 = ((pb[0] - pa[0]) * (p[1] - pa[1]) - (p[0] - pa[0]) * (pb[1] - pa[1])) / det;
    let l0 = 1.0 - l1 - l2;
    if l0 >= -tol && l1 >= -tol && l2 >= -tol {
        Some([l0, l1, l2])
    } else {
        None
    }
}
