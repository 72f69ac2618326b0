//! Structured mesh generators for the benchmark geometries.

use super::{BoundaryTag, Mesh};
use std::collections::HashMap;

/// How to split the quads of a structured grid into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalPattern {
    /// One diagonal per quad, all pointing the same way (two triangles).
    Right,
    /// A center node per quad (four triangles).
    Crisscross,
}

impl DiagonalPattern {
    pub fn name(self) -> &'static str {
        match self {
            DiagonalPattern::Right => "right",
            DiagonalPattern::Crisscross => "crisscross",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "right" => Some(DiagonalPattern::Right),
            "crisscross" => Some(DiagonalPattern::Crisscross),
            _ => None,
        }
    }
}

/// Structured triangulation of the unit square (0,1)².
///
/// All four sides are tagged [`BoundaryTag::DirichletWall`]; callers retag
/// sides as needed (the cavity retags y=1 to the lid).
pub fn generate_unit_square(nx: usize, ny: usize, pattern: DiagonalPattern) -> Mesh {
    assert!(nx >= 1 && ny >= 1);
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes: Vec<[f64; 2]> = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([i as f64 / nx as f64, j as f64 / ny as f64]);
        }
    }
    let mut cells = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v01 = vid(i, j + 1);
            let v11 = vid(i + 1, j + 1);
            match pattern {
                DiagonalPattern::Right => {
                    cells.push([v00, v10, v11]);
                    cells.push([v00, v11, v01]);
                }
                DiagonalPattern::Crisscross => {
                    let c = nodes.len();
                    nodes.push([
                        (i as f64 + 0.5) / nx as f64,
                        (j as f64 + 0.5) / ny as f64,
                    ]);
                    cells.push([v00, v10, c]);
                    cells.push([v10, v11, c]);
                    cells.push([v11, v01, c]);
                    cells.push([v01, v00, c]);
                }
            }
        }
    }
    let mut facets = Vec::new();
    for i in 0..nx {
        facets.push(([vid(i, 0), vid(i + 1, 0)], BoundaryTag::DirichletWall));
        facets.push(([vid(i, ny), vid(i + 1, ny)], BoundaryTag::DirichletWall));
    }
    for j in 0..ny {
        facets.push(([vid(0, j), vid(0, j + 1)], BoundaryTag::DirichletWall));
        facets.push(([vid(nx, j), vid(nx, j + 1)], BoundaryTag::DirichletWall));
    }
    Mesh::from_parts(nodes, cells, facets).expect("generated square mesh must validate")
}

const CHANNEL_LENGTH: f64 = 2.2;
const CHANNEL_HEIGHT: f64 = 0.41;
const CYL_CENTER: [f64; 2] = [0.2, 0.2];
const CYL_RADIUS: f64 = 0.05;
/// Half-width of the square frame around the cylinder that carries the
/// body-fitted O-grid.
const FRAME_HALF: f64 = 0.1;
/// Exponent of the O-grid's radial layer distribution; above 1 thins the
/// layers next to the cylinder.
const RADIAL_CLUSTERING: f64 = 1.7;

/// Deduplicating node store keyed on quantized coordinates, so the O-grid
/// and the background grid stitch together without tolerance games.
struct NodePool {
    nodes: Vec<[f64; 2]>,
    index: HashMap<(i64, i64), usize>,
}

impl NodePool {
    fn new() -> Self {
        NodePool {
            nodes: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn insert(&mut self, p: [f64; 2]) -> usize {
        let key = (
            (p[0] * 1e10).round() as i64,
            (p[1] * 1e10).round() as i64,
        );
        *self.index.entry(key).or_insert_with(|| {
            self.nodes.push(p);
            self.nodes.len() - 1
        })
    }
}

/// Points along the frame square's perimeter, counterclockwise starting at
/// the bottom-left corner, `q` segments per side (4q points total).
fn frame_perimeter(q: usize) -> Vec<[f64; 2]> {
    let lo = [CYL_CENTER[0] - FRAME_HALF, CYL_CENTER[1] - FRAME_HALF];
    let hi = [CYL_CENTER[0] + FRAME_HALF, CYL_CENTER[1] + FRAME_HALF];
    let step = 2.0 * FRAME_HALF / q as f64;
    let mut pts = Vec::with_capacity(4 * q);
    for k in 0..q {
        pts.push([lo[0] + k as f64 * step, lo[1]]);
    }
    for k in 0..q {
        pts.push([hi[0], lo[1] + k as f64 * step]);
    }
    for k in 0..q {
        pts.push([hi[0] - k as f64 * step, hi[1]]);
    }
    for k in 0..q {
        pts.push([lo[0], hi[1] - k as f64 * step]);
    }
    pts
}

/// Grid lines covering [0, len] that contain the breakpoints `lo` and `hi`
/// exactly, with `q` uniform segments between them and a spacing close to
/// (hi-lo)/q outside.
fn graded_breaks(len: f64, lo: f64, hi: f64, q: usize) -> Vec<f64> {
    let target = (hi - lo) / q as f64;
    let mut breaks = Vec::new();
    let n_left = (lo / target).round().max(1.0) as usize;
    for k in 0..n_left {
        breaks.push(lo * k as f64 / n_left as f64);
    }
    for k in 0..q {
        breaks.push(lo + (hi - lo) * k as f64 / q as f64);
    }
    let n_right = ((len - hi) / target).round().max(1.0) as usize;
    for k in 0..=n_right {
        breaks.push(hi + (len - hi) * k as f64 / n_right as f64);
    }
    breaks
}

/// Body-fitted mesh of the cylinder-in-channel benchmark geometry:
/// channel [0,2.2]×[0,0.41] with a circular hole of radius 0.05 centered
/// at (0.2,0.2).
///
/// The circle is surrounded by an O-grid annulus blended onto a square
/// frame; the rest of the channel is a graded rectilinear grid that shares
/// the frame's boundary nodes. Circle nodes lie exactly on the circle, so
/// the meshed hole is the inscribed polygon through them. `refinement_level`
/// doubles the resolution per increment; level 2 lands near 12k cells.
pub fn generate_turek_channel(refinement_level: usize) -> Mesh {
    let q = 4usize << refinement_level;
    let layers = (q / 2).max(2);
    let mut pool = NodePool::new();
    let mut cells: Vec<[usize; 3]> = Vec::new();

    // O-grid annulus: blend each frame-perimeter point toward the circle
    // along the ray from the cylinder center. Radial layers are clustered
    // toward the cylinder so the boundary layer (thickness ≈ D/√Re ≈ 0.01
    // at the benchmark's peak Reynolds number) gets several cells; the
    // outermost layer stays comparable to the frame spacing.
    let frame = frame_perimeter(q);
    let m = frame.len();
    let ring_node = |pool: &mut NodePool, j: usize, l: usize| -> usize {
        let s = frame[j % m];
        let theta = (s[1] - CYL_CENTER[1]).atan2(s[0] - CYL_CENTER[0]);
        let on_circle = [
            CYL_CENTER[0] + CYL_RADIUS * theta.cos(),
            CYL_CENTER[1] + CYL_RADIUS * theta.sin(),
        ];
        let t = (l as f64 / layers as f64).powf(RADIAL_CLUSTERING);
        pool.insert([
            on_circle[0] + t * (s[0] - on_circle[0]),
            on_circle[1] + t * (s[1] - on_circle[1]),
        ])
    };
    let mut cylinder_edges: Vec<[usize; 2]> = Vec::new();
    for j in 0..m {
        for l in 0..layers {
            let a = ring_node(&mut pool, j, l);
            let b = ring_node(&mut pool, j + 1, l);
            let c = ring_node(&mut pool, j + 1, l + 1);
            let d = ring_node(&mut pool, j, l + 1);
            cells.push([a, b, c]);
            cells.push([a, c, d]);
            if l == 0 {
                cylinder_edges.push([a, b]);
            }
        }
    }

    // Graded rectilinear background outside the frame.
    let xs = graded_breaks(
        CHANNEL_LENGTH,
        CYL_CENTER[0] - FRAME_HALF,
        CYL_CENTER[0] + FRAME_HALF,
        q,
    );
    let ys = graded_breaks(
        CHANNEL_HEIGHT,
        CYL_CENTER[1] - FRAME_HALF,
        CYL_CENTER[1] + FRAME_HALF,
        q,
    );
    let inside_frame = |x: f64, y: f64| {
        (x - CYL_CENTER[0]).abs() < FRAME_HALF - 1e-12
            && (y - CYL_CENTER[1]).abs() < FRAME_HALF - 1e-12
    };
    for jy in 0..ys.len() - 1 {
        for jx in 0..xs.len() - 1 {
            let cx = 0.5 * (xs[jx] + xs[jx + 1]);
            let cy = 0.5 * (ys[jy] + ys[jy + 1]);
            if inside_frame(cx, cy) {
                continue;
            }
            let v00 = pool.insert([xs[jx], ys[jy]]);
            let v10 = pool.insert([xs[jx + 1], ys[jy]]);
            let v01 = pool.insert([xs[jx], ys[jy + 1]]);
            let v11 = pool.insert([xs[jx + 1], ys[jy + 1]]);
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }

    // Tag boundary edges geometrically; cylinder edges are known from the
    // annulus construction.
    let nodes = pool.nodes;
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for cell in &cells {
        for e in 0..3 {
            let k = super::edge_key(cell[e], cell[(e + 1) % 3]);
            *edge_count.entry(k).or_insert(0) += 1;
        }
    }
    let cylinder_keys: std::collections::HashSet<(usize, usize)> = cylinder_edges
        .iter()
        .map(|&[a, b]| super::edge_key(a, b))
        .collect();
    let mut facets = Vec::new();
    for (&(a, b), &count) in &edge_count {
        if count != 1 {
            continue;
        }
        let tag = if cylinder_keys.contains(&(a, b)) {
            BoundaryTag::DirichletCylinder
        } else {
            let mid = [
                0.5 * (nodes[a][0] + nodes[b][0]),
                0.5 * (nodes[a][1] + nodes[b][1]),
            ];
            if mid[0].abs() < 1e-9 {
                BoundaryTag::DirichletInflow
            } else if (mid[0] - CHANNEL_LENGTH).abs() < 1e-9 {
                BoundaryTag::NeumannOutflow
            } else if mid[1].abs() < 1e-9 || (mid[1] - CHANNEL_HEIGHT).abs() < 1e-9 {
                BoundaryTag::DirichletWall
            } else {
                panic!(
                    "generated boundary edge ({a}, {b}) at {mid:?} matches no boundary"
                );
            }
        };
        facets.push(([a, b], tag));
    }
    // Deterministic facet order regardless of hash-map iteration.
    facets.sort_by_key(|&([a, b], _)| (a, b));

    Mesh::from_parts(nodes, cells, facets).expect("generated channel mesh must validate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_square_minimal_counts() {
        let mesh = generate_unit_square(1, 1, DiagonalPattern::Right);
        assert_eq!(mesh.cells().len(), 2);
        assert_eq!(mesh.nodes().len(), 4);
        assert_eq!(mesh.facets().len(), 4);
    }

    #[test]
    fn unit_square_two_by_two() {
        let mesh = generate_unit_square(2, 2, DiagonalPattern::Right);
        assert_eq!(mesh.cells().len(), 8);
        assert_eq!(mesh.nodes().len(), 9);
        assert!((mesh.h() - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        assert!((mesh.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unit_square_crisscross_counts() {
        let mesh = generate_unit_square(2, 2, DiagonalPattern::Crisscross);
        assert_eq!(mesh.nodes().len(), 13);
        assert_eq!(mesh.cells().len(), 16);
        assert!((mesh.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_square_quasi_uniformity_is_one() {
        let mesh = generate_unit_square(64, 64, DiagonalPattern::Right);
        assert!((mesh.quasi_uniformity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn turek_mesh_has_all_tags_and_correct_area() {
        let mesh = generate_turek_channel(0);
        for tag in [
            BoundaryTag::DirichletWall,
            BoundaryTag::DirichletInflow,
            BoundaryTag::NeumannOutflow,
            BoundaryTag::DirichletCylinder,
        ] {
            assert!(mesh.has_tag(tag), "missing {tag}");
        }
        // The hole is the polygon inscribed in the circle through the
        // cylinder nodes (irregular: the nodes follow the frame square's
        // perimeter spacing), so the meshed area is exactly the channel
        // minus that polygon, and within the polygon defect of the truth.
        let polygon_area = 0.5
            * mesh
                .facets()
                .iter()
                .filter(|f| f.tag == BoundaryTag::DirichletCylinder)
                .map(|f| {
                    let a = mesh.nodes()[f.nodes[0]];
                    let b = mesh.nodes()[f.nodes[1]];
                    a[0] * b[1] - b[0] * a[1]
                })
                .sum::<f64>()
                .abs();
        let exact = CHANNEL_LENGTH * CHANNEL_HEIGHT - PI * CYL_RADIUS * CYL_RADIUS;
        let meshed = CHANNEL_LENGTH * CHANNEL_HEIGHT - polygon_area;
        assert!((mesh.total_area() - meshed).abs() < 1e-10);
        let defect = PI * CYL_RADIUS * CYL_RADIUS - polygon_area;
        assert!(defect > 0.0);
        assert!((mesh.total_area() - exact).abs() <= defect + 1e-12);

        let refined = generate_turek_channel(1);
        assert!((refined.total_area() - exact).abs() < (mesh.total_area() - exact).abs());
    }

    #[test]
    fn turek_cylinder_nodes_on_circle() {
        let mesh = generate_turek_channel(0);
        for f in mesh.facets() {
            if f.tag == BoundaryTag::DirichletCylinder {
                for &v in &f.nodes {
                    let p = mesh.nodes()[v];
                    let r = ((p[0] - CYL_CENTER[0]).powi(2) + (p[1] - CYL_CENTER[1]).powi(2))
                        .sqrt();
                    assert!((r - CYL_RADIUS).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn turek_level_two_is_benchmark_scale() {
        let mesh = generate_turek_channel(2);
        let n = mesh.cells().len();
        assert!(
            (8_000..=16_000).contains(&n),
            "expected 8k-16k cells, got {n}"
        );
        let quality = mesh.quasi_uniformity();
        assert!(quality < 20.0, "quasi-uniformity {quality}");
    }
}
