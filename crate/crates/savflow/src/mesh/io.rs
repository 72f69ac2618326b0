//! Mesh file input: the native ASCII format and a Gmsh MSH 2.2 subset.

use super::{BoundaryTag, Mesh};
use crate::error::MeshError;
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

/// Supported mesh file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// Plain ASCII sections `NODES`, `CELLS`, `FACETS` with 0-based indices;
    /// facet lines are `a b tagname`.
    Native,
    /// Gmsh MSH 2.2 ASCII with element types 1 (line) and 2 (triangle).
    GmshMsh2Ascii,
}

/// Read and validate a mesh file.
///
/// Gmsh physical groups are mapped by their `$PhysicalNames` entry when
/// present (the names `wall`, `lid`, `inflow`, `outflow`, `cylinder`),
/// otherwise by the default numeric map 1..=5 in the same order. Use
/// [`read_gmsh_with_map`] to supply a custom numeric map.
pub fn read_mesh(path: &Path, format: MeshFormat) -> Result<Mesh, MeshError> {
    match format {
        MeshFormat::Native => read_native(path),
        MeshFormat::GmshMsh2Ascii => read_gmsh(path, None),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> MeshError {
    MeshError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

pub(super) fn write_native(mesh: &Mesh, path: &Path) -> Result<(), MeshError> {
    let mut out = String::new();
    out.push_str(&format!("NODES {}\n", mesh.nodes().len()));
    for p in mesh.nodes() {
        // `{}` on f64 prints the shortest representation that round-trips.
        out.push_str(&format!("{} {}\n", p[0], p[1]));
    }
    out.push_str(&format!("CELLS {}\n", mesh.cells().len()));
    for c in mesh.cells() {
        out.push_str(&format!("{} {} {}\n", c[0], c[1], c[2]));
    }
    out.push_str(&format!("FACETS {}\n", mesh.facets().len()));
    for f in mesh.facets() {
        out.push_str(&format!("{} {} {}\n", f.nodes[0], f.nodes[1], f.tag));
    }
    let mut file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

fn section_count(
    lines: &[(usize, Vec<&str>)],
    pos: usize,
    name: &str,
    path: &Path,
) -> Result<usize, MeshError> {
    match lines.get(pos) {
        Some((ln, toks)) if toks.len() == 2 && toks[0] == name => toks[1]
            .parse()
            .map_err(|_| parse_err(path, *ln, format!("bad {name} count `{}`", toks[1]))),
        Some((ln, toks)) => Err(parse_err(
            path,
            *ln,
            format!("expected `{name} <count>`, found `{}`", toks.join(" ")),
        )),
        None => Err(parse_err(path, 0, format!("missing {name} section"))),
    }
}

fn read_native(path: &Path) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    // (line number, tokens) for non-empty lines, consumed through a cursor.
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty())
        .collect();
    let mut pos = 0usize;

    let n_nodes = section_count(&lines, pos, "NODES", path)?;
    pos += 1;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, toks) = lines
            .get(pos)
            .ok_or_else(|| parse_err(path, 0, "unexpected end of file in NODES"))?;
        pos += 1;
        if toks.len() != 2 {
            return Err(parse_err(path, *ln, "node line must be `x y`"));
        }
        let x: f64 = toks[0]
            .parse()
            .map_err(|_| parse_err(path, *ln, format!("bad coordinate `{}`", toks[0])))?;
        let y: f64 = toks[1]
            .parse()
            .map_err(|_| parse_err(path, *ln, format!("bad coordinate `{}`", toks[1])))?;
        nodes.push([x, y]);
    }

    let n_cells = section_count(&lines, pos, "CELLS", path)?;
    pos += 1;
    let mut cells = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let (ln, toks) = lines
            .get(pos)
            .ok_or_else(|| parse_err(path, 0, "unexpected end of file in CELLS"))?;
        pos += 1;
        if toks.len() != 3 {
            return Err(parse_err(path, *ln, "cell line must be `a b c`"));
        }
        let mut cell = [0usize; 3];
        for (k, t) in toks.iter().enumerate() {
            cell[k] = t
                .parse()
                .map_err(|_| parse_err(path, *ln, format!("bad node index `{t}`")))?;
        }
        cells.push(cell);
    }

    let n_facets = section_count(&lines, pos, "FACETS", path)?;
    pos += 1;
    let mut facets = Vec::with_capacity(n_facets);
    for _ in 0..n_facets {
        let (ln, toks) = lines
            .get(pos)
            .ok_or_else(|| parse_err(path, 0, "unexpected end of file in FACETS"))?;
        pos += 1;
        if toks.len() != 3 {
            return Err(parse_err(path, *ln, "facet line must be `a b tag`"));
        }
        let a: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(path, *ln, format!("bad node index `{}`", toks[0])))?;
        let b: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(path, *ln, format!("bad node index `{}`", toks[1])))?;
        let tag = BoundaryTag::from_name(toks[2])
            .ok_or_else(|| parse_err(path, *ln, format!("unknown boundary tag `{}`", toks[2])))?;
        facets.push(([a, b], tag));
    }

    if let Some((ln, toks)) = lines.get(pos) {
        return Err(parse_err(
            path,
            *ln,
            format!("trailing content `{}`", toks.join(" ")),
        ));
    }

    Mesh::from_parts(nodes, cells, facets)
}

/// Default Gmsh physical-tag map: 1 wall, 2 lid, 3 inflow, 4 outflow,
/// 5 cylinder.
pub fn default_gmsh_tag_map() -> HashMap<i64, BoundaryTag> {
    BoundaryTag::ALL
        .iter()
        .enumerate()
        .map(|(i, &t)| (i as i64 + 1, t))
        .collect()
}

/// Read a Gmsh MSH 2.2 ASCII file with an explicit physical-tag map.
pub fn read_gmsh_with_map(path: &Path, map: &HashMap<i64, BoundaryTag>) -> Result<Mesh, MeshError> {
    read_gmsh(path, Some(map))
}

fn read_gmsh(path: &Path, map: Option<&HashMap<i64, BoundaryTag>>) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .collect();

    let mut raw_nodes: Vec<(i64, [f64; 2])> = Vec::new();
    let mut raw_cells: Vec<[i64; 3]> = Vec::new();
    let mut raw_facets: Vec<([i64; 2], i64)> = Vec::new();
    // Physical names of dimension 1, used for tag mapping when present.
    let mut named_tags: HashMap<i64, BoundaryTag> = HashMap::new();
    let mut has_names = false;

    let mut i = 0;
    while i < lines.len() {
        let (ln, line) = lines[i];
        match line {
            "$MeshFormat" => {
                let (vln, version) = lines
                    .get(i + 1)
                    .ok_or_else(|| parse_err(path, ln, "truncated $MeshFormat"))?;
                let mut toks = version.split_whitespace();
                let ver = toks.next().unwrap_or("");
                if !ver.starts_with("2.2") {
                    return Err(parse_err(
                        path,
                        *vln,
                        format!("unsupported MSH version `{ver}` (need 2.2 ASCII)"),
                    ));
                }
                if toks.next() != Some("0") {
                    return Err(parse_err(path, *vln, "binary MSH files are not supported"));
                }
                i = skip_to_end(&lines, i, "$EndMeshFormat", path)?;
            }
            "$PhysicalNames" => {
                has_names = true;
                let (cln, count_line) = lines
                    .get(i + 1)
                    .ok_or_else(|| parse_err(path, ln, "truncated $PhysicalNames"))?;
                let count: usize = count_line
                    .parse()
                    .map_err(|_| parse_err(path, *cln, "bad physical-name count"))?;
                for k in 0..count {
                    let (nln, l) = lines
                        .get(i + 2 + k)
                        .ok_or_else(|| parse_err(path, ln, "truncated $PhysicalNames"))?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if toks.len() < 3 {
                        return Err(parse_err(path, *nln, "physical name needs `dim id \"name\"`"));
                    }
                    let dim: i64 = toks[0]
                        .parse()
                        .map_err(|_| parse_err(path, *nln, "bad dimension"))?;
                    let id: i64 = toks[1]
                        .parse()
                        .map_err(|_| parse_err(path, *nln, "bad physical id"))?;
                    let name = toks[2..].join(" ");
                    let name = name.trim_matches('"');
                    if dim == 1 {
                        let tag = BoundaryTag::from_name(name).ok_or_else(|| {
                            parse_err(
                                path,
                                *nln,
                                format!(
                                    "physical group `{name}` is not one of wall/lid/inflow/outflow/cylinder"
                                ),
                            )
                        })?;
                        named_tags.insert(id, tag);
                    }
                }
                i = skip_to_end(&lines, i, "$EndPhysicalNames", path)?;
            }
            "$Nodes" => {
                let (cln, count_line) = lines
                    .get(i + 1)
                    .ok_or_else(|| parse_err(path, ln, "truncated $Nodes"))?;
                let count: usize = count_line
                    .parse()
                    .map_err(|_| parse_err(path, *cln, "bad node count"))?;
                for k in 0..count {
                    let (nln, l) = lines
                        .get(i + 2 + k)
                        .ok_or_else(|| parse_err(path, ln, "truncated $Nodes"))?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if toks.len() != 4 {
                        return Err(parse_err(path, *nln, "node line must be `id x y z`"));
                    }
                    let id: i64 = toks[0]
                        .parse()
                        .map_err(|_| parse_err(path, *nln, "bad node id"))?;
                    let x: f64 = toks[1]
                        .parse()
                        .map_err(|_| parse_err(path, *nln, "bad x coordinate"))?;
                    let y: f64 = toks[2]
                        .parse()
                        .map_err(|_| parse_err(path, *nln, "bad y coordinate"))?;
                    raw_nodes.push((id, [x, y]));
                }
                i = skip_to_end(&lines, i, "$EndNodes", path)?;
            }
            "$Elements" => {
                let (cln, count_line) = lines
                    .get(i + 1)
                    .ok_or_else(|| parse_err(path, ln, "truncated $Elements"))?;
                let count: usize = count_line
                    .parse()
                    .map_err(|_| parse_err(path, *cln, "bad element count"))?;
                for k in 0..count {
                    let (eln, l) = lines
                        .get(i + 2 + k)
                        .ok_or_else(|| parse_err(path, ln, "truncated $Elements"))?;
                    let toks: Result<Vec<i64>, _> =
                        l.split_whitespace().map(str::parse).collect();
                    let toks =
                        toks.map_err(|_| parse_err(path, *eln, "bad element line"))?;
                    if toks.len() < 3 {
                        return Err(parse_err(path, *eln, "bad element line"));
                    }
                    let etype = toks[1];
                    let ntags = toks[2] as usize;
                    let nodes = &toks[3 + ntags..];
                    let phys = if ntags > 0 { toks[3] } else { 0 };
                    match etype {
                        1 => {
                            if nodes.len() != 2 {
                                return Err(parse_err(path, *eln, "line element needs 2 nodes"));
                            }
                            raw_facets.push(([nodes[0], nodes[1]], phys));
                        }
                        2 => {
                            if nodes.len() != 3 {
                                return Err(parse_err(path, *eln, "triangle needs 3 nodes"));
                            }
                            raw_cells.push([nodes[0], nodes[1], nodes[2]]);
                        }
                        15 => {} // point elements carry no mesh information here
                        other => {
                            return Err(parse_err(
                                path,
                                *eln,
                                format!("unsupported element type {other} (only 1, 2, 15)"),
                            ));
                        }
                    }
                }
                i = skip_to_end(&lines, i, "$EndElements", path)?;
            }
            l if l.starts_with('$') && !l.starts_with("$End") => {
                // Unknown section: skip to its end marker.
                let end = format!("$End{}", &l[1..]);
                i = skip_to_end(&lines, i, &end, path)?;
            }
            "" => i += 1,
            _ => {
                return Err(parse_err(path, ln, format!("unexpected content `{line}`")));
            }
        }
        i += 1;
    }

    if raw_cells.is_empty() {
        return Err(parse_err(path, 0, "no triangles in file"));
    }

    // Compact to 0-based indices, dropping nodes no triangle references.
    let default_map;
    let tag_map: &HashMap<i64, BoundaryTag> = match map {
        Some(m) => m,
        None if has_names => &named_tags,
        None => {
            default_map = default_gmsh_tag_map();
            &default_map
        }
    };
    let coord_of: HashMap<i64, [f64; 2]> = raw_nodes.iter().cloned().collect();
    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut cells = Vec::with_capacity(raw_cells.len());
    for (ci, raw) in raw_cells.iter().enumerate() {
        let mut cell = [0usize; 3];
        for (k, id) in raw.iter().enumerate() {
            let next = nodes.len();
            let idx = *index.entry(*id).or_insert_with(|| {
                nodes.push(coord_of.get(id).copied().unwrap_or([f64::NAN, f64::NAN]));
                next
            });
            if nodes[idx][0].is_nan() {
                return Err(parse_err(
                    path,
                    0,
                    format!("triangle {ci} references unknown node id {id}"),
                ));
            }
            cell[k] = idx;
        }
        cells.push(cell);
    }
    let mut facets = Vec::with_capacity(raw_facets.len());
    for ([a, b], phys) in raw_facets {
        let tag = *tag_map.get(&phys).ok_or_else(|| {
            parse_err(
                path,
                0,
                format!("boundary line has unmapped physical group {phys}"),
            )
        })?;
        let (ia, ib) = match (index.get(&a), index.get(&b)) {
            (Some(&ia), Some(&ib)) => (ia, ib),
            _ => {
                return Err(parse_err(
                    path,
                    0,
                    format!("boundary line ({a}, {b}) references nodes outside the triangulation"),
                ))
            }
        };
        facets.push(([ia, ib], tag));
    }

    Mesh::from_parts(nodes, cells, facets)
}

fn skip_to_end(
    lines: &[(usize, &str)],
    start: usize,
    end_marker: &str,
    path: &Path,
) -> Result<usize, MeshError> {
    for (k, (_, l)) in lines.iter().enumerate().skip(start + 1) {
        if *l == end_marker {
            return Ok(k);
        }
    }
    Err(parse_err(
        path,
        lines[start].0,
        format!("missing {end_marker}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_turek_channel, generate_unit_square, DiagonalPattern};

    #[test]
    fn native_round_trip_minimal_square() {
        let mesh = generate_unit_square(1, 1, DiagonalPattern::Right);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("square.mesh");
        mesh.write_native(&path).unwrap();
        let back = read_mesh(&path, MeshFormat::Native).unwrap();
        assert_eq!(back.nodes(), mesh.nodes());
        assert_eq!(back.cells(), mesh.cells());
        assert_eq!(back.facets().len(), mesh.facets().len());
        for (f, g) in back.facets().iter().zip(mesh.facets()) {
            assert_eq!(f.nodes, g.nodes);
            assert_eq!(f.tag, g.tag);
            assert_eq!(f.cell, g.cell);
        }
    }

    #[test]
    fn native_round_trip_turek_coordinates() {
        let mesh = generate_turek_channel(0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("turek.mesh");
        mesh.write_native(&path).unwrap();
        let back = read_mesh(&path, MeshFormat::Native).unwrap();
        assert_eq!(back.nodes().len(), mesh.nodes().len());
        for (p, q) in back.nodes().iter().zip(mesh.nodes()) {
            assert!((p[0] - q[0]).abs() < 1e-12);
            assert!((p[1] - q[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn native_parse_error_has_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mesh");
        std::fs::write(&path, "NODES 1\n0 zero\n").unwrap();
        let err = read_mesh(&path, MeshFormat::Native).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn gmsh_square_with_physical_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("square.msh");
        std::fs::write(
            &path,
            "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
             $PhysicalNames\n2\n1 7 \"wall\"\n1 8 \"lid\"\n$EndPhysicalNames\n\
             $Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 1 1 0\n$EndNodes\n\
             $Elements\n6\n\
             1 1 2 7 1 1 2\n\
             2 1 2 7 1 2 4\n\
             3 1 2 8 1 4 3\n\
             4 1 2 7 1 3 1\n\
             5 2 2 10 1 1 2 4\n\
             6 2 2 10 1 1 4 3\n\
             $EndElements\n",
        )
        .unwrap();
        let mesh = read_mesh(&path, MeshFormat::GmshMsh2Ascii).unwrap();
        assert_eq!(mesh.nodes().len(), 4);
        assert_eq!(mesh.cells().len(), 2);
        assert!(mesh.has_tag(BoundaryTag::DirichletLid));
        assert!(mesh.has_tag(BoundaryTag::DirichletWall));
        assert!((mesh.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gmsh_unmapped_physical_group_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("square.msh");
        std::fs::write(
            &path,
            "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
             $Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 1 1 0\n$EndNodes\n\
             $Elements\n6\n\
             1 1 2 99 1 1 2\n\
             2 1 2 1 1 2 4\n\
             3 1 2 1 1 4 3\n\
             4 1 2 1 1 3 1\n\
             5 2 2 10 1 1 2 4\n\
             6 2 2 10 1 1 4 3\n\
             $EndElements\n",
        )
        .unwrap();
        let err = read_mesh(&path, MeshFormat::GmshMsh2Ascii).unwrap_err();
        assert!(err.to_string().contains("99"), "{err}");
    }

    #[test]
    fn gmsh_clockwise_triangle_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cw.msh");
        std::fs::write(
            &path,
            "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
             $Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n\
             $Elements\n4\n\
             1 2 2 1 1 1 3 2\n\
             2 1 2 1 1 1 2\n\
             3 1 2 1 1 2 3\n\
             4 1 2 1 1 3 1\n\
             $EndElements\n",
        )
        .unwrap();
        let mesh = read_mesh(&path, MeshFormat::GmshMsh2Ascii).unwrap();
        assert_eq!(mesh.repaired_cells(), &[0]);
        assert!(mesh.cell_area(0) > 0.0);
    }
}
