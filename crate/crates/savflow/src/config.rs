//! Run configuration: a flat ASCII `key = value` format with `[section]`
//! headers, no nesting. Each benchmark case carries its reference
//! parameter defaults; explicit keys override them. Unknown keys are
//! rejected with their line number so typos cannot silently fall back to
//! defaults.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{ConfigError, MeshError};
use crate::mesh::{
    generate_turek_channel, generate_unit_square, read_gmsh_with_map, read_mesh, BoundaryTag,
    DiagonalPattern, Mesh, MeshFormat,
};
use crate::stepper::{ElementPair, SchemeParams};

/// Benchmark case selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    TaylorGreen,
    LidCavity,
    TurekCylinder,
}

impl CaseId {
    pub fn name(self) -> &'static str {
        match self {
            CaseId::TaylorGreen => "taylor_green",
            CaseId::LidCavity => "lid_cavity",
            CaseId::TurekCylinder => "turek_cylinder",
        }
    }

    pub fn from_name(s: &str) -> Option<CaseId> {
        match s {
            "taylor_green" => Some(CaseId::TaylorGreen),
            "lid_cavity" => Some(CaseId::LidCavity),
            "turek_cylinder" => Some(CaseId::TurekCylinder),
            _ => None,
        }
    }
}

/// Where the mesh comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSpec {
    /// Structured unit square, `n` subdivisions per side.
    Square { n: usize },
    /// Body-fitted cylinder channel at the given refinement level.
    Channel { level: usize },
    /// Mesh file on disk.
    File { path: PathBuf, format: MeshFormat },
}

/// One fully resolved run: case, mesh, discretization, scheme parameters
/// and output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseId,
    pub pair: ElementPair,
    pub mesh: MeshSpec,
    pub nu: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub tau: f64,
    pub t_end: f64,
    /// Largest time step of a convergence study.
    pub tau0: f64,
    /// Number of τ halvings of a convergence study.
    pub n_halvings: usize,
    pub output_dir: PathBuf,
    /// Write a VTK snapshot every this many steps; 0 writes only the
    /// final state.
    pub snapshot_every: usize,
    pub quiet: bool,
    /// Gmsh physical-group number → boundary tag, for `format = gmsh`
    /// mesh files.
    pub gmsh_tags: HashMap<i64, BoundaryTag>,
}

fn case_defaults(case: CaseId) -> RunConfig {
    let (nu, gamma, alpha, tau, t_end, mesh) = match case {
        CaseId::TaylorGreen => (0.1, 10.0, 1.0, 0.125, 1.0, MeshSpec::Square { n: 64 }),
        CaseId::LidCavity => (0.0025, 100.0, 0.1, 1.0, 30.0, MeshSpec::Square { n: 64 }),
        CaseId::TurekCylinder => (0.001, 1000.0, 0.1, 0.0025, 8.0, MeshSpec::Channel { level: 2 }),
    };
    RunConfig {
        case,
        pair: ElementPair::TaylorHoodP2P1,
        mesh,
        nu,
        gamma,
        alpha,
        tau,
        t_end,
        tau0: 0.25,
        n_halvings: 4,
        output_dir: PathBuf::from("out"),
        snapshot_every: 0,
        quiet: false,
        gmsh_tags: HashMap::new(),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl fmt::Display) -> ConfigError {
    ConfigError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.to_string(),
    }
}

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn lex(path: &Path, text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(path, line, "unterminated section header"))?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(path, line, "expected `key = value`"))?;
        entries.push(Entry {
            line,
            section: section.clone(),
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

fn parse_f64(path: &Path, e: &Entry) -> Result<f64, ConfigError> {
    e.value
        .parse()
        .map_err(|_| parse_err(path, e.line, format!("`{}` is not a number", e.value)))
}

fn parse_usize(path: &Path, e: &Entry) -> Result<usize, ConfigError> {
    e.value
        .parse()
        .map_err(|_| parse_err(path, e.line, format!("`{}` is not a nonnegative integer", e.value)))
}

fn parse_bool(path: &Path, e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(parse_err(path, e.line, format!("`{other}` is not true/false"))),
    }
}

/// Parse and validate a configuration file. The `case` key must come
/// first in effect: its reference defaults are applied before any other
/// key overrides them.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(path, &text)
}

fn parse_config_str(path: &Path, text: &str) -> Result<RunConfig, ConfigError> {
    let entries = lex(path, text)?;

    let case_entry = entries
        .iter()
        .find(|e| e.section == "case" && e.key == "case")
        .ok_or_else(|| ConfigError::MissingKey("case.case".to_string()))?;
    let case = CaseId::from_name(&case_entry.value).ok_or_else(|| {
        parse_err(
            path,
            case_entry.line,
            format!(
                "unknown case `{}` (expected taylor_green, lid_cavity or turek_cylinder)",
                case_entry.value
            ),
        )
    })?;
    let mut config = case_defaults(case);

    // Mesh keys are collected first so a partial override (`n` only)
    // mutates the case default rather than replacing it wholesale.
    let mut mesh_source: Option<(&Entry, String)> = None;
    let mut mesh_n = None;
    let mut mesh_level = None;
    let mut mesh_path: Option<PathBuf> = None;
    let mut mesh_format: Option<MeshFormat> = None;

    for e in &entries {
        match (e.section.as_str(), e.key.as_str()) {
            ("case", "case") => {}
            ("case", "pair") => {
                config.pair = ElementPair::from_name(&e.value).ok_or_else(|| {
                    parse_err(path, e.line, format!("unknown element pair `{}`", e.value))
                })?;
            }
            ("mesh", "source") => mesh_source = Some((e, e.value.clone())),
            ("mesh", "n") => mesh_n = Some(parse_usize(path, e)?),
            ("mesh", "level") => mesh_level = Some(parse_usize(path, e)?),
            ("mesh", "path") => mesh_path = Some(PathBuf::from(&e.value)),
            ("mesh", "format") => {
                mesh_format = Some(match e.value.as_str() {
                    "native" => MeshFormat::Native,
                    "gmsh" => MeshFormat::GmshMsh2Ascii,
                    other => {
                        return Err(parse_err(
                            path,
                            e.line,
                            format!("unknown mesh format `{other}` (expected native or gmsh)"),
                        ))
                    }
                })
            }
            ("scheme", "nu") => config.nu = parse_f64(path, e)?,
            ("scheme", "gamma") => config.gamma = parse_f64(path, e)?,
            ("scheme", "alpha") => config.alpha = parse_f64(path, e)?,
            ("scheme", "tau") => config.tau = parse_f64(path, e)?,
            ("scheme", "t_end") => config.t_end = parse_f64(path, e)?,
            ("study", "tau0") => config.tau0 = parse_f64(path, e)?,
            ("study", "halvings") => config.n_halvings = parse_usize(path, e)?,
            ("output", "directory") => config.output_dir = PathBuf::from(&e.value),
            ("output", "snapshot_every") => config.snapshot_every = parse_usize(path, e)?,
            ("output", "quiet") => config.quiet = parse_bool(path, e)?,
            ("gmsh_tags", num) => {
                let group: i64 = num.parse().map_err(|_| {
                    parse_err(path, e.line, format!("`{num}` is not a physical group number"))
                })?;
                let tag = BoundaryTag::from_name(&e.value).ok_or_else(|| {
                    parse_err(path, e.line, format!("unknown boundary tag `{}`", e.value))
                })?;
                config.gmsh_tags.insert(group, tag);
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    path: path.display().to_string(),
                    line: e.line,
                    key: if e.section.is_empty() {
                        e.key.clone()
                    } else {
                        format!("{}.{}", e.section, e.key)
                    },
                })
            }
        }
    }

    match mesh_source.as_ref().map(|(_, s)| s.as_str()) {
        None => {
            // Partial overrides apply to the case's default source.
            match &mut config.mesh {
                MeshSpec::Square { n } => {
                    if let Some(v) = mesh_n {
                        *n = v;
                    }
                }
                MeshSpec::Channel { level } => {
                    if let Some(v) = mesh_level {
                        *level = v;
                    }
                }
                MeshSpec::File { .. } => unreachable!("no case defaults to a file mesh"),
            }
        }
        Some("square") => config.mesh = MeshSpec::Square { n: mesh_n.unwrap_or(64) },
        Some("channel") => config.mesh = MeshSpec::Channel { level: mesh_level.unwrap_or(2) },
        Some("file") => {
            let (e, _) = mesh_source.as_ref().unwrap();
            let file_path = mesh_path
                .ok_or_else(|| parse_err(path, e.line, "mesh source `file` needs `path`"))?;
            config.mesh = MeshSpec::File {
                path: file_path,
                format: mesh_format.unwrap_or(MeshFormat::Native),
            };
        }
        Some(other) => {
            let (e, _) = mesh_source.as_ref().unwrap();
            return Err(parse_err(
                path,
                e.line,
                format!("unknown mesh source `{other}` (expected square, channel or file)"),
            ));
        }
    }

    config.validate().map_err(|field| {
        parse_err(path, 0, format!("invalid value for `{field}`: must be positive"))
    })?;
    Ok(config)
}

impl RunConfig {
    /// Reference defaults of a case, before any file overrides.
    pub fn defaults(case: CaseId) -> RunConfig {
        case_defaults(case)
    }

    /// Name of the first non-positive physical parameter, if any.
    fn validate(&self) -> Result<(), &'static str> {
        for (name, v) in [
            ("scheme.nu", self.nu),
            ("scheme.gamma", self.gamma),
            ("scheme.alpha", self.alpha),
            ("scheme.tau", self.tau),
            ("scheme.t_end", self.t_end),
            ("study.tau0", self.tau0),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(name);
            }
        }
        match self.mesh {
            MeshSpec::Square { n } if n == 0 => return Err("mesh.n"),
            _ => {}
        }
        Ok(())
    }

    /// Serialize in the same format `parse_config` reads; parsing the
    /// result reproduces this config exactly.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str("[case]\n");
        s.push_str(&format!("case = {}\n", self.case.name()));
        s.push_str(&format!("pair = {}\n", self.pair.name()));
        s.push_str("\n[mesh]\n");
        match &self.mesh {
            MeshSpec::Square { n } => {
                s.push_str("source = square\n");
                s.push_str(&format!("n = {n}\n"));
            }
            MeshSpec::Channel { level } => {
                s.push_str("source = channel\n");
                s.push_str(&format!("level = {level}\n"));
            }
            MeshSpec::File { path, format } => {
                s.push_str("source = file\n");
                s.push_str(&format!("path = {}\n", path.display()));
                s.push_str(&format!(
                    "format = {}\n",
                    match format {
                        MeshFormat::Native => "native",
                        MeshFormat::GmshMsh2Ascii => "gmsh",
                    }
                ));
            }
        }
        s.push_str("\n[scheme]\n");
        s.push_str(&format!("nu = {:?}\n", self.nu));
        s.push_str(&format!("gamma = {:?}\n", self.gamma));
        s.push_str(&format!("alpha = {:?}\n", self.alpha));
        s.push_str(&format!("tau = {:?}\n", self.tau));
        s.push_str(&format!("t_end = {:?}\n", self.t_end));
        s.push_str("\n[study]\n");
        s.push_str(&format!("tau0 = {:?}\n", self.tau0));
        s.push_str(&format!("halvings = {}\n", self.n_halvings));
        s.push_str("\n[output]\n");
        s.push_str(&format!("directory = {}\n", self.output_dir.display()));
        s.push_str(&format!("snapshot_every = {}\n", self.snapshot_every));
        s.push_str(&format!("quiet = {}\n", self.quiet));
        if !self.gmsh_tags.is_empty() {
            s.push_str("\n[gmsh_tags]\n");
            let mut groups: Vec<_> = self.gmsh_tags.iter().collect();
            groups.sort();
            for (group, tag) in groups {
                s.push_str(&format!("{group} = {}\n", tag.name()));
            }
        }
        s
    }

    /// Construct the mesh this config describes, with the cavity lid
    /// retagged when the case needs it.
    pub fn build_mesh(&self) -> Result<Mesh, MeshError> {
        let mut mesh = match &self.mesh {
            MeshSpec::Square { n } => generate_unit_square(*n, *n, DiagonalPattern::Right),
            MeshSpec::Channel { level } => generate_turek_channel(*level),
            MeshSpec::File { path, format } => match format {
                MeshFormat::GmshMsh2Ascii if !self.gmsh_tags.is_empty() => {
                    read_gmsh_with_map(path, &self.gmsh_tags)?
                }
                _ => read_mesh(path, *format)?,
            },
        };
        if self.case == CaseId::LidCavity && matches!(self.mesh, MeshSpec::Square { .. }) {
            mesh.retag_boundary(|mid, tag| {
                if mid[1] > 1.0 - 1e-12 {
                    BoundaryTag::DirichletLid
                } else {
                    tag
                }
            });
        }
        Ok(mesh)
    }

    /// The scheme parameters this config describes.
    pub fn scheme_params(&self) -> SchemeParams {
        SchemeParams::new(self.nu, self.gamma, self.alpha, self.tau, self.t_end, self.pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config_str(Path::new("test.cfg"), text)
    }

    #[test]
    fn minimal_cavity_config_gets_reference_defaults() {
        let cfg = parse("[case]\ncase = lid_cavity\n").unwrap();
        assert_eq!(cfg.case, CaseId::LidCavity);
        assert_eq!(cfg.nu, 0.0025);
        assert_eq!(cfg.gamma, 100.0);
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.tau, 1.0);
        assert_eq!(cfg.t_end, 30.0);
        assert_eq!(cfg.pair, ElementPair::TaylorHoodP2P1);
    }

    #[test]
    fn override_is_honored() {
        let cfg = parse("[case]\ncase = taylor_green\n[scheme]\ngamma = 1\n").unwrap();
        assert_eq!(cfg.gamma, 1.0);
        assert_eq!(cfg.nu, 0.1);
    }

    #[test]
    fn negative_tau_is_rejected() {
        let err = parse("[case]\ncase = lid_cavity\n[scheme]\ntau = -1\n").unwrap_err();
        assert!(err.to_string().contains("scheme.tau"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = parse("[case]\ncase = lid_cavity\n[scheme]\nnou = 3\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key, .. } => {
                assert_eq!(line, 4);
                assert_eq!(key, "scheme.nou");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn missing_case_is_reported() {
        let err = parse("[scheme]\nnu = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey(_)));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored_and_roundtrip_holds() {
        let text = "# cavity run\n[case]\ncase = lid_cavity\npair = p1p1\n\n[mesh]\nn = 32\n\n\
                    [scheme]\ntau = 0.5\n\n[output]\ndirectory = results\nsnapshot_every = 5\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.mesh, MeshSpec::Square { n: 32 });
        assert_eq!(cfg.pair, ElementPair::EqualOrderP1P1);
        assert_eq!(cfg.snapshot_every, 5);
        let cfg2 = parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn turek_defaults_and_roundtrip() {
        let cfg = parse("[case]\ncase = turek_cylinder\n").unwrap();
        assert_eq!(cfg.mesh, MeshSpec::Channel { level: 2 });
        assert_eq!(cfg.nu, 0.001);
        assert_eq!(cfg.gamma, 1000.0);
        assert_eq!(cfg.tau, 0.0025);
        let cfg2 = parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn gmsh_tag_map_is_parsed_and_roundtrips() {
        let text = "[case]\ncase = turek_cylinder\n[mesh]\nsource = file\npath = chan.msh\n\
                    format = gmsh\n[gmsh_tags]\n1 = wall\n2 = inflow\n3 = outflow\n4 = cylinder\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.gmsh_tags.len(), 4);
        assert_eq!(cfg.gmsh_tags[&1], BoundaryTag::DirichletWall);
        assert_eq!(cfg.gmsh_tags[&4], BoundaryTag::DirichletCylinder);
        assert!(matches!(cfg.mesh, MeshSpec::File { .. }));
        let cfg2 = parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn gmsh_mesh_file_uses_configured_tag_map() {
        let dir = tempfile::tempdir().unwrap();
        let msh = dir.path().join("square.msh");
        std::fs::write(
            &msh,
            "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
             $Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
             $Elements\n6\n\
             1 1 2 7 1 1 2\n2 1 2 7 2 2 3\n3 1 2 9 3 3 4\n4 1 2 7 4 4 1\n\
             5 2 2 1 1 1 2 3\n6 2 2 1 1 1 3 4\n$EndElements\n",
        )
        .unwrap();
        let text = format!(
            "[case]\ncase = lid_cavity\n[mesh]\nsource = file\npath = {}\nformat = gmsh\n\
             [gmsh_tags]\n7 = wall\n9 = lid\n",
            msh.display()
        );
        let cfg = parse(&text).unwrap();
        let mesh = cfg.build_mesh().unwrap();
        assert_eq!(mesh.cells().len(), 2);
        let lid = mesh
            .facets()
            .iter()
            .filter(|f| f.tag == BoundaryTag::DirichletLid)
            .count();
        assert_eq!(lid, 1);
        let wall = mesh
            .facets()
            .iter()
            .filter(|f| f.tag == BoundaryTag::DirichletWall)
            .count();
        assert_eq!(wall, 3);
    }

    #[test]
    fn file_source_requires_path() {
        let err = parse("[case]\ncase = lid_cavity\n[mesh]\nsource = file\n").unwrap_err();
        assert!(err.to_string().contains("path"), "{err}");
    }

    #[test]
    fn cavity_mesh_gets_lid_tag() {
        let cfg = parse("[case]\ncase = lid_cavity\n[mesh]\nn = 4\n").unwrap();
        let mesh = cfg.build_mesh().unwrap();
        assert!(mesh.has_tag(BoundaryTag::DirichletLid));
    }
}
