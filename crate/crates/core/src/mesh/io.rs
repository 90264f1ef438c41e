//! Mesh file formats: OBJ with a label sidecar, legacy ASCII VTK polydata and native JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{check_topology, LabeledSurfaceMesh, MeshError, Result, TopologyReport, Vec3, UNLABELED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    /// Wavefront OBJ plus `<stem>.labels`, one integer per face.
    ObjWithLabelSidecar,
    /// Legacy ASCII VTK polydata with a `ModelFaceID` cell scalar.
    AsciiLegacyPolydata,
    ArtifactJson,
}

impl MeshFormat {
    /// Guesses the format from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(Self::ObjWithLabelSidecar),
            "vtk" | "vtp" => Some(Self::AsciiLegacyPolydata),
            "json" => Some(Self::ArtifactJson),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::ObjWithLabelSidecar => "obj",
            Self::AsciiLegacyPolydata => "vtk",
            Self::ArtifactJson => "json",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoadedMesh {
    pub mesh: LabeledSurfaceMesh,
    pub topology: TopologyReport,
}

pub fn sidecar_path(obj: &Path) -> PathBuf {
    obj.with_extension("labels")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<LoadedMesh> {
    let mesh = match format {
        MeshFormat::ObjWithLabelSidecar => {
            let side = sidecar_path(path);
            let labels = if side.exists() {
                Some(read(&side)?)
            } else {
                None
            };
            parse_obj(&read(path)?, labels.as_deref())?
        }
        MeshFormat::AsciiLegacyPolydata => parse_vtk(&read(path)?)?,
        MeshFormat::ArtifactJson => parse_json(&read(path)?)?,
    };
    let topology = check_topology(&mesh);
    if !topology.watertight {
        log::info!(
            "{} is not watertight: {} boundary edge(s), {} non-manifold edge(s)",
            path.display(),
            topology.boundary_edges,
            topology.non_manifold_edges
        );
    }
    Ok(LoadedMesh { mesh, topology })
}

pub fn save_mesh(mesh: &LabeledSurfaceMesh, path: &Path, format: MeshFormat) -> Result<()> {
    match format {
        MeshFormat::ObjWithLabelSidecar => {
            write(path, &write_obj(mesh))?;
            write(&sidecar_path(path), &write_labels(mesh))
        }
        MeshFormat::AsciiLegacyPolydata => write(path, &write_vtk(mesh)),
        MeshFormat::ArtifactJson => write(path, &write_json(mesh)),
    }
}

fn perr(format: &'static str, line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        format,
        line,
        message: message.into(),
    }
}

/// OBJ faces with more than three corners are fan-triangulated; every fan triangle takes the
/// label of its source face.
pub fn parse_obj(text: &str, labels: Option<&str>) -> Result<LabeledSurfaceMesh> {
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Vec<u32>)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|e| perr("obj", line_no, format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(perr("obj", line_no, "vertex needs 3 coordinates"));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|e| perr("obj", line_no, format!("bad face index {tok:?}: {e}")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(perr("obj", line_no, "face index 0"));
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(perr("obj", line_no, format!("face index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(perr("obj", line_no, "face needs at least 3 vertices"));
                }
                faces.push((line_no, idx));
            }
            _ => {}
        }
    }
    let face_labels: Vec<i32> = match labels {
        Some(text) => {
            let mut out = Vec::new();
            for (ln, line) in text.lines().enumerate() {
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                out.push(
                    t.parse()
                        .map_err(|e| perr("labels", ln + 1, format!("bad label {t:?}: {e}")))?,
                );
            }
            if out.len() != faces.len() {
                return Err(perr(
                    "labels",
                    text.lines().count(),
                    format!("{} labels for {} faces", out.len(), faces.len()),
                ));
            }
            out
        }
        None => vec![UNLABELED; faces.len()],
    };
    let mut triangles = Vec::with_capacity(faces.len());
    let mut tri_labels = Vec::with_capacity(faces.len());
    for ((line_no, f), label) in faces.iter().zip(face_labels) {
        for k in 1..f.len() - 1 {
            let t = [f[0], f[k], f[k + 1]];
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(perr("obj", *line_no, "face repeats a vertex"));
            }
            triangles.push(t);
            tri_labels.push(label);
        }
    }
    LabeledSurfaceMesh::new(vertices, triangles, tri_labels)
}

pub fn write_obj(mesh: &LabeledSurfaceMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn write_labels(mesh: &LabeledSurfaceMesh) -> String {
    let mut s = String::new();
    for l in mesh.labels() {
        let _ = writeln!(s, "{l}");
    }
    s
}

/// Whitespace token stream that remembers source line numbers.
struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim_start().starts_with('#'))
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Self { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or(self.items.last())
            .map_or(0, |t| t.0)
    }

    fn next(&mut self) -> Result<&'a str> {
        let t = self
            .items
            .get(self.pos)
            .ok_or_else(|| perr("vtk", self.line(), "unexpected end of file"))?;
        self.pos += 1;
        Ok(t.1)
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let line = self.line();
        let t = self.next()?;
        t.parse()
            .map_err(|e| perr("vtk", line, format!("bad {what} {t:?}: {e}")))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let line = self.line();
        let t = self.next()?;
        if t.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            Err(perr("vtk", line, format!("expected {word}, found {t:?}")))
        }
    }
}

pub fn parse_vtk(text: &str) -> Result<LabeledSurfaceMesh> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("# vtk DataFile") {
        return Err(perr("vtk", 1, "missing '# vtk DataFile' header"));
    }
    lines.next(); // title
    let kind = lines.next().unwrap_or("").trim();
    if !kind.eq_ignore_ascii_case("ASCII") {
        return Err(perr("vtk", 3, format!("only ASCII files are supported, found {kind:?}")));
    }
    // tokenize from line 4 on, keeping absolute line numbers
    let body: String = text.lines().skip(3).map(|l| format!("{l}\n")).collect();
    let mut tok = Tokens::new(&body);
    for t in &mut tok.items {
        t.0 += 3;
    }
    tok.expect("DATASET")?;
    tok.expect("POLYDATA")?;
    let mut vertices = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut cell_of_triangle: Vec<usize> = Vec::new();
    let mut n_cells = 0usize;
    let mut labels: Option<Vec<i32>> = None;
    while tok.pos < tok.items.len() {
        let line = tok.line();
        let word = tok.next()?.to_ascii_uppercase();
        match word.as_str() {
            "POINTS" => {
                let n: usize = tok.parse("point count")?;
                tok.next()?; // data type
                vertices.reserve(n);
                for _ in 0..n {
                    let x = tok.parse("coordinate")?;
                    let y = tok.parse("coordinate")?;
                    let z = tok.parse("coordinate")?;
                    vertices.push(Vec3::new(x, y, z));
                }
            }
            "POLYGONS" => {
                let n: usize = tok.parse("polygon count")?;
                let _size: usize = tok.parse("polygon list size")?;
                for _ in 0..n {
                    let line = tok.line();
                    let k: usize = tok.parse("corner count")?;
                    let mut idx = Vec::with_capacity(k);
                    for _ in 0..k {
                        let i: usize = tok.parse("vertex index")?;
                        if i >= vertices.len() {
                            return Err(perr("vtk", line, format!("vertex index {i} out of range")));
                        }
                        idx.push(i as u32);
                    }
                    if k < 3 {
                        return Err(perr("vtk", line, "polygon with fewer than 3 corners"));
                    }
                    for j in 1..k - 1 {
                        triangles.push([idx[0], idx[j], idx[j + 1]]);
                        cell_of_triangle.push(n_cells);
                    }
                    n_cells += 1;
                }
            }
            "CELL_DATA" => {
                let n: usize = tok.parse("cell count")?;
                if n != n_cells {
                    return Err(perr("vtk", line, format!("CELL_DATA {n} does not match {n_cells} polygons")));
                }
            }
            "SCALARS" => {
                let name = tok.next()?;
                tok.next()?; // type
                // optional component count before LOOKUP_TABLE
                let mut t = tok.next()?;
                if !t.eq_ignore_ascii_case("LOOKUP_TABLE") {
                    t = tok.next()?;
                }
                if !t.eq_ignore_ascii_case("LOOKUP_TABLE") {
                    return Err(perr("vtk", tok.line(), "expected LOOKUP_TABLE"));
                }
                tok.next()?; // table name
                let mut vals = Vec::with_capacity(n_cells);
                for _ in 0..n_cells {
                    let v: f64 = tok.parse("scalar")?;
                    vals.push(v);
                }
                if name == "ModelFaceID" {
                    labels = Some(vals.into_iter().map(|v| v.round() as i32).collect());
                }
            }
            "POINT_DATA" | "FIELD" | "LINES" | "VERTICES" | "TRIANGLE_STRIPS" | "NORMALS" => {
                // everything after the sections we understand is ignored
                break;
            }
            other => return Err(perr("vtk", line, format!("unexpected keyword {other:?}"))),
        }
    }
    let cell_labels = labels.unwrap_or_else(|| vec![UNLABELED; n_cells]);
    let tri_labels = cell_of_triangle.iter().map(|&c| cell_labels[c]).collect();
    LabeledSurfaceMesh::new(vertices, triangles, tri_labels)
}

/// Coordinates are written with 9 significant digits.
pub fn write_vtk(mesh: &LabeledSurfaceMesh) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nlabeled surface mesh\nASCII\nDATASET POLYDATA\n");
    let _ = writeln!(s, "POINTS {} double", mesh.vertices().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} {:e}", v.x, v.y, v.z);
    }
    let n = mesh.face_count();
    let _ = writeln!(s, "POLYGONS {} {}", n, 4 * n);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_DATA {n}\nSCALARS ModelFaceID int 1\nLOOKUP_TABLE default");
    for l in mesh.labels() {
        let _ = writeln!(s, "{l}");
    }
    s
}

pub fn parse_json(text: &str) -> Result<LabeledSurfaceMesh> {
    #[derive(Deserialize)]
    struct Raw {
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[u32; 3]>,
        #[serde(default)]
        labels: Option<Vec<i32>>,
        #[serde(default)]
        label_map: std::collections::BTreeMap<String, i32>,
    }
    let raw: Raw = serde_json::from_str(text)
        .map_err(|e| perr("json", e.line(), e.to_string()))?;
    let labels = raw
        .labels
        .unwrap_or_else(|| vec![UNLABELED; raw.triangles.len()]);
    let vertices = raw.vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect();
    Ok(LabeledSurfaceMesh::new(vertices, raw.triangles, labels)?.with_label_map(raw.label_map))
}

pub fn write_json(mesh: &LabeledSurfaceMesh) -> String {
    serde_json::to_string(mesh).expect("mesh serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom;

    #[test]
    fn single_triangle_obj_with_sidecar() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", Some("1\n")).unwrap();
        assert_eq!(m.face_count(), 1);
        assert_eq!(m.labels(), &[1]);
    }

    #[test]
    fn obj_without_sidecar_is_unlabeled() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n", None).unwrap();
        assert_eq!(m.face_count(), 2);
        assert!(m.labels().iter().all(|&l| l == UNLABELED));
    }

    #[test]
    fn obj_parse_error_names_the_line() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", None).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 4, .. }), "{err}");
        let err = parse_obj("v 0 0 0\nv 1 x 0\n", None).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn vtk_round_trip_is_stable() {
        let m = phantom::icosphere(1.3, 2).relabeled((0..320).map(|i| i % 7).collect()).unwrap();
        let text = write_vtk(&m);
        let back = parse_vtk(&text).unwrap();
        assert_eq!(back.labels(), m.labels());
        assert_eq!(back.triangles(), m.triangles());
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            assert!((a - b).norm() <= 1e-8 * 1.3);
        }
        // a second pass reproduces the file exactly
        assert_eq!(write_vtk(&back), text);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = phantom::torus(2.0, 0.5, 12, 8).with_label_map(crate::mesh::anatomical_label_map());
        let back = parse_json(&write_json(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn obj_round_trip_is_exact() {
        let m = phantom::icosphere(0.7, 2);
        let back = parse_obj(&write_obj(&m), Some(&write_labels(&m))).unwrap();
        assert_eq!(back, m);
    }
}
