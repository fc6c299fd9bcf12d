//! ASCII Medit `.mesh` / `.sol` files (2D).
//!
//! Indices are 1-based on disk. Reals are written with 17 significant
//! digits so a write-read cycle reproduces every coordinate exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::mesh::{BoundaryEdge, Mesh, Triangle, Vec2, Vertex};
use crate::metric::{MetricField, SpdTensor2, SymTensor2};

/// Medit type code of a scalar record.
pub const SOL_SCALAR: u32 = 1;
/// Medit type code of a vector record.
pub const SOL_VECTOR: u32 = 2;
/// Medit type code of a symmetric tensor record (`m11 m12 m22` in 2D).
pub const SOL_TENSOR: u32 = 3;

const MESH_KEYWORDS: [&str; 6] = ["MeshVersionFormatted", "Dimension", "Vertices", "Edges", "Triangles", "End"];
const SOL_KEYWORDS: [&str; 4] = ["MeshVersionFormatted", "Dimension", "SolAtVertices", "End"];

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

struct Tokens<'a> {
    path: String,
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, path: &str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("");
                line.split_whitespace().map(move |t| (i + 1, t))
            })
            .collect::<Vec<_>>();
        let last_line = text.lines().count().max(1);
        Self { path: path.to_string(), items, pos: 0, last_line }
    }

    fn error(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.path.clone(), line, msg: msg.into() }
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).map_or(self.last_line, |t| t.0)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self.items.get(self.pos).copied().ok_or_else(|| self.error(self.last_line, format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (line, tok) = self.next(what)?;
        if is_keyword(tok) {
            return Err(self.error(line, format!("expected {what}, found keyword `{tok}`")));
        }
        tok.parse().map_err(|_| self.error(line, format!("expected {what}, found `{tok}`")))
    }

    fn index(&mut self, n: usize, what: &str) -> Result<usize> {
        let line = self.line();
        let i: usize = self.parse(what)?;
        if i == 0 || i > n {
            return Err(self.error(line, format!("{what} {i} out of range 1..={n}")));
        }
        Ok(i - 1)
    }

    /// Skips an unknown section up to the next recognized keyword.
    fn skip_unknown(&mut self, keyword: &str, line: usize, known: &[&str]) {
        log::warn!("{}:{line}: skipping unknown keyword `{keyword}`", self.path);
        while let Some(&(_, t)) = self.items.get(self.pos) {
            if known.contains(&t) {
                break;
            }
            self.pos += 1;
        }
    }
}

fn is_keyword(tok: &str) -> bool {
    tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && !tok.eq_ignore_ascii_case("nan") && !tok.eq_ignore_ascii_case("inf")
}

fn header(tokens: &mut Tokens<'_>, keyword: &str, line: usize) -> Result<()> {
    match keyword {
        "MeshVersionFormatted" => {
            let l = tokens.line();
            let v: u32 = tokens.parse("format version")?;
            if !(1..=2).contains(&v) {
                return Err(tokens.error(l, format!("unsupported MeshVersionFormatted {v}")));
            }
        }
        "Dimension" => {
            let l = tokens.line();
            let d: u32 = tokens.parse("dimension")?;
            if d != 2 {
                return Err(tokens.error(l, format!("dimension {d} is not supported, expected 2")));
            }
        }
        _ => return Err(tokens.error(line, format!("unexpected keyword `{keyword}`"))),
    }
    Ok(())
}

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::from("MeshVersionFormatted 2\n\nDimension 2\n\nVertices\n");
    let _ = writeln!(s, "{}", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", real(v.position.x), real(v.position.y), v.tag);
    }
    if !mesh.boundary_edges().is_empty() {
        let _ = writeln!(s, "\nEdges\n{}", mesh.boundary_edges().len());
        for e in mesh.boundary_edges() {
            let _ = writeln!(s, "{} {} {}", e.vertices[0] + 1, e.vertices[1] + 1, e.tag);
        }
    }
    let _ = writeln!(s, "\nTriangles\n{}", mesh.num_triangles());
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        let _ = writeln!(s, "{} {} {} {}", a + 1, b + 1, c + 1, t.tag);
    }
    s.push_str("\nEnd\n");
    s
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

/// Parses a mesh; `path` only labels error messages.
pub fn parse_mesh(text: &str, path: &str) -> Result<Mesh> {
    let mut tokens = Tokens::new(text, path);
    let mut vertices: Option<Vec<Vertex>> = None;
    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    let mut ended = false;
    while tokens.pos < tokens.items.len() {
        let (line, kw) = tokens.next("keyword")?;
        match kw {
            "MeshVersionFormatted" | "Dimension" => header(&mut tokens, kw, line)?,
            "Vertices" => {
                let n: usize = tokens.parse("vertex count")?;
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    let x: f64 = tokens.parse("vertex x")?;
                    let y: f64 = tokens.parse("vertex y")?;
                    let tag: i32 = tokens.parse("vertex reference")?;
                    v.push(Vertex { position: Vec2::new(x, y), tag });
                }
                vertices = Some(v);
            }
            "Edges" | "Triangles" => {
                let n_vertices = vertices.as_ref().map(Vec::len).ok_or_else(|| tokens.error(line, format!("`{kw}` before `Vertices`")))?;
                let n: usize = tokens.parse("record count")?;
                for _ in 0..n {
                    if kw == "Edges" {
                        let a = tokens.index(n_vertices, "edge vertex")?;
                        let b = tokens.index(n_vertices, "edge vertex")?;
                        let tag: i32 = tokens.parse("edge reference")?;
                        edges.push(BoundaryEdge { vertices: [a, b], tag });
                    } else {
                        let a = tokens.index(n_vertices, "triangle vertex")?;
                        let b = tokens.index(n_vertices, "triangle vertex")?;
                        let c = tokens.index(n_vertices, "triangle vertex")?;
                        let tag: i32 = tokens.parse("triangle reference")?;
                        triangles.push(Triangle { vertices: [a, b, c], tag });
                    }
                }
            }
            "End" => {
                ended = true;
                break;
            }
            other if is_keyword(other) => tokens.skip_unknown(other, line, &MESH_KEYWORDS),
            other => return Err(tokens.error(line, format!("expected a keyword, found `{other}`"))),
        }
    }
    if !ended {
        log::warn!("{path}: missing `End`");
    }
    let vertices = vertices.ok_or_else(|| tokens.error(tokens.last_line, "no `Vertices` section"))?;
    Mesh::new(vertices, triangles, edges)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    parse_mesh(&fs::read_to_string(path)?, &path.display().to_string())
}

/// One field of a `.sol` file.
#[derive(Clone, Debug, PartialEq)]
pub enum SolData {
    Scalar(Vec<f64>),
    Vector(Vec<Vec2>),
    Tensor(Vec<SymTensor2>),
}

impl SolData {
    pub fn len(&self) -> usize {
        match self {
            Self::Scalar(v) => v.len(),
            Self::Vector(v) => v.len(),
            Self::Tensor(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn type_code(&self) -> u32 {
        match self {
            Self::Scalar(_) => SOL_SCALAR,
            Self::Vector(_) => SOL_VECTOR,
            Self::Tensor(_) => SOL_TENSOR,
        }
    }
}

impl From<&ScalarField> for SolData {
    fn from(f: &ScalarField) -> Self {
        Self::Scalar(f.to_vec())
    }
}

impl From<&MetricField> for SolData {
    fn from(m: &MetricField) -> Self {
        Self::Tensor(m.iter().map(|t| *t.sym()).collect())
    }
}

pub fn sol_to_string(fields: &[SolData]) -> Result<String> {
    let n = fields.first().map_or(0, SolData::len);
    if let Some(f) = fields.iter().find(|f| f.len() != n) {
        return Err(Error::FieldLength { expected: n, got: f.len() });
    }
    let mut s = String::from("MeshVersionFormatted 2\n\nDimension 2\n\nSolAtVertices\n");
    let _ = writeln!(s, "{n}");
    let codes: Vec<String> = fields.iter().map(|f| f.type_code().to_string()).collect();
    let _ = writeln!(s, "{} {}", fields.len(), codes.join(" "));
    for i in 0..n {
        let mut rec: Vec<String> = Vec::new();
        for f in fields {
            match f {
                SolData::Scalar(v) => rec.push(real(v[i])),
                SolData::Vector(v) => rec.extend([real(v[i].x), real(v[i].y)]),
                SolData::Tensor(v) => rec.extend([real(v[i].m11), real(v[i].m12), real(v[i].m22)]),
            }
        }
        let _ = writeln!(s, "{}", rec.join(" "));
    }
    s.push_str("\nEnd\n");
    Ok(s)
}

pub fn write_sol(fields: &[SolData], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, sol_to_string(fields)?)?;
    Ok(())
}

pub fn write_scalar_sol(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    write_sol(&[field.into()], path)
}

pub fn write_metric_sol(metric: &MetricField, path: impl AsRef<Path>) -> Result<()> {
    write_sol(&[metric.into()], path)
}

/// Parses a `.sol`; when `expected` is given the record count must match it.
/// Tensor fields must be SPD.
pub fn parse_sol(text: &str, path: &str, expected: Option<usize>) -> Result<Vec<SolData>> {
    parse_sol_with_lines(text, path, expected).map(|(f, _)| f)
}

/// Also returns the line on which each record starts.
fn parse_sol_with_lines(text: &str, path: &str, expected: Option<usize>) -> Result<(Vec<SolData>, Vec<usize>)> {
    let mut lines = Vec::new();
    let mut tokens = Tokens::new(text, path);
    let mut fields = None;
    while tokens.pos < tokens.items.len() {
        let (line, kw) = tokens.next("keyword")?;
        match kw {
            "MeshVersionFormatted" | "Dimension" => header(&mut tokens, kw, line)?,
            "SolAtVertices" => {
                let count_line = tokens.line();
                let n: usize = tokens.parse("record count")?;
                if let Some(e) = expected.filter(|&e| e != n) {
                    return Err(tokens.error(count_line, format!("{n} records, but the mesh has {e} vertices")));
                }
                let nf: usize = tokens.parse("field count")?;
                let mut codes = Vec::with_capacity(nf);
                for _ in 0..nf {
                    let l = tokens.line();
                    let c: u32 = tokens.parse("type code")?;
                    if !(SOL_SCALAR..=SOL_TENSOR).contains(&c) {
                        return Err(tokens.error(l, format!("unknown type code {c}")));
                    }
                    codes.push(c);
                }
                let mut data: Vec<SolData> = codes
                    .iter()
                    .map(|&c| match c {
                        SOL_SCALAR => SolData::Scalar(Vec::with_capacity(n)),
                        SOL_VECTOR => SolData::Vector(Vec::with_capacity(n)),
                        _ => SolData::Tensor(Vec::with_capacity(n)),
                    })
                    .collect();
                lines = Vec::with_capacity(n);
                for _ in 0..n {
                    lines.push(tokens.line());
                    for d in &mut data {
                        match d {
                            SolData::Scalar(v) => v.push(tokens.parse("scalar value")?),
                            SolData::Vector(v) => v.push(Vec2::new(tokens.parse("vector x")?, tokens.parse("vector y")?)),
                            SolData::Tensor(v) => v.push(SymTensor2::new(
                                tokens.parse("tensor m11")?,
                                tokens.parse("tensor m12")?,
                                tokens.parse("tensor m22")?,
                            )),
                        }
                    }
                }
                fields = Some(data);
            }
            "End" => break,
            other if is_keyword(other) => tokens.skip_unknown(other, line, &SOL_KEYWORDS),
            other => return Err(tokens.error(line, format!("expected a keyword, found `{other}`"))),
        }
    }
    let fields = fields.ok_or_else(|| tokens.error(tokens.last_line, "no `SolAtVertices` section"))?;
    Ok((fields, lines))
}

pub fn read_sol(path: impl AsRef<Path>, expected: Option<usize>) -> Result<Vec<SolData>> {
    let path = path.as_ref();
    parse_sol(&fs::read_to_string(path)?, &path.display().to_string(), expected)
}

fn single_field(fields: Vec<SolData>, path: &Path, code: u32) -> Result<SolData> {
    let found: Vec<u32> = fields.iter().map(SolData::type_code).collect();
    match <[SolData; 1]>::try_from(fields) {
        Ok([f]) if f.type_code() == code => Ok(f),
        _ => Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: format!("expected a single field of type {code}, found types {found:?}"),
        }),
    }
}

pub fn read_scalar_sol(path: impl AsRef<Path>, expected: Option<usize>) -> Result<ScalarField> {
    let path = path.as_ref();
    match single_field(read_sol(path, expected)?, path, SOL_SCALAR)? {
        SolData::Scalar(v) => Ok(ScalarField::new(v)),
        _ => unreachable!(),
    }
}

/// Reads a metric field, checking that every tensor is SPD.
pub fn read_metric_sol(path: impl AsRef<Path>, expected: Option<usize>) -> Result<MetricField> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let label = path.display().to_string();
    let (fields, lines) = parse_sol_with_lines(&text, &label, expected)?;
    match single_field(fields, path, SOL_TENSOR)? {
        SolData::Tensor(v) => v
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                SpdTensor2::from_sym(t).map_err(|e| Error::Parse {
                    path: label.clone(),
                    line: lines[i],
                    msg: format!("record {}: {e}", i + 1),
                })
            })
            .collect(),
        _ => unreachable!(),
    }
}
