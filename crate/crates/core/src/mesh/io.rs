//! Plain-text mesh format.
//!
//! ```text
//! vertices N elements M boundary K
//! x y            (N lines)
//! v0 v1 v2       (M lines, v2 newest vertex)
//! v0 v1 tag      (K lines, tag D or N)
//! ```
//! Coordinates are written with 17 significant digits so that a write/read
//! cycle reproduces them exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{BoundaryFacet, BoundaryTag, Triangulation};
use crate::error::MeshError;

fn format_err(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Format { line, msg: msg.into() }
}

impl Triangulation {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "vertices {} elements {} boundary {}",
            self.num_vertices(),
            self.num_elements(),
            self.boundary().len()
        )
        .unwrap();
        for p in self.vertices() {
            writeln!(s, "{:.16e} {:.16e}", p[0], p[1]).unwrap();
        }
        for e in self.elements() {
            writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.vertices[2]).unwrap();
        }
        for f in self.boundary() {
            let tag = match f.tag {
                BoundaryTag::Dirichlet => 'D',
                BoundaryTag::Neumann => 'N',
            };
            writeln!(s, "{} {} {}", f.vertices[0], f.vertices[1], tag).unwrap();
        }
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), MeshError> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    /// Reads a mesh; the file becomes a new initial mesh with its element
    /// vertex order (and thus refinement edges) kept as written.
    pub fn read_from(r: impl BufRead) -> Result<Triangulation, MeshError> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let (ln, header) = lines.next().ok_or_else(|| format_err(1, "empty input"))?;
        let header = header?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 6 || tok[0] != "vertices" || tok[2] != "elements" || tok[4] != "boundary" {
            return Err(format_err(ln, "expected 'vertices N elements M boundary K'"));
        }
        let count = |s: &str| s.parse::<usize>().map_err(|e| format_err(ln, e.to_string()));
        let (nv, nt, nb) = (count(tok[1])?, count(tok[3])?, count(tok[5])?);

        let mut next = |what: &str| -> Result<(usize, Vec<String>), MeshError> {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| format_err(0, format!("unexpected end of input while reading {what}")))?;
            Ok((ln, l?.split_whitespace().map(str::to_owned).collect()))
        };

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, t) = next("vertices")?;
            if t.len() != 2 {
                return Err(format_err(ln, "expected 'x y'"));
            }
            let x = t[0].parse::<f64>().map_err(|e| format_err(ln, e.to_string()))?;
            let y = t[1].parse::<f64>().map_err(|e| format_err(ln, e.to_string()))?;
            vertices.push([x, y]);
        }
        let mut elements = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, t) = next("elements")?;
            if t.len() != 3 {
                return Err(format_err(ln, "expected 'v0 v1 v2'"));
            }
            let mut tri = [0usize; 3];
            for (k, v) in tri.iter_mut().enumerate() {
                *v = t[k].parse().map_err(|_| format_err(ln, "invalid vertex id"))?;
            }
            elements.push(tri);
        }
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, t) = next("boundary")?;
            if t.len() != 3 {
                return Err(format_err(ln, "expected 'v0 v1 tag'"));
            }
            let a = t[0].parse().map_err(|_| format_err(ln, "invalid vertex id"))?;
            let b = t[1].parse().map_err(|_| format_err(ln, "invalid vertex id"))?;
            let tag = match t[2].as_str() {
                "D" => BoundaryTag::Dirichlet,
                "N" => BoundaryTag::Neumann,
                other => return Err(format_err(ln, format!("unknown boundary tag '{other}'"))),
            };
            boundary.push(BoundaryFacet { vertices: [a, b], tag });
        }
        Triangulation::new(vertices, elements, boundary)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Triangulation, MeshError> {
        let f = std::fs::File::open(path)?;
        Triangulation::read_from(std::io::BufReader::new(f))
    }
}
