//! Conforming 2D triangulations refined by newest vertex bisection (NVB).
//!
//! Every element stores its vertices as `[v0, v1, v2]` in counter-clockwise
//! order, where `v2` is the newest vertex and `(v0, v1)` is the refinement
//! edge. Elements also carry an [`ElementKey`] (root index plus bisection
//! path) which identifies them across all meshes generated from the same
//! initial triangulation.

mod io;
mod overlay;
mod refine;
mod topology;

use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

use crate::error::MeshError;

pub use topology::Topology;

pub type Point = [f64; 2];

/// Maximal bisection depth representable by a [`BisectionPath`].
pub const MAX_DEPTH: usize = 128;

/// Sequence of child slots from a root element down to a descendant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BisectionPath {
    bits: u128,
    depth: u8,
}

impl BisectionPath {
    pub const ROOT: BisectionPath = BisectionPath { bits: 0, depth: 0 };

    pub fn depth(&self) -> usize {
        self.depth as usize
    }

    /// Child slot taken at level `level` (0-based).
    pub fn slot(&self, level: usize) -> u8 {
        debug_assert!(level < self.depth());
        ((self.bits >> level) & 1) as u8
    }

    pub fn child(&self, slot: u8) -> Result<BisectionPath, MeshError> {
        let d = self.depth();
        if d >= MAX_DEPTH {
            return Err(MeshError::DepthExceeded(MAX_DEPTH));
        }
        Ok(BisectionPath {
            bits: self.bits | (u128::from(slot & 1) << d),
            depth: self.depth + 1,
        })
    }

    /// The ancestor path of the given depth.
    pub fn truncate(&self, depth: usize) -> BisectionPath {
        debug_assert!(depth <= self.depth());
        let bits = if depth == 0 {
            0
        } else if depth >= 128 {
            self.bits
        } else {
            self.bits & ((1u128 << depth) - 1)
        };
        BisectionPath { bits, depth: depth as u8 }
    }

    pub fn is_prefix_of(&self, other: &BisectionPath) -> bool {
        self.depth <= other.depth && other.truncate(self.depth()) == *self
    }
}

/// Position of an element in the bisection forest rooted at the initial mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementKey {
    pub root: u32,
    pub path: BisectionPath,
}

impl ElementKey {
    pub fn is_ancestor_or_equal(&self, other: &ElementKey) -> bool {
        self.root == other.root && self.path.is_prefix_of(&other.path)
    }

    /// Strict ancestors, from the root downwards.
    pub fn ancestors(&self) -> impl Iterator<Item = ElementKey> + '_ {
        (0..self.path.depth()).map(move |d| ElementKey {
            root: self.root,
            path: self.path.truncate(d),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub vertices: [usize; 3],
    pub key: ElementKey,
}

impl Element {
    pub fn generation(&self) -> usize {
        self.key.path.depth()
    }

    pub fn refinement_edge(&self) -> [usize; 2] {
        [self.vertices[0], self.vertices[1]]
    }

    /// Local edge `k` joins `vertices[k]` and `vertices[(k + 1) % 3]`; edge 0 is the refinement edge.
    pub fn edge(&self, k: usize) -> [usize; 2] {
        [self.vertices[k], self.vertices[(k + 1) % 3]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug)]
pub struct Triangulation {
    vertices: Vec<Point>,
    // midpoint parents of vertices created by bisection; `None` for initial vertices
    vertex_parents: Vec<Option<[usize; 2]>>,
    elements: Vec<Element>,
    boundary: Vec<BoundaryFacet>,
    roots: Arc<Vec<[Point; 3]>>,
    topology: OnceLock<Topology>,
}

impl Clone for Triangulation {
    fn clone(&self) -> Self {
        Triangulation {
            vertices: self.vertices.clone(),
            vertex_parents: self.vertex_parents.clone(),
            elements: self.elements.clone(),
            boundary: self.boundary.clone(),
            roots: Arc::clone(&self.roots),
            topology: OnceLock::new(),
        }
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Bit pattern of a point usable as a hash key; `-0.0` and `0.0` coincide.
pub(crate) fn point_key(p: Point) -> (u64, u64) {
    ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits())
}

pub(crate) fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

impl Triangulation {
    /// Builds an initial mesh, keeping the given vertex order of each element
    /// (`v2` newest, `(v0, v1)` refinement edge).
    pub fn new(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary: Vec<BoundaryFacet>,
    ) -> Result<Triangulation, MeshError> {
        let nv = vertices.len();
        for (i, p) in vertices.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(MeshError::Format {
                    line: 0,
                    msg: format!("vertex {i} has non-finite coordinates"),
                });
            }
        }
        for (t, tri) in elements.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::InvalidVertex(v));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex(t));
            }
            if signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) <= 0.0 {
                return Err(MeshError::Degenerate(t));
            }
        }
        for f in &boundary {
            for &v in &f.vertices {
                if v >= nv {
                    return Err(MeshError::InvalidVertex(v));
                }
            }
        }
        let roots: Vec<[Point; 3]> = elements
            .iter()
            .map(|t| [vertices[t[0]], vertices[t[1]], vertices[t[2]]])
            .collect();
        let elements = elements
            .into_iter()
            .enumerate()
            .map(|(i, vertices)| Element {
                vertices,
                key: ElementKey { root: i as u32, path: BisectionPath::ROOT },
            })
            .collect();
        let mesh = Triangulation {
            vertex_parents: vec![None; nv],
            vertices,
            elements,
            boundary,
            roots: Arc::new(roots),
            topology: OnceLock::new(),
        };
        mesh.check_conforming()?;
        Ok(mesh)
    }

    /// Builds an initial mesh whose refinement edges are the longest edges
    /// (ties: smallest opposite-vertex id), oriented counter-clockwise.
    pub fn with_longest_edge(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryFacet>,
    ) -> Result<Triangulation, MeshError> {
        let mut ordered = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(MeshError::InvalidVertex(v));
                }
            }
            // candidate k: opposite vertex tri[k], edge (tri[k+1], tri[k+2])
            let mut best: Option<(f64, usize, usize)> = None;
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let len = dist2(vertices[a], vertices[b]);
                let opp = tri[k];
                best = match best {
                    None => Some((len, opp, k)),
                    Some((bl, bo, bk)) => {
                        if len > bl || (len == bl && opp < bo) {
                            Some((len, opp, k))
                        } else {
                            Some((bl, bo, bk))
                        }
                    }
                };
            }
            let (_, _, k) = best.expect("three candidates");
            let (mut a, mut b, c) = (tri[(k + 1) % 3], tri[(k + 2) % 3], tri[k]);
            let area = signed_area(vertices[a], vertices[b], vertices[c]);
            if area == 0.0 {
                return Err(MeshError::Degenerate(t));
            }
            if area < 0.0 {
                std::mem::swap(&mut a, &mut b);
            }
            ordered.push([a, b, c]);
        }
        Triangulation::new(vertices, ordered, boundary)
    }

    pub(crate) fn from_parts(
        vertices: Vec<Point>,
        vertex_parents: Vec<Option<[usize; 2]>>,
        elements: Vec<Element>,
        boundary: Vec<BoundaryFacet>,
        roots: Arc<Vec<[Point; 3]>>,
    ) -> Triangulation {
        Triangulation {
            vertices,
            vertex_parents,
            elements,
            boundary,
            roots,
            topology: OnceLock::new(),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    /// Endpoints of the edge whose bisection created vertex `v`.
    pub fn vertex_parents(&self, v: usize) -> Option<[usize; 2]> {
        self.vertex_parents[v]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, t: usize) -> &Element {
        &self.elements[t]
    }

    pub fn boundary(&self) -> &[BoundaryFacet] {
        &self.boundary
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Number of elements of the initial mesh this triangulation descends from.
    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn same_roots(&self, other: &Triangulation) -> bool {
        Arc::ptr_eq(&self.roots, &other.roots) || *self.roots == *other.roots
    }

    pub fn topology(&self) -> &Topology {
        self.topology.get_or_init(|| Topology::build(self))
    }

    pub fn element_points(&self, t: usize) -> [Point; 3] {
        let v = self.elements[t].vertices;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.element_points(t);
        signed_area(a, b, c)
    }

    /// Local mesh size `h_T = |T|^{1/2}`.
    pub fn element_size(&self, t: usize) -> f64 {
        self.area(t).sqrt()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|t| self.area(t)).sum()
    }

    /// Smallest interior angle (radians) over all elements.
    pub fn min_angle(&self) -> f64 {
        (0..self.num_elements())
            .map(|t| {
                let p = self.element_points(t);
                (0..3)
                    .map(|k| {
                        let a = p[k];
                        let b = p[(k + 1) % 3];
                        let c = p[(k + 2) % 3];
                        let u = [b[0] - a[0], b[1] - a[1]];
                        let w = [c[0] - a[0], c[1] - a[1]];
                        let cos = (u[0] * w[0] + u[1] * w[1])
                            / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (w[0] * w[0] + w[1] * w[1]).sqrt());
                        cos.clamp(-1.0, 1.0).acos()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Vertices lying on at least one Dirichlet facet.
    pub fn dirichlet_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.num_vertices()];
        for f in self.boundary.iter().filter(|f| f.tag == BoundaryTag::Dirichlet) {
            on[f.vertices[0]] = true;
            on[f.vertices[1]] = true;
        }
        on
    }

    /// Checks that interior edges are shared by exactly two elements and
    /// that boundary edges coincide with the boundary facets.
    pub fn check_conforming(&self) -> Result<(), MeshError> {
        let topo = Topology::try_build(self)?;
        for (e, adj) in topo.edge_elements.iter().enumerate() {
            if adj[1] == usize::MAX && topo.edge_facet[e].is_none() {
                let [a, b] = topo.edges[e];
                return Err(MeshError::NonConforming(format!(
                    "edge ({a}, {b}) has one element but is not a boundary facet"
                )));
            }
            if adj[1] != usize::MAX && topo.edge_facet[e].is_some() {
                let [a, b] = topo.edges[e];
                return Err(MeshError::NonConforming(format!(
                    "boundary facet ({a}, {b}) is an interior edge"
                )));
            }
        }
        Ok(())
    }

    pub fn is_refinement_of(&self, coarse: &Triangulation) -> bool {
        if !self.same_roots(coarse) {
            return false;
        }
        let coarse_keys: HashSet<ElementKey> = coarse.elements.iter().map(|e| e.key).collect();
        self.elements.iter().all(|e| {
            (0..=e.key.path.depth()).any(|d| {
                coarse_keys.contains(&ElementKey { root: e.key.root, path: e.key.path.truncate(d) })
            })
        })
    }

    fn sorted_coordinate_triple(&self, t: usize) -> [(u64, u64); 3] {
        let mut k = self.element_points(t).map(point_key);
        k.sort_unstable();
        k
    }

    /// Ids (in `self`) of the elements that also belong to `other`, i.e. `self ∩ other`.
    pub fn common_elements(&self, other: &Triangulation) -> Vec<usize> {
        let theirs: HashSet<[(u64, u64); 3]> =
            (0..other.num_elements()).map(|t| other.sorted_coordinate_triple(t)).collect();
        (0..self.num_elements())
            .filter(|&t| theirs.contains(&self.sorted_coordinate_triple(t)))
            .collect()
    }

    /// Refines every element once; equivalent to marking all elements.
    pub fn refine_all(&self) -> Result<Triangulation, MeshError> {
        let all: Vec<usize> = (0..self.num_elements()).collect();
        self.refine(&all)
    }
}
