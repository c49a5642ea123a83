//! Lowest-order conforming P1 space with Dirichlet constraints.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::FemError;
use crate::linalg::{CsrMatrix, LinearSolver, SolverKind};
use crate::mesh::{point_key, BoundaryTag, Point, Triangulation};
use crate::quadrature;

/// P1 space over a triangulation. Vertices on Dirichlet facets are constrained;
/// the remaining vertices are the free degrees of freedom, numbered in vertex order.
#[derive(Debug)]
pub struct FESpace {
    mesh: Arc<Triangulation>,
    dof_map: Vec<Option<usize>>,
    free: Vec<usize>,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
}

/// Stiffness matrix `∫ ∇φ_i·∇φ_j` on the free dofs; the Gram matrix of `(·,·)_H`.
#[derive(Clone, Debug)]
pub struct RieszMatrix {
    pub matrix: CsrMatrix,
}

impl RieszMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn solver(&self, kind: SolverKind, cg_tol: f64) -> Result<LinearSolver, FemError> {
        LinearSolver::new(self.matrix.clone(), kind, cg_tol)
    }
}

/// Gradients of the three barycentric coordinates of a triangle with the given area.
pub fn barycentric_gradients(p: &[Point; 3], area: f64) -> [[f64; 2]; 3] {
    let s = 1.0 / (2.0 * area);
    let g = |i: usize| {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        [(a[1] - b[1]) * s, (b[0] - a[0]) * s]
    };
    [g(0), g(1), g(2)]
}

/// Element stiffness matrix of P1 hats with exact constant gradients.
pub fn local_stiffness(p: &[Point; 3]) -> [[f64; 3]; 3] {
    let area = crate::mesh::signed_area(p[0], p[1], p[2]);
    let g = barycentric_gradients(p, area);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

impl FESpace {
    pub fn new(mesh: Arc<Triangulation>) -> Result<Arc<FESpace>, FemError> {
        if !mesh.boundary().iter().any(|f| f.tag == BoundaryTag::Dirichlet) {
            return Err(FemError::NoDirichletBoundary);
        }
        let on_d = mesh.dirichlet_vertices();
        let mut dof_map = vec![None; mesh.num_vertices()];
        let mut free = Vec::new();
        for v in 0..mesh.num_vertices() {
            if !on_d[v] {
                dof_map[v] = Some(free.len());
                free.push(v);
            }
        }
        let mut areas = Vec::with_capacity(mesh.num_elements());
        let mut grads = Vec::with_capacity(mesh.num_elements());
        for t in 0..mesh.num_elements() {
            let area = mesh.area(t);
            if area <= 0.0 {
                return Err(FemError::DegenerateElement(t));
            }
            grads.push(barycentric_gradients(&mesh.element_points(t), area));
            areas.push(area);
        }
        Ok(Arc::new(FESpace { mesh, dof_map, free, areas, grads }))
    }

    pub fn mesh(&self) -> &Arc<Triangulation> {
        &self.mesh
    }

    /// Number of free dofs.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.dof_map.len()
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.dof_map[vertex]
    }

    pub fn is_dirichlet(&self, vertex: usize) -> bool {
        self.dof_map[vertex].is_none()
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    /// Gradients of the hat functions of the vertices of element `t`, in local order.
    pub fn basis_gradients(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.grads[t]
    }

    pub fn assemble_riesz(&self) -> RieszMatrix {
        let mut trip = Vec::with_capacity(9 * self.mesh.num_elements());
        for (t, el) in self.mesh.elements().iter().enumerate() {
            let g = &self.grads[t];
            let a = self.areas[t];
            for i in 0..3 {
                let Some(di) = self.dof_map[el.vertices[i]] else { continue };
                for j in 0..3 {
                    let Some(dj) = self.dof_map[el.vertices[j]] else { continue };
                    trip.push((di, dj, a * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
                }
            }
        }
        RieszMatrix { matrix: CsrMatrix::from_triplets(self.dim(), trip) }
    }

    /// Unconstrained stiffness matrix over all vertices.
    pub fn assemble_full_stiffness(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(9 * self.mesh.num_elements());
        for (t, el) in self.mesh.elements().iter().enumerate() {
            let g = &self.grads[t];
            let a = self.areas[t];
            for i in 0..3 {
                for j in 0..3 {
                    trip.push((el.vertices[i], el.vertices[j], a * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
                }
            }
        }
        CsrMatrix::from_triplets(self.num_vertices(), trip)
    }

    /// `F(φ_i) = ∫_Ω f φ_i + ∫_{Γ_N} g φ_i` for every vertex `i` (constrained ones included).
    ///
    /// `g` receives the point and the outward unit normal.
    pub fn assemble_load(&self, f: &dyn Fn(Point) -> f64, g: &dyn Fn(Point, Point) -> f64) -> Vec<f64> {
        let mesh = &self.mesh;
        let mut load = vec![0.0; self.num_vertices()];
        for (t, el) in mesh.elements().iter().enumerate() {
            let p = mesh.element_points(t);
            let area = self.areas[t];
            let mut local = [0.0; 3];
            for (lam, w) in quadrature::triangle_rule() {
                let fx = f(quadrature::map_barycentric(&p, lam));
                for k in 0..3 {
                    local[k] += w * fx * lam[k];
                }
            }
            for k in 0..3 {
                load[el.vertices[k]] += area * local[k];
            }
        }
        for (i, facet) in mesh.boundary().iter().enumerate() {
            if facet.tag != BoundaryTag::Neumann {
                continue;
            }
            let [a, b] = facet.vertices;
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let n = self.facet_normal(i);
            load[a] += quadrature::integrate_edge(pa, pb, |x, s| g(x, n) * (1.0 - s));
            load[b] += quadrature::integrate_edge(pa, pb, |x, s| g(x, n) * s);
        }
        load
    }

    /// Outward unit normal of boundary facet `i`.
    pub fn facet_normal(&self, i: usize) -> Point {
        let mesh = &self.mesh;
        let topo = mesh.topology();
        let [a, b] = mesh.boundary()[i].vertices;
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let d = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let n = [d[1] / len, -d[0] / len];
        let t = topo.edge_elements[topo.facet_edge[i]][0];
        let c = mesh.element(t).vertices.into_iter().find(|&v| v != a && v != b).expect("third vertex");
        let pc = mesh.vertex(c);
        if (pc[0] - pa[0]) * n[0] + (pc[1] - pa[1]) * n[1] > 0.0 {
            [-n[0], -n[1]]
        } else {
            n
        }
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&v| full[v]).collect()
    }
}

/// A P1 function given by its values at all vertices.
#[derive(Clone, Debug)]
pub struct FEFunction {
    space: Arc<FESpace>,
    coefficients: Vec<f64>,
}

impl FEFunction {
    pub fn zeros(space: &Arc<FESpace>) -> FEFunction {
        FEFunction { coefficients: vec![0.0; space.num_vertices()], space: Arc::clone(space) }
    }

    pub fn from_values(space: &Arc<FESpace>, coefficients: Vec<f64>) -> Result<FEFunction, FemError> {
        if coefficients.len() != space.num_vertices() {
            return Err(FemError::SpaceMismatch);
        }
        Ok(FEFunction { space: Arc::clone(space), coefficients })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(space: &Arc<FESpace>, f: impl Fn(Point) -> f64) -> FEFunction {
        let coefficients = space.mesh().vertices().iter().map(|p| f(*p)).collect();
        FEFunction { space: Arc::clone(space), coefficients }
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    /// Values at the free dofs.
    pub fn free_values(&self) -> Vec<f64> {
        self.space.restrict(&self.coefficients)
    }

    /// Overwrites the Dirichlet entries with nodal values of `g`.
    pub fn impose_dirichlet(&mut self, g: &dyn Fn(Point) -> f64) {
        let mesh = Arc::clone(self.space.mesh());
        for v in 0..self.coefficients.len() {
            if self.space.is_dirichlet(v) {
                self.coefficients[v] = g(mesh.vertex(v));
            }
        }
    }

    /// Adds `scale * w` to the free entries, `w` indexed by dof.
    pub fn add_free(&mut self, scale: f64, w: &[f64]) {
        for (d, &v) in self.space.free_vertices().iter().enumerate() {
            self.coefficients[v] += scale * w[d];
        }
    }

    /// Constant gradient on element `t`.
    pub fn gradient(&self, t: usize) -> [f64; 2] {
        let el = self.space.mesh().element(t);
        let g = self.space.basis_gradients(t);
        let mut out = [0.0; 2];
        for (&v, gk) in el.vertices.iter().zip(g) {
            let c = self.coefficients[v];
            out[0] += c * gk[0];
            out[1] += c * gk[1];
        }
        out
    }

    /// `‖∇v‖_{L²(Ω)}`
    pub fn h_norm(&self) -> f64 {
        (0..self.space.mesh().num_elements())
            .map(|t| {
                let g = self.gradient(t);
                self.space.area(t) * (g[0] * g[0] + g[1] * g[1])
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `self - other` on the same space.
    pub fn difference(&self, other: &FEFunction) -> Result<FEFunction, FemError> {
        if !Arc::ptr_eq(&self.space, &other.space) {
            return Err(FemError::SpaceMismatch);
        }
        let coefficients = self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a - b).collect();
        Ok(FEFunction { space: Arc::clone(&self.space), coefficients })
    }

    /// `‖self − other‖_H`
    pub fn h_distance(&self, other: &FEFunction) -> Result<f64, FemError> {
        Ok(self.difference(other)?.h_norm())
    }

    /// Point evaluation inside element `t`.
    pub fn eval_in(&self, t: usize, x: Point) -> f64 {
        let mesh = self.space.mesh();
        let el = mesh.element(t);
        let p0 = mesh.vertex(el.vertices[0]);
        let g = self.gradient(t);
        self.coefficients[el.vertices[0]] + g[0] * (x[0] - p0[0]) + g[1] * (x[1] - p0[1])
    }

    /// The same function represented on a refinement of its mesh.
    ///
    /// Vertices shared with the coarse mesh keep their values; bisection
    /// midpoints get the mean of their parent edge endpoints.
    pub fn prolongate(&self, fine: &Arc<FESpace>) -> Result<FEFunction, FemError> {
        let coarse_mesh = self.space.mesh();
        let fine_mesh = fine.mesh();
        if !fine_mesh.is_refinement_of(coarse_mesh) {
            return Err(FemError::NotNested);
        }
        let lookup: HashMap<(u64, u64), usize> =
            coarse_mesh.vertices().iter().enumerate().map(|(i, p)| (point_key(*p), i)).collect();
        let mut values = vec![0.0; fine_mesh.num_vertices()];
        for v in 0..fine_mesh.num_vertices() {
            values[v] = match lookup.get(&point_key(fine_mesh.vertex(v))) {
                Some(&c) => self.coefficients[c],
                None => match fine_mesh.vertex_parents(v) {
                    Some([a, b]) if a < v && b < v => 0.5 * (values[a] + values[b]),
                    _ => return Err(FemError::NotNested),
                },
            };
        }
        Ok(FEFunction { space: Arc::clone(fine), coefficients: values })
    }
}
