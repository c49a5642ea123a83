//! The strongly monotone operator `A`, load `F` and energy `E = P − F`.

use std::fmt;
use std::sync::Arc;

use crate::error::SolverError;
use crate::fe_space::{FEFunction, FESpace};
use crate::mesh::Point;
use crate::nonlinearity::Nonlinearity;
use crate::quadrature;

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
/// Neumann flux `g(x, n)` given the point and the outward unit normal.
pub type FluxField = Arc<dyn Fn(Point, Point) -> f64 + Send + Sync>;

/// `⟨Aw, v⟩ = ∫ μ(x,|∇w|²) ∇w·∇v`, `F(v) = ∫ f v + ∫_{Γ_N} g v`, with Dirichlet data `u_D`.
#[derive(Clone)]
pub struct MonotoneProblem {
    pub nonlinearity: Arc<dyn Nonlinearity>,
    pub f: ScalarField,
    pub g: FluxField,
    pub dirichlet: ScalarField,
    alpha: f64,
    lip: f64,
}

impl fmt::Debug for MonotoneProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneProblem")
            .field("nonlinearity", &self.nonlinearity.name())
            .field("alpha", &self.alpha)
            .field("lip", &self.lip)
            .finish()
    }
}

/// Element averages of `μ`, `∂_t μ` and `∫₀ᵗ μ` at `t = |∇v|²`.
#[derive(Clone, Copy, Debug)]
pub struct ElementCoefficients {
    pub mu: f64,
    pub dmu: f64,
    pub primitive: f64,
}

impl MonotoneProblem {
    /// Monotonicity and Lipschitz constants are `α = γ̃₁`, `L = γ̃₂`.
    pub fn new(nonlinearity: Arc<dyn Nonlinearity>, f: ScalarField, g: FluxField, dirichlet: ScalarField) -> Self {
        let b = nonlinearity.bounds();
        MonotoneProblem { nonlinearity, f, g, dirichlet, alpha: b.gamma1_tilde, lip: b.gamma2_tilde }
    }

    /// Homogeneous Dirichlet data, no Neumann flux, constant source.
    pub fn with_constant_source(nonlinearity: Arc<dyn Nonlinearity>, source: f64) -> Self {
        MonotoneProblem::new(nonlinearity, Arc::new(move |_| source), Arc::new(|_, _| 0.0), Arc::new(|_| 0.0))
    }

    /// Overrides `α` and `L`.
    pub fn with_constants(mut self, alpha: f64, lip: f64) -> Result<Self, SolverError> {
        if !(alpha > 0.0 && alpha <= lip) {
            return Err(SolverError::Config(format!("need 0 < alpha <= L, got alpha={alpha}, L={lip}")));
        }
        self.alpha = alpha;
        self.lip = lip;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    /// Contraction constant `q = (1 − α²/L²)^{1/2}` of the Picard map.
    pub fn q(&self) -> f64 {
        (1.0 - (self.alpha / self.lip).powi(2)).max(0.0).sqrt()
    }

    /// Picard step size `α/L²`.
    pub fn step_factor(&self) -> f64 {
        self.alpha / (self.lip * self.lip)
    }

    /// Zero on the free dofs, nodal interpolant of `u_D` on the Dirichlet vertices.
    pub fn initial_function(&self, space: &Arc<FESpace>) -> FEFunction {
        let mut u = FEFunction::zeros(space);
        u.impose_dirichlet(&*self.dirichlet);
        u
    }

    /// Load `F(φ_i)` for every vertex.
    pub fn load(&self, space: &FESpace) -> Vec<f64> {
        space.assemble_load(&*self.f, &*self.g)
    }

    pub fn element_coefficients(&self, space: &FESpace, t: usize, grad: [f64; 2]) -> ElementCoefficients {
        let s = grad[0] * grad[0] + grad[1] * grad[1];
        let nl = &*self.nonlinearity;
        let mesh = space.mesh();
        if !nl.depends_on_x() {
            let [a, b, c] = mesh.element_points(t);
            let x = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            return ElementCoefficients { mu: nl.mu(x, s), dmu: nl.dmu_dt(x, s), primitive: nl.primitive(x, s) };
        }
        let p = mesh.element_points(t);
        let mut out = ElementCoefficients { mu: 0.0, dmu: 0.0, primitive: 0.0 };
        for (lam, w) in quadrature::triangle_rule() {
            let x = quadrature::map_barycentric(&p, lam);
            out.mu += w * nl.mu(x, s);
            out.dmu += w * nl.dmu_dt(x, s);
            out.primitive += w * nl.primitive(x, s);
        }
        out
    }

    /// Element mean of `μ(x, |∇v|²)`.
    pub fn element_mu(&self, space: &FESpace, t: usize, grad: [f64; 2]) -> f64 {
        let s = grad[0] * grad[0] + grad[1] * grad[1];
        let nl = &*self.nonlinearity;
        let p = space.mesh().element_points(t);
        if !nl.depends_on_x() {
            return nl.mu(p[0], s);
        }
        quadrature::triangle_rule()
            .iter()
            .map(|(lam, w)| w * nl.mu(quadrature::map_barycentric(&p, *lam), s))
            .sum()
    }

    /// `⟨Av, φ_i⟩` for every vertex `i`.
    pub fn apply_operator_full(&self, v: &FEFunction) -> Vec<f64> {
        let space = v.space();
        let mesh = space.mesh();
        let mut out = vec![0.0; space.num_vertices()];
        for (t, el) in mesh.elements().iter().enumerate() {
            let g = v.gradient(t);
            let mu = self.element_mu(space, t, g);
            let a = space.area(t);
            let gb = space.basis_gradients(t);
            for k in 0..3 {
                out[el.vertices[k]] += a * mu * (g[0] * gb[k][0] + g[1] * gb[k][1]);
            }
        }
        out
    }

    /// `⟨Av, φ_i⟩` over the free dofs.
    pub fn apply_operator(&self, v: &FEFunction) -> Vec<f64> {
        v.space().restrict(&self.apply_operator_full(v))
    }

    /// `⟨Av − F, φ_i⟩` over the free dofs, with a precomputed vertex load.
    pub fn residual_with_load(&self, v: &FEFunction, load: &[f64]) -> Vec<f64> {
        let av = self.apply_operator_full(v);
        v.space().free_vertices().iter().map(|&i| av[i] - load[i]).collect()
    }

    pub fn residual_vector(&self, v: &FEFunction) -> Vec<f64> {
        let load = self.load(v.space());
        self.residual_with_load(v, &load)
    }

    /// `P(v) = ½ ∫ ∫₀^{|∇v|²} μ(x, ζ) dζ dx`
    pub fn potential(&self, v: &FEFunction) -> f64 {
        let space = v.space();
        (0..space.mesh().num_elements())
            .map(|t| {
                let g = v.gradient(t);
                0.5 * space.area(t) * self.element_coefficients(space, t, g).primitive
            })
            .sum()
    }

    /// `E(v) = P(v) − F(v)` with a precomputed vertex load.
    pub fn energy_with_load(&self, v: &FEFunction, load: &[f64]) -> f64 {
        let fv: f64 = v.coefficients().iter().zip(load).map(|(c, l)| c * l).sum();
        self.potential(v) - fv
    }

    pub fn energy(&self, v: &FEFunction) -> f64 {
        let load = self.load(v.space());
        self.energy_with_load(v, &load)
    }
}
