//! Singular solution `u⋆ = r^β cos(βφ)` on the Z-shape and its manufactured data.

use std::sync::Arc;

use rayon::prelude::*;

use crate::fe_space::FEFunction;
use crate::mesh::Point;
use crate::nonlinearity::{ArctanMu, KnownSolutionMu, Nonlinearity};
use crate::operator::{FluxField, MonotoneProblem, ScalarField};
use crate::quadrature;

pub const BETA: f64 = 4.0 / 7.0;

/// Polar coordinates with `φ ∈ [0, 2π)`, measured counter-clockwise from the positive x-axis.
pub fn polar(p: Point) -> (f64, f64) {
    let r = p[0].hypot(p[1]);
    let mut phi = p[1].atan2(p[0]);
    if phi < 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    (r, phi)
}

pub fn exact_value(p: Point) -> f64 {
    let (r, phi) = polar(p);
    r.powf(BETA) * (BETA * phi).cos()
}

/// `∇u⋆ = β r^{β−1} (cos((β−1)φ), −sin((β−1)φ))`; `None` at the origin where it is unbounded.
pub fn exact_gradient(p: Point) -> Option<Point> {
    let (r, phi) = polar(p);
    if r == 0.0 {
        return None;
    }
    let s = BETA * r.powf(BETA - 1.0);
    let a = (BETA - 1.0) * phi;
    Some([s * a.cos(), -s * a.sin()])
}

/// Value and gradient of `u⋆`.
pub fn exact_solution_known(p: Point) -> (f64, Option<Point>) {
    (exact_value(p), exact_gradient(p))
}

/// `f = −div(μ(x, |∇u⋆|²)∇u⋆)` and `g = μ(x, |∇u⋆|²) ∂_n u⋆` for the singular solution.
///
/// `u⋆` is harmonic and `|∇u⋆|² = β² r^{2β−2}` depends on `r` only, so
/// `f = −∂_tμ · (d/dr |∇u⋆|²) · ∂_r u⋆ − ∇_xμ·∇u⋆`.
pub fn manufactured_data(nl: Arc<dyn Nonlinearity>) -> (ScalarField, FluxField) {
    let nl_f = Arc::clone(&nl);
    let f: ScalarField = Arc::new(move |x: Point| {
        let (r, phi) = polar(x);
        if r == 0.0 {
            return 0.0;
        }
        let t = BETA * BETA * r.powf(2.0 * BETA - 2.0);
        let dt_dr = BETA * BETA * (2.0 * BETA - 2.0) * r.powf(2.0 * BETA - 3.0);
        let du_dr = BETA * r.powf(BETA - 1.0) * (BETA * phi).cos();
        let mut val = -nl_f.dmu_dt(x, t) * dt_dr * du_dr;
        if nl_f.depends_on_x() {
            let gx = nl_f.grad_x(x, t);
            let gu = exact_gradient(x).expect("r > 0");
            val -= gx[0] * gu[0] + gx[1] * gu[1];
        }
        val
    });
    let g: FluxField = Arc::new(move |x: Point, n: Point| match exact_gradient(x) {
        Some(gu) => {
            let t = gu[0] * gu[0] + gu[1] * gu[1];
            nl.mu(x, t) * (gu[0] * n[0] + gu[1] * n[1])
        }
        None => 0.0,
    });
    (f, g)
}

/// `μ(t) = 2 + 1/√(1+t)` with data manufactured from `u⋆` and Dirichlet trace `u⋆`.
pub fn known_problem() -> MonotoneProblem {
    let nl: Arc<dyn Nonlinearity> = Arc::new(KnownSolutionMu);
    let (f, g) = manufactured_data(Arc::clone(&nl));
    MonotoneProblem::new(nl, f, g, Arc::new(exact_value))
}

/// `μ(t) = 1 + arctan t`, `f ≡ 1`, homogeneous Dirichlet data.
pub fn arctan_problem() -> MonotoneProblem {
    MonotoneProblem::with_constant_source(Arc::new(ArctanMu), 1.0)
}

/// `‖∇(u⋆ − u)‖_{L²(Ω)}`; elements touching the origin use a 3-level composite rule.
pub fn h1_error_known(u: &FEFunction) -> f64 {
    h1_error(u, &exact_gradient)
}

/// `‖∇w − ∇u‖_{L²(Ω)}` for an exact gradient `∇w` that may be singular at the origin.
pub fn h1_error(u: &FEFunction, exact_grad: &(dyn Fn(Point) -> Option<Point> + Sync)) -> f64 {
    let space = u.space();
    let mesh = space.mesh();
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|t| {
            let p = mesh.element_points(t);
            let gu = u.gradient(t);
            let mut integrand = |x: Point| {
                let g = exact_grad(x).unwrap_or([0.0, 0.0]);
                (g[0] - gu[0]).powi(2) + (g[1] - gu[1]).powi(2)
            };
            let at_origin = p.iter().any(|v| v[0] == 0.0 && v[1] == 0.0);
            let area = space.area(t);
            if at_origin {
                quadrature::integrate_triangle_composite(&p, area, 3, &mut integrand)
            } else {
                quadrature::integrate_triangle(&p, area, |x, _| integrand(x))
            }
        })
        .sum::<f64>()
        .sqrt()
}
