//! Residual error indicators and Dörfler marking.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::EstimatorError;
use crate::fe_space::FEFunction;
use crate::mesh::{BoundaryTag, Point, Triangulation};
use crate::operator::MonotoneProblem;
use crate::quadrature;

/// Squared refinement indicators `η(T, v)²` of one mesh.
#[derive(Clone, Debug)]
pub struct IndicatorField {
    pub mesh: Arc<Triangulation>,
    pub eta_sq: Vec<f64>,
    pub total_sq: f64,
}

impl IndicatorField {
    pub fn new(mesh: Arc<Triangulation>, eta_sq: Vec<f64>) -> IndicatorField {
        let total_sq = eta_sq.iter().sum();
        IndicatorField { mesh, eta_sq, total_sq }
    }

    /// `η(v) = (Σ_T η(T, v)²)^{1/2}`
    pub fn total(&self) -> f64 {
        self.total_sq.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkedSet {
    /// Marked element ids, largest indicator first.
    pub elements: Vec<usize>,
    pub theta: f64,
}

impl MarkedSet {
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }
}

/// Residual indicators of `v`:
/// `h_T²‖f + div(μ∇v)‖²_T + h_T‖[μ∂_n v]‖²_{∂T∩Ω} + h_T‖g − μ∂_n v‖²_{∂T∩Γ_N}`, `h_T = |T|^{1/2}`.
///
/// Each interior jump enters the indicators of both adjacent elements.
pub fn compute_indicators(problem: &MonotoneProblem, v: &FEFunction) -> IndicatorField {
    let space = v.space();
    let mesh = space.mesh();
    let topo = mesh.topology();
    let nl = &*problem.nonlinearity;
    let x_dep = nl.depends_on_x();

    let grads: Vec<[f64; 2]> = (0..mesh.num_elements()).into_par_iter().map(|t| v.gradient(t)).collect();
    let mu_mean: Vec<f64> =
        (0..mesh.num_elements()).into_par_iter().map(|t| problem.element_mu(space, t, grads[t])).collect();
    let flux = |t: usize, x: Point| -> [f64; 2] {
        let g = grads[t];
        let mu = if x_dep { nl.mu(x, g[0] * g[0] + g[1] * g[1]) } else { mu_mean[t] };
        [mu * g[0], mu * g[1]]
    };

    let mut eta_sq: Vec<f64> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|t| {
            let p = mesh.element_points(t);
            let area = space.area(t);
            let g = grads[t];
            let s = g[0] * g[0] + g[1] * g[1];
            let vol = quadrature::integrate_triangle(&p, area, |x, _| {
                let mut r = (problem.f)(x);
                if x_dep {
                    let gx = nl.grad_x(x, s);
                    r += gx[0] * g[0] + gx[1] * g[1];
                }
                r * r
            });
            area * vol
        })
        .collect();

    // ∫_E (jump or Neumann residual)² per edge
    let edge_sq: Vec<f64> = (0..topo.num_edges())
        .into_par_iter()
        .map(|e| {
            let [a, b] = topo.edges[e];
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let [t1, t2] = topo.edge_elements[e];
            if t2 != usize::MAX {
                let d = [pb[0] - pa[0], pb[1] - pa[1]];
                let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let n = [d[1] / len, -d[0] / len];
                if x_dep {
                    quadrature::integrate_edge(pa, pb, |x, _| {
                        let (s1, s2) = (flux(t1, x), flux(t2, x));
                        let j = (s1[0] - s2[0]) * n[0] + (s1[1] - s2[1]) * n[1];
                        j * j
                    })
                } else {
                    let (s1, s2) = (flux(t1, pa), flux(t2, pa));
                    let j = (s1[0] - s2[0]) * n[0] + (s1[1] - s2[1]) * n[1];
                    j * j * len
                }
            } else {
                match topo.edge_facet[e] {
                    Some(f) if mesh.boundary()[f].tag == BoundaryTag::Neumann => {
                        let n = space.facet_normal(f);
                        quadrature::integrate_edge(pa, pb, |x, _| {
                            let s = flux(t1, x);
                            let r = (problem.g)(x, n) - (s[0] * n[0] + s[1] * n[1]);
                            r * r
                        })
                    }
                    _ => 0.0,
                }
            }
        })
        .collect();

    for (e, &val) in edge_sq.iter().enumerate() {
        if val == 0.0 {
            continue;
        }
        for &t in &topo.edge_elements[e] {
            if t != usize::MAX {
                eta_sq[t] += mesh.element_size(t) * val;
            }
        }
    }
    IndicatorField::new(Arc::clone(mesh), eta_sq)
}

/// Element ids sorted by indicator, largest first, ties by ascending id.
fn sorted_ids(eta_sq: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..eta_sq.len()).collect();
    ids.sort_by(|&a, &b| eta_sq[b].total_cmp(&eta_sq[a]).then(a.cmp(&b)));
    ids
}

/// Smallest set `M` with `θ² η² ≤ Σ_{T∈M} η(T)²`.
///
/// Returns the empty set when every indicator vanishes. For `θ = 1` all
/// elements with a nonzero indicator are marked.
pub fn dorfler_mark(ind: &IndicatorField, theta: f64) -> Result<MarkedSet, EstimatorError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(EstimatorError::InvalidTheta(theta));
    }
    let ids = sorted_ids(&ind.eta_sq);
    let total: f64 = ids.iter().map(|&t| ind.eta_sq[t]).sum();
    if total == 0.0 {
        return Ok(MarkedSet { elements: Vec::new(), theta });
    }
    if theta >= 1.0 {
        let elements = ids.into_iter().filter(|&t| ind.eta_sq[t] > 0.0).collect();
        return Ok(MarkedSet { elements, theta });
    }
    let target = theta * theta * total;
    let mut acc = 0.0;
    let mut elements = Vec::new();
    for t in ids {
        elements.push(t);
        acc += ind.eta_sq[t];
        if acc >= target {
            break;
        }
    }
    Ok(MarkedSet { elements, theta })
}

/// `(Σ_{T∈subset} η(T)²)^{1/2}`
pub fn restricted_estimator(ind: &IndicatorField, subset: &[usize]) -> Result<f64, EstimatorError> {
    let mut s = 0.0;
    for &t in subset {
        s += ind.eta_sq.get(t).ok_or(EstimatorError::InvalidElement(t))?;
    }
    Ok(s.sqrt())
}
