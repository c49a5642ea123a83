//! Discrete Zarantonello (Picard) iteration `u ↦ u − (α/L²) I⁻¹(Au − F)` and a Newton reference solver.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FemError, SolverError};
use crate::fe_space::{FEFunction, FESpace};
use crate::linalg::{dot, CsrMatrix, LinearSolver, SolverKind};
use crate::operator::MonotoneProblem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    /// Stopping parameter: stop once `‖uⁿ − uⁿ⁻¹‖_H ≤ λ η(uⁿ)`.
    pub lambda: f64,
    pub max_iter: usize,
    /// Relative residual of the Riesz solve when CG is used.
    pub linear_tol: f64,
    pub solver: SolverKind,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { lambda: 0.1, max_iter: 10_000, linear_tol: 1e-12, solver: SolverKind::Direct }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(SolverError::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.max_iter == 0 {
            return Err(SolverError::Config("max_iter must be at least 1".into()));
        }
        if self.linear_tol.is_nan() || self.linear_tol <= 0.0 {
            return Err(SolverError::Config(format!("linear_tol must be positive, got {}", self.linear_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardStep {
    pub n: usize,
    /// `‖uⁿ − uⁿ⁻¹‖_H`
    pub increment: f64,
    pub estimator: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardTrace {
    pub steps: Vec<PicardStep>,
}

impl PicardTrace {
    /// `#Pic`
    pub fn count(&self) -> usize {
        self.steps.len()
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.increment)
    }
}

/// Load vector and factorized Riesz matrix of one discrete space, reused by every Picard step.
#[derive(Debug)]
pub struct DiscreteSystem {
    problem: MonotoneProblem,
    space: Arc<FESpace>,
    load: Vec<f64>,
    riesz: LinearSolver,
}

impl DiscreteSystem {
    pub fn new(
        problem: &MonotoneProblem,
        space: &Arc<FESpace>,
        solver: SolverKind,
        linear_tol: f64,
    ) -> Result<DiscreteSystem, FemError> {
        let riesz = space.assemble_riesz().solver(solver, linear_tol)?;
        Ok(DiscreteSystem { problem: problem.clone(), space: Arc::clone(space), load: problem.load(space), riesz })
    }

    pub fn problem(&self) -> &MonotoneProblem {
        &self.problem
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn riesz_matrix(&self) -> &CsrMatrix {
        self.riesz.matrix()
    }

    /// `⟨Av − F, φ_i⟩` over the free dofs.
    pub fn residual(&self, v: &FEFunction) -> Vec<f64> {
        self.problem.residual_with_load(v, &self.load)
    }

    pub fn energy(&self, v: &FEFunction) -> f64 {
        self.problem.energy_with_load(v, &self.load)
    }

    /// Riesz representative `w` of a dual vector `r` and its norm `‖w‖_H`.
    pub fn riesz_lift(&self, r: &[f64]) -> Result<(Vec<f64>, f64), FemError> {
        let w = self.riesz.solve(r)?;
        let norm = self.riesz.matrix().quadratic_form(&w).max(0.0).sqrt();
        Ok((w, norm))
    }

    /// `‖Av − F‖_{H*}`
    pub fn residual_norm(&self, v: &FEFunction) -> Result<f64, FemError> {
        Ok(self.riesz_lift(&self.residual(v))?.1)
    }

    /// One Picard step; returns `uⁿ` and `‖uⁿ − uⁿ⁻¹‖_H`.
    pub fn picard_step(&self, u_prev: &FEFunction) -> Result<(FEFunction, f64), FemError> {
        if !Arc::ptr_eq(u_prev.space(), &self.space) {
            return Err(FemError::SpaceMismatch);
        }
        let (w, norm) = self.riesz_lift(&self.residual(u_prev))?;
        let c = self.problem.step_factor();
        let mut u = u_prev.clone();
        u.add_free(-c, &w);
        Ok((u, c * norm))
    }
}

/// One Picard step on `space`, assembling the system from scratch.
pub fn picard_step(problem: &MonotoneProblem, space: &Arc<FESpace>, u_prev: &FEFunction) -> Result<FEFunction, FemError> {
    Ok(DiscreteSystem::new(problem, space, SolverKind::Direct, 1e-12)?.picard_step(u_prev)?.0)
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub solution: FEFunction,
    pub trace: PicardTrace,
    /// `η(uⁿ)` at the accepted iterate.
    pub estimator: f64,
    /// The estimator vanished: the iterate is the exact solution.
    pub lucky_breakdown: bool,
}

/// Picard steps from `u0` until `‖uⁿ − uⁿ⁻¹‖_H ≤ λ η(uⁿ)` with `n ≥ 1`.
pub fn iterate_until_stop(
    system: &DiscreteSystem,
    u0: &FEFunction,
    estimator: &mut dyn FnMut(&FEFunction) -> Result<f64, SolverError>,
    config: &PicardConfig,
) -> Result<PicardOutcome, SolverError> {
    config.validate()?;
    let mut trace = PicardTrace::default();
    let mut u = u0.clone();
    for n in 1..=config.max_iter {
        let (next, increment) = system.picard_step(&u)?;
        u = next;
        let eta = estimator(&u)?;
        trace.steps.push(PicardStep { n, increment, estimator: Some(eta) });
        if increment <= config.lambda * eta || (eta == 0.0 && increment == 0.0) {
            return Ok(PicardOutcome { solution: u, trace, estimator: eta, lucky_breakdown: eta == 0.0 });
        }
    }
    Err(SolverError::NonTermination(Box::new(trace)))
}

/// `q/(1−q) · ‖uⁿ − uⁿ⁻¹‖_H`, a bound for `‖u⋆ − uⁿ‖_H`.
pub fn apriori_bound(problem: &MonotoneProblem, increment_norm: f64, n: usize) -> f64 {
    debug_assert!(n >= 1);
    let q = problem.q();
    q / (1.0 - q) * increment_norm
}

/// `(α/L) · ‖u⁰ − u⋆‖_H`, a bound for the first Picard increment.
pub fn first_step_bound(problem: &MonotoneProblem, u_star_norm_gap: f64) -> f64 {
    problem.alpha() / problem.lip() * u_star_norm_gap
}

/// Jacobian `∫ μ ∇δ·∇v + 2 ∂_tμ (∇u·∇δ)(∇u·∇v)` of the residual at `u`, on the free dofs.
pub fn assemble_jacobian(problem: &MonotoneProblem, u: &FEFunction) -> CsrMatrix {
    let space = u.space();
    let mesh = space.mesh();
    let mut trip = Vec::with_capacity(9 * mesh.num_elements());
    for (t, el) in mesh.elements().iter().enumerate() {
        let g = u.gradient(t);
        let c = problem.element_coefficients(space, t, g);
        let a = space.area(t);
        let gb = space.basis_gradients(t);
        let proj = gb.map(|b| g[0] * b[0] + g[1] * b[1]);
        for i in 0..3 {
            let Some(di) = space.dof(el.vertices[i]) else { continue };
            for j in 0..3 {
                let Some(dj) = space.dof(el.vertices[j]) else { continue };
                let lap = gb[i][0] * gb[j][0] + gb[i][1] * gb[j][1];
                trip.push((di, dj, a * (c.mu * lap + 2.0 * c.dmu * proj[i] * proj[j])));
            }
        }
    }
    CsrMatrix::from_triplets(space.dim(), trip)
}

/// Discrete Galerkin solution `u⋆` with `‖Au⋆ − F‖_{H*} ≤ tol`.
///
/// Damped Newton with Armijo backtracking on the energy; a long Picard run
/// takes over if Newton stagnates.
pub fn newton_reference(system: &DiscreteSystem, tol: f64) -> Result<FEFunction, SolverError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(SolverError::Config(format!("tolerance must be positive, got {tol}")));
    }
    let problem = system.problem();
    let mut u = problem.initial_function(system.space());
    let mut res = system.residual(&u);
    let mut res_norm = system.riesz_lift(&res)?.1;
    let mut energy = system.energy(&u);
    for _ in 0..60 {
        if res_norm <= tol {
            return Ok(u);
        }
        let jac = assemble_jacobian(problem, &u);
        let delta = LinearSolver::new(jac, SolverKind::Direct, 1e-14)?.solve(&res)?;
        // Newton direction is −delta; slope = −⟨r, δ⟩ < 0
        let slope = -dot(&res, &delta);
        let mut s = 1.0;
        let accepted = loop {
            let mut trial = u.clone();
            trial.add_free(-s, &delta);
            let e = system.energy(&trial);
            let roundoff = 1e-14 * energy.abs().max(1.0);
            if e <= energy + 1e-4 * s * slope + roundoff {
                break Some((trial, e));
            }
            s *= 0.5;
            if s < 1e-10 {
                break None;
            }
        };
        let Some((trial, e)) = accepted else { break };
        let trial_res = system.residual(&trial);
        let trial_norm = system.riesz_lift(&trial_res)?.1;
        if s == 1.0 && trial_norm >= res_norm && res_norm < 1e3 * tol {
            // roundoff floor reached just above tol
            break;
        }
        u = trial;
        res = trial_res;
        res_norm = trial_norm;
        energy = e;
    }
    if res_norm <= tol {
        return Ok(u);
    }
    picard_fallback(system, u, tol)
}

fn picard_fallback(system: &DiscreteSystem, mut u: FEFunction, tol: f64) -> Result<FEFunction, SolverError> {
    let mut best = f64::INFINITY;
    for _ in 0..100_000 {
        let r = system.residual_norm(&u)?;
        if r <= tol {
            return Ok(u);
        }
        best = best.min(r);
        u = system.picard_step(&u)?.0;
    }
    Err(SolverError::NewtonFailed { tol, residual: best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{ConstantMu, KnownSolutionMu};
    use approx::assert_relative_eq;

    fn square_space(levels: usize) -> Arc<FESpace> {
        let mut m = crate::bench::unit_square_dirichlet();
        for _ in 0..levels {
            m = m.refine_all().unwrap();
        }
        FESpace::new(Arc::new(m)).unwrap()
    }

    fn known(source: f64) -> MonotoneProblem {
        MonotoneProblem::with_constant_source(Arc::new(KnownSolutionMu), source)
    }

    #[test]
    fn apriori_bound_arithmetic() {
        let p = known(1.0);
        assert_eq!(apriori_bound(&p, 0.0, 1), 0.0);
        let q = 5f64.sqrt() / 3.0;
        assert_relative_eq!(apriori_bound(&p, 1.0, 3), q / (1.0 - q), max_relative = 1e-15);
        assert_relative_eq!(apriori_bound(&p, 1.0, 3), 2.927_050_983_124_842, max_relative = 1e-12);
    }

    #[test]
    fn first_step_bound_arithmetic() {
        let p = known(1.0);
        assert_eq!(first_step_bound(&p, 0.0), 0.0);
        assert_relative_eq!(first_step_bound(&p, 1.0), 2.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(PicardConfig { lambda: 0.0, ..Default::default() }.validate().is_err());
        assert!(PicardConfig { max_iter: 0, ..Default::default() }.validate().is_err());
        assert!(PicardConfig::default().validate().is_ok());
    }

    #[test]
    fn q_zero_step_is_exact_solve() {
        let space = square_space(3);
        let p = MonotoneProblem::with_constant_source(Arc::new(ConstantMu(1.0)), 1.0);
        assert_eq!(p.q(), 0.0);
        let sys = DiscreteSystem::new(&p, &space, SolverKind::Direct, 1e-12).unwrap();
        let u0 = p.initial_function(&space);
        let (u1, _) = sys.picard_step(&u0).unwrap();
        assert!(sys.residual_norm(&u1).unwrap() < 1e-13);
    }

    #[test]
    fn newton_linear_problem_single_step() {
        let space = square_space(3);
        let p = MonotoneProblem::with_constant_source(Arc::new(ConstantMu(1.0)), 1.0);
        let sys = DiscreteSystem::new(&p, &space, SolverKind::Direct, 1e-12).unwrap();
        let u = newton_reference(&sys, 1e-12).unwrap();
        assert!(sys.residual_norm(&u).unwrap() <= 1e-12);
    }

    #[test]
    fn newton_agrees_with_long_picard_run() {
        let space = square_space(7);
        assert!(space.dim() >= 100, "{}", space.dim());
        let p = known(1.0);
        let sys = DiscreteSystem::new(&p, &space, SolverKind::Direct, 1e-12).unwrap();
        let u_newton = newton_reference(&sys, 1e-12).unwrap();
        assert!(sys.residual_norm(&u_newton).unwrap() <= 1e-12);
        let mut u = p.initial_function(&space);
        for _ in 0..500 {
            u = sys.picard_step(&u).unwrap().0;
        }
        assert!(u.h_distance(&u_newton).unwrap() < 1e-9);
    }

    #[test]
    fn fixed_point_stops_after_one_step() {
        let space = square_space(2);
        let p = known(1.0);
        let sys = DiscreteSystem::new(&p, &space, SolverKind::Direct, 1e-12).unwrap();
        let u_star = newton_reference(&sys, 1e-13).unwrap();
        let cfg = PicardConfig { lambda: 1e-3, ..Default::default() };
        let out = iterate_until_stop(&sys, &u_star, &mut |_| Ok(1.0), &cfg).unwrap();
        assert_eq!(out.trace.count(), 1);
        assert!(out.trace.steps[0].increment < 1e-12);
    }

    #[test]
    fn huge_lambda_stops_after_one_step() {
        let space = square_space(2);
        let p = known(1.0);
        let sys = DiscreteSystem::new(&p, &space, SolverKind::Direct, 1e-12).unwrap();
        let cfg = PicardConfig { lambda: 1e6, ..Default::default() };
        let out = iterate_until_stop(&sys, &p.initial_function(&space), &mut |_| Ok(0.5), &cfg).unwrap();
        assert_eq!(out.trace.count(), 1);
        assert!(!out.lucky_breakdown);
    }

    #[test]
    fn max_iter_reports_nontermination_with_trace() {
        let space = square_space(2);
        let p = known(1.0);
        let sys = DiscreteSystem::new(&p, &space, SolverKind::Direct, 1e-12).unwrap();
        let cfg = PicardConfig { lambda: 1e-30, max_iter: 3, ..Default::default() };
        match iterate_until_stop(&sys, &p.initial_function(&space), &mut |_| Ok(1.0), &cfg) {
            Err(SolverError::NonTermination(trace)) => assert_eq!(trace.count(), 3),
            other => panic!("expected non-termination, got {other:?}"),
        }
    }

    #[test]
    fn zero_data_gives_lucky_breakdown() {
        let space = square_space(1);
        let p = known(0.0);
        let sys = DiscreteSystem::new(&p, &space, SolverKind::Direct, 1e-12).unwrap();
        let cfg = PicardConfig::default();
        let out = iterate_until_stop(&sys, &p.initial_function(&space), &mut |_| Ok(0.0), &cfg).unwrap();
        assert!(out.lucky_breakdown);
        assert_eq!(out.trace.count(), 1);
    }

    #[test]
    fn increments_contract_by_q() {
        let space = square_space(3);
        let p = known(1.0);
        let sys = DiscreteSystem::new(&p, &space, SolverKind::Direct, 1e-12).unwrap();
        let mut u = p.initial_function(&space);
        let mut prev = f64::INFINITY;
        for _ in 0..30 {
            let (next, inc) = sys.picard_step(&u).unwrap();
            if inc < 1e-12 {
                break;
            }
            assert!(inc <= p.q() * prev + 1e-12);
            prev = inc;
            u = next;
        }
    }

    #[test]
    fn picard_step_keeps_dirichlet_values() {
        let space = square_space(2);
        let p = MonotoneProblem::new(
            Arc::new(KnownSolutionMu),
            Arc::new(|_| 1.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|x| x[0] + 2.0 * x[1]),
        );
        let u0 = p.initial_function(&space);
        let u1 = picard_step(&p, &space, &u0).unwrap();
        for v in 0..space.num_vertices() {
            if space.is_dirichlet(v) {
                assert_eq!(u0.coefficients()[v], u1.coefficients()[v]);
            }
        }
    }
}
