//! Adaptive loops: solve with Picard, estimate, mark, refine.
//!
//! [`run_adaptive`] iterates per mesh level; [`run_full_sequence`] performs a
//! single Picard step per outer index and only refines when the stopping
//! criterion holds. Both visit the same meshes and iterates.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DriverError, SolverError};
use crate::estimator::{compute_indicators, dorfler_mark, IndicatorField};
use crate::fe_space::{FEFunction, FESpace};
use crate::mesh::Triangulation;
use crate::operator::MonotoneProblem;
use crate::picard::{iterate_until_stop, DiscreteSystem, PicardConfig, PicardTrace};

pub type ErrorFn<'a> = &'a (dyn Fn(&FEFunction) -> f64 + Sync);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverConfig {
    pub theta: f64,
    pub lambda: f64,
    /// Start each level from the previous solution instead of zero.
    pub nested: bool,
    /// Stop once a level with at least this many free dofs has been solved.
    pub max_dofs: usize,
    pub max_elements: Option<usize>,
    pub max_levels: Option<usize>,
    /// `lambda` here is ignored in favor of [`DriverConfig::lambda`].
    pub picard: PicardConfig,
    /// Keep every accepted iterate in the trace.
    pub keep_solutions: bool,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            theta: 0.4,
            lambda: 0.1,
            nested: true,
            max_dofs: 200_000,
            max_elements: None,
            max_levels: None,
            picard: PicardConfig::default(),
            keep_solutions: false,
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(DriverError::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(DriverError::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        self.picard_config().validate()?;
        Ok(())
    }

    fn picard_config(&self) -> PicardConfig {
        PicardConfig { lambda: self.lambda, ..self.picard }
    }

    fn budget_reached(&self, level: usize, n_dofs: usize, n_elements: usize) -> bool {
        n_dofs >= self.max_dofs
            || self.max_elements.is_some_and(|m| n_elements >= m)
            || self.max_levels.is_some_and(|m| level + 1 >= m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    BudgetReached,
    LuckyBreakdown,
    PicardNontermination,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::BudgetReached => "budget-reached",
            Termination::LuckyBreakdown => "lucky-breakdown",
            Termination::PicardNontermination => "picard-nontermination",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub estimator: f64,
    pub picard_count: usize,
    pub h1_error: Option<f64>,
    /// `Σ_{j≤ℓ} #Pic(j)·#T_j`
    pub cum_work: u64,
    /// `#M_ℓ`; zero on the last level.
    pub n_marked: usize,
}

#[derive(Clone, Debug)]
pub struct AdaptiveTrace {
    pub records: Vec<LevelRecord>,
    pub termination: Termination,
    /// Inner Picard trace of every level.
    pub picard_traces: Vec<PicardTrace>,
    /// Accepted iterates, when requested.
    pub solutions: Vec<FEFunction>,
}

pub const CSV_HEADER: &str = "level,n_elements,n_dofs,estimator,picard_count,h1_error,cum_work";

impl AdaptiveTrace {
    pub fn last(&self) -> Option<&LevelRecord> {
        self.records.last()
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            let err = r.h1_error.map(|e| format!("{e:.16e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{:.16e},{},{},{}",
                r.level, r.n_elements, r.n_dofs, r.estimator, r.picard_count, err, r.cum_work
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// `max_ℓ (#T_ℓ − #T₀) / Σ_{j<ℓ} #M_j` over all levels with marked elements before them.
    pub fn closure_constant(&self) -> Option<f64> {
        let t0 = self.records.first()?.n_elements as f64;
        let mut marked = 0usize;
        let mut best: Option<f64> = None;
        for r in &self.records {
            if marked > 0 {
                let c = (r.n_elements as f64 - t0) / marked as f64;
                best = Some(best.map_or(c, |b: f64| b.max(c)));
            }
            marked += r.n_marked;
        }
        best
    }
}

struct LevelState {
    space: Arc<FESpace>,
    system: DiscreteSystem,
}

impl LevelState {
    fn new(problem: &MonotoneProblem, mesh: Arc<Triangulation>, cfg: &DriverConfig) -> Result<LevelState, DriverError> {
        let space = FESpace::new(mesh)?;
        let system = DiscreteSystem::new(problem, &space, cfg.picard.solver, cfg.picard.linear_tol)?;
        Ok(LevelState { space, system })
    }
}

/// Initial guess on a new level: the previous iterate (nested) or zero, with Dirichlet data imposed.
fn initial_guess(
    problem: &MonotoneProblem,
    space: &Arc<FESpace>,
    previous: Option<&FEFunction>,
    nested: bool,
) -> Result<FEFunction, DriverError> {
    match previous {
        Some(prev) if nested => {
            let mut u = prev.prolongate(space)?;
            u.impose_dirichlet(&*problem.dirichlet);
            Ok(u)
        }
        _ => Ok(problem.initial_function(space)),
    }
}

pub fn run_adaptive(
    problem: &MonotoneProblem,
    initial_mesh: &Triangulation,
    config: &DriverConfig,
) -> Result<AdaptiveTrace, DriverError> {
    run_adaptive_with(problem, initial_mesh, config, None)
}

/// As [`run_adaptive`], additionally recording `error_fn(u_ℓ)` as the level error.
pub fn run_adaptive_with(
    problem: &MonotoneProblem,
    initial_mesh: &Triangulation,
    config: &DriverConfig,
    error_fn: Option<ErrorFn<'_>>,
) -> Result<AdaptiveTrace, DriverError> {
    config.validate()?;
    let picard_cfg = config.picard_config();
    let mut trace =
        AdaptiveTrace { records: Vec::new(), termination: Termination::BudgetReached, picard_traces: Vec::new(), solutions: Vec::new() };
    let mut mesh = Arc::new(initial_mesh.clone());
    let mut previous: Option<FEFunction> = None;
    let mut cum_work = 0u64;
    for level in 0.. {
        let state = LevelState::new(problem, Arc::clone(&mesh), config)?;
        let u0 = initial_guess(problem, &state.space, previous.as_ref(), config.nested)?;
        let mut last: Option<IndicatorField> = None;
        let mut estimate = |u: &FEFunction| -> Result<f64, SolverError> {
            let ind = compute_indicators(problem, u);
            let eta = ind.total();
            last = Some(ind);
            Ok(eta)
        };
        let n_elements = mesh.num_elements();
        let n_dofs = state.space.dim();
        let outcome = match iterate_until_stop(&state.system, &u0, &mut estimate, &picard_cfg) {
            Ok(o) => o,
            Err(SolverError::NonTermination(inner)) => {
                let count = inner.count();
                cum_work += (count * n_elements) as u64;
                trace.records.push(LevelRecord {
                    level,
                    n_elements,
                    n_dofs,
                    estimator: inner.steps.last().and_then(|s| s.estimator).unwrap_or(f64::NAN),
                    picard_count: count,
                    h1_error: None,
                    cum_work,
                    n_marked: 0,
                });
                trace.picard_traces.push(*inner);
                trace.termination = Termination::PicardNontermination;
                return Ok(trace);
            }
            Err(e) => return Err(e.into()),
        };
        let ind = last.take().expect("estimator evaluated at least once");
        let count = outcome.trace.count();
        cum_work += (count * n_elements) as u64;
        let h1_error = error_fn.map(|f| f(&outcome.solution));
        trace.records.push(LevelRecord {
            level,
            n_elements,
            n_dofs,
            estimator: outcome.estimator,
            picard_count: count,
            h1_error,
            cum_work,
            n_marked: 0,
        });
        trace.picard_traces.push(outcome.trace);
        if config.keep_solutions {
            trace.solutions.push(outcome.solution.clone());
        }
        if outcome.lucky_breakdown {
            trace.termination = Termination::LuckyBreakdown;
            break;
        }
        if config.budget_reached(level, n_dofs, n_elements) {
            trace.termination = Termination::BudgetReached;
            break;
        }
        let marked = dorfler_mark(&ind, config.theta)?;
        if marked.is_empty() {
            trace.termination = Termination::LuckyBreakdown;
            break;
        }
        trace.records.last_mut().expect("just pushed").n_marked = marked.len();
        mesh = Arc::new(mesh.refine(&marked.elements)?);
        previous = Some(outcome.solution);
    }
    Ok(trace)
}

/// One outer step of the single-loop algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceStep {
    pub index: usize,
    /// Number of refinements performed before this step.
    pub mesh_level: usize,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub increment: f64,
    pub estimator: f64,
    /// The stopping criterion held and the mesh was (or would have been) refined.
    pub accepted: bool,
    pub n_marked: usize,
    pub h1_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SequenceTrace {
    pub steps: Vec<SequenceStep>,
    pub termination: Termination,
    /// Accepted iterates, when requested.
    pub solutions: Vec<FEFunction>,
}

impl SequenceTrace {
    /// Level-indexed view: level `k` collects the steps computed on the `k`-th mesh.
    pub fn to_level_trace(&self) -> AdaptiveTrace {
        let mut records: Vec<LevelRecord> = Vec::new();
        let mut picard_traces: Vec<PicardTrace> = Vec::new();
        let mut cum_work = 0u64;
        for s in &self.steps {
            if records.last().is_none_or(|r| r.level != s.mesh_level) {
                records.push(LevelRecord {
                    level: s.mesh_level,
                    n_elements: s.n_elements,
                    n_dofs: s.n_dofs,
                    estimator: s.estimator,
                    picard_count: 0,
                    h1_error: None,
                    cum_work,
                    n_marked: 0,
                });
                picard_traces.push(PicardTrace::default());
            }
            let r = records.last_mut().expect("pushed above");
            r.picard_count += 1;
            r.estimator = s.estimator;
            r.h1_error = s.h1_error;
            r.n_marked = s.n_marked;
            cum_work += s.n_elements as u64;
            r.cum_work = cum_work;
            let pt = picard_traces.last_mut().expect("pushed above");
            pt.steps.push(crate::picard::PicardStep {
                n: r.picard_count,
                increment: s.increment,
                estimator: Some(s.estimator),
            });
        }
        AdaptiveTrace { records, termination: self.termination, picard_traces, solutions: self.solutions.clone() }
    }
}

/// Single loop: one Picard step per index; refine only when `‖ũ_ℓ − ũ_{ℓ−1}‖_H ≤ λ η̃_ℓ(ũ_ℓ)`.
pub fn run_full_sequence(
    problem: &MonotoneProblem,
    initial_mesh: &Triangulation,
    config: &DriverConfig,
) -> Result<SequenceTrace, DriverError> {
    run_full_sequence_with(problem, initial_mesh, config, None)
}

pub fn run_full_sequence_with(
    problem: &MonotoneProblem,
    initial_mesh: &Triangulation,
    config: &DriverConfig,
    error_fn: Option<ErrorFn<'_>>,
) -> Result<SequenceTrace, DriverError> {
    config.validate()?;
    let picard_cfg = config.picard_config();
    let mut out = SequenceTrace { steps: Vec::new(), termination: Termination::BudgetReached, solutions: Vec::new() };
    let mut mesh = Arc::new(initial_mesh.clone());
    let mut state = LevelState::new(problem, Arc::clone(&mesh), config)?;
    let mut u = problem.initial_function(&state.space);
    let mut mesh_level = 0;
    let mut steps_on_level = 0;
    for index in 0.. {
        let (next, increment) = state.system.picard_step(&u)?;
        u = next;
        steps_on_level += 1;
        let ind = compute_indicators(problem, &u);
        let eta = ind.total();
        let n_elements = mesh.num_elements();
        let n_dofs = state.space.dim();
        let accepted = increment <= config.lambda * eta || (eta == 0.0 && increment == 0.0);
        out.steps.push(SequenceStep {
            index,
            mesh_level,
            n_elements,
            n_dofs,
            increment,
            estimator: eta,
            accepted,
            n_marked: 0,
            h1_error: None,
        });
        if !accepted {
            if steps_on_level >= picard_cfg.max_iter {
                out.termination = Termination::PicardNontermination;
                break;
            }
            continue;
        }
        let step = out.steps.last_mut().expect("just pushed");
        step.h1_error = error_fn.map(|f| f(&u));
        if config.keep_solutions {
            out.solutions.push(u.clone());
        }
        if eta == 0.0 {
            out.termination = Termination::LuckyBreakdown;
            break;
        }
        if config.budget_reached(mesh_level, n_dofs, n_elements) {
            out.termination = Termination::BudgetReached;
            break;
        }
        let marked = dorfler_mark(&ind, config.theta)?;
        if marked.is_empty() {
            out.termination = Termination::LuckyBreakdown;
            break;
        }
        step.n_marked = marked.len();
        mesh = Arc::new(mesh.refine(&marked.elements)?);
        state = LevelState::new(problem, Arc::clone(&mesh), config)?;
        u = initial_guess(problem, &state.space, Some(&u), config.nested)?;
        mesh_level += 1;
        steps_on_level = 0;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateAxis {
    Elements,
    Dofs,
    Work,
}

/// Least-squares fit `y ≈ a + b x`; returns `(a, b, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 && sxx > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (my - slope * mx, slope, r2)
}

/// Empirical rate `s` in `value ≈ C x^{−s}` from the trailing `window` fraction of the points.
pub fn fit_loglog(x: &[f64], value: &[f64], window: f64) -> Result<f64, DriverError> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(DriverError::Config(format!("window must lie in (0, 1], got {window}")));
    }
    let n = x.len().min(value.len());
    let take = ((window * n as f64).ceil() as usize).min(n);
    if take < 5 {
        return Err(DriverError::InsufficientData { needed: 5, got: take });
    }
    let lx: Vec<f64> = x[n - take..n].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = value[n - take..n].iter().map(|v| v.ln()).collect();
    Ok(-linear_fit(&lx, &ly).1)
}

fn axis_values(trace: &AdaptiveTrace, axis: RateAxis) -> Vec<f64> {
    trace
        .records
        .iter()
        .map(|r| match axis {
            RateAxis::Elements => r.n_elements as f64,
            RateAxis::Dofs => r.n_dofs as f64,
            RateAxis::Work => r.cum_work as f64,
        })
        .collect()
}

/// Estimator rate against `axis` over the trailing `window` fraction of levels.
pub fn fit_rate(trace: &AdaptiveTrace, axis: RateAxis, window: f64) -> Result<f64, DriverError> {
    let eta: Vec<f64> = trace.records.iter().map(|r| r.estimator).collect();
    fit_loglog(&axis_values(trace, axis), &eta, window)
}

/// Error rate against `axis`; levels without a recorded error are skipped.
pub fn fit_error_rate(trace: &AdaptiveTrace, axis: RateAxis, window: f64) -> Result<f64, DriverError> {
    let xs = axis_values(trace, axis);
    let (x, e): (Vec<f64>, Vec<f64>) =
        trace.records.iter().zip(xs).filter_map(|(r, x)| r.h1_error.map(|e| (x, e))).unzip();
    fit_loglog(&x, &e, window)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PicardClass {
    Bounded,
    Logarithmic,
    Irregular,
}

impl fmt::Display for PicardClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PicardClass::Bounded => "bounded",
            PicardClass::Logarithmic => "logarithmic",
            PicardClass::Irregular => "irregular",
        })
    }
}

/// Classifies `#Pic(ℓ)` against `ln #T_ℓ`.
///
/// Bounded: slope ≤ 0.1 over the trailing half and max − min ≤ 2 on levels
/// beyond 5. Logarithmic: linear fit over all levels with R² ≥ 0.8 and
/// positive slope.
pub fn picard_growth_check(trace: &AdaptiveTrace) -> Result<PicardClass, DriverError> {
    let n = trace.records.len();
    if n < 8 {
        return Err(DriverError::InsufficientData { needed: 8, got: n });
    }
    let x: Vec<f64> = trace.records.iter().map(|r| (r.n_elements as f64).ln()).collect();
    let y: Vec<f64> = trace.records.iter().map(|r| r.picard_count as f64).collect();
    let tail = n.div_ceil(2);
    let (_, tail_slope, _) = linear_fit(&x[n - tail..], &y[n - tail..]);
    let late = &y[6..];
    let spread = late.iter().cloned().fold(f64::MIN, f64::max) - late.iter().cloned().fold(f64::MAX, f64::min);
    if tail_slope <= 0.1 && spread <= 2.0 {
        return Ok(PicardClass::Bounded);
    }
    let (_, slope, r2) = linear_fit(&x, &y);
    if r2 >= 0.8 && slope > 0.0 {
        Ok(PicardClass::Logarithmic)
    } else {
        Ok(PicardClass::Irregular)
    }
}
