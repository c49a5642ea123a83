//! θ×λ sweeps over the Z-shape benchmarks with CSV traces and a JSON summary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::zshape;
use super::known::{arctan_problem, h1_error_known, known_problem};
use crate::driver::{fit_rate, picard_growth_check, run_adaptive_with, AdaptiveTrace, DriverConfig, RateAxis};
use crate::error::DriverError;
use crate::fe_space::FEFunction;
use crate::linalg::SolverKind;
use crate::mesh::Triangulation;
use crate::operator::MonotoneProblem;
use crate::picard::PicardConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Singular `u⋆ = r^{4/7} cos(4φ/7)`, `μ = 2 + 1/√(1+t)`, mixed boundary.
    ZshapeKnown,
    /// `μ = 1 + arctan t`, `f ≡ 1`, homogeneous Dirichlet boundary.
    ZshapeUnknown,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::ZshapeKnown => "zshape-known",
            ProblemKind::ZshapeUnknown => "zshape-unknown",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zshape-known" => Ok(ProblemKind::ZshapeKnown),
            "zshape-unknown" => Ok(ProblemKind::ZshapeUnknown),
            other => Err(format!("unknown problem '{other}' (expected zshape-known|zshape-unknown)")),
        }
    }
}

/// A benchmark: initial mesh, problem data and, when known, the exact solution.
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub mesh: Triangulation,
    pub problem: MonotoneProblem,
    pub exact_error: Option<fn(&FEFunction) -> f64>,
}

impl ProblemSpec {
    /// The benchmark on its coarse initial mesh refined uniformly `initial_refinements` times.
    pub fn with_refinements(kind: ProblemKind, initial_refinements: usize) -> ProblemSpec {
        let mut spec = ProblemSpec::new(kind);
        for _ in 0..initial_refinements {
            spec.mesh = spec.mesh.refine_all().expect("uniform refinement of a valid mesh");
        }
        spec
    }

    pub fn new(kind: ProblemKind) -> ProblemSpec {
        match kind {
            ProblemKind::ZshapeKnown => ProblemSpec {
                kind,
                mesh: zshape(true),
                problem: known_problem(),
                exact_error: Some(h1_error_known),
            },
            ProblemKind::ZshapeUnknown => {
                ProblemSpec { kind, mesh: zshape(false), problem: arctan_problem(), exact_error: None }
            }
        }
    }

    pub fn run(&self, config: &DriverConfig) -> Result<AdaptiveTrace, DriverError> {
        let err = self.exact_error.map(|f| move |u: &FEFunction| f(u));
        run_adaptive_with(&self.problem, &self.mesh, config, err.as_ref().map(|f| f as _))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NestedMode {
    True,
    False,
    #[default]
    Both,
}

impl NestedMode {
    pub fn values(self) -> &'static [bool] {
        match self {
            NestedMode::True => &[true],
            NestedMode::False => &[false],
            NestedMode::Both => &[true, false],
        }
    }
}

impl FromStr for NestedMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(NestedMode::True),
            "false" => Ok(NestedMode::False),
            "both" => Ok(NestedMode::Both),
            other => Err(format!("invalid nested mode '{other}' (expected true|false|both)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub thetas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub nested: NestedMode,
    pub max_dofs: usize,
    pub max_elements: Option<usize>,
    /// Uniform refinements applied to the built-in initial mesh.
    pub initial_refinements: usize,
    pub out_dir: PathBuf,
    pub solver: SolverKind,
    /// Recorded in the summary; the sweep itself is deterministic.
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            thetas: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            lambdas: vec![1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6],
            nested: NestedMode::Both,
            max_dofs: 200_000,
            max_elements: None,
            initial_refinements: 0,
            out_dir: PathBuf::from("results"),
            solver: SolverKind::Direct,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        if self.thetas.is_empty() || self.lambdas.is_empty() {
            return Err(DriverError::Config("theta and lambda lists must be non-empty".into()));
        }
        if let Some(t) = self.thetas.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(DriverError::Config(format!("theta must lie in (0, 1], got {t}")));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(DriverError::Config(format!("lambda must be positive, got {l}")));
        }
        Ok(())
    }

    /// Every `(θ, λ, nested)` point of the sweep, in output order.
    pub fn points(&self) -> Vec<(f64, f64, bool)> {
        let mut pts = Vec::new();
        for &theta in &self.thetas {
            for &lambda in &self.lambdas {
                for &nested in self.nested.values() {
                    pts.push((theta, lambda, nested));
                }
            }
        }
        pts
    }
}

/// One entry of the JSON summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub theta: f64,
    pub lambda: f64,
    pub nested: bool,
    pub label: String,
    pub rate_elements: Option<f64>,
    pub rate_work: Option<f64>,
    pub picard_class: Option<String>,
    pub levels: usize,
    pub final_estimator: Option<f64>,
    pub final_error: Option<f64>,
    pub termination: Option<String>,
    pub csv: Option<String>,
    pub error: Option<String>,
}

impl RunSummary {
    pub fn completed(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub problem: String,
    pub seed: u64,
    pub runs: Vec<RunSummary>,
}

impl ExperimentReport {
    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(RunSummary::completed)
    }
}

fn fmt_param(x: f64) -> String {
    format!("{x}").replace('.', "p").replace('-', "m")
}

/// File name of the trace of one sweep point.
pub fn csv_name(kind: ProblemKind, theta: f64, lambda: f64, nested: bool) -> String {
    format!(
        "{}_theta{}_lambda{}_{}.csv",
        kind.name(),
        fmt_param(theta),
        fmt_param(lambda),
        if nested { "nested" } else { "naive" }
    )
}

pub fn summarize(kind: ProblemKind, theta: f64, lambda: f64, nested: bool, trace: &AdaptiveTrace) -> RunSummary {
    let last = trace.last();
    RunSummary {
        problem: kind.name().into(),
        theta,
        lambda,
        nested,
        label: if theta >= 1.0 { "uniform".into() } else { "adaptive".into() },
        rate_elements: fit_rate(trace, RateAxis::Elements, 0.5).ok(),
        rate_work: fit_rate(trace, RateAxis::Work, 0.5).ok(),
        picard_class: picard_growth_check(trace).ok().map(|c| c.to_string()),
        levels: trace.records.len(),
        final_estimator: last.map(|r| r.estimator),
        final_error: last.and_then(|r| r.h1_error),
        termination: Some(trace.termination.to_string()),
        csv: None,
        error: None,
    }
}

fn run_point(spec: &ProblemSpec, sweep: &SweepConfig, theta: f64, lambda: f64, nested: bool) -> RunSummary {
    let config = DriverConfig {
        theta,
        lambda,
        nested,
        max_dofs: sweep.max_dofs,
        max_elements: sweep.max_elements,
        max_levels: None,
        picard: PicardConfig { lambda, solver: sweep.solver, ..Default::default() },
        keep_solutions: false,
    };
    let failed = |e: String| RunSummary {
        problem: spec.kind.name().into(),
        theta,
        lambda,
        nested,
        label: if theta >= 1.0 { "uniform".into() } else { "adaptive".into() },
        rate_elements: None,
        rate_work: None,
        picard_class: None,
        levels: 0,
        final_estimator: None,
        final_error: None,
        termination: None,
        csv: None,
        error: Some(e),
    };
    let trace = match spec.run(&config) {
        Ok(t) => t,
        Err(e) => return failed(e.to_string()),
    };
    let mut summary = summarize(spec.kind, theta, lambda, nested, &trace);
    let name = csv_name(spec.kind, theta, lambda, nested);
    match fs::File::create(sweep.out_dir.join(&name)).and_then(|f| trace.write_csv(std::io::BufWriter::new(f))) {
        Ok(()) => summary.csv = Some(name),
        Err(e) => summary.error = Some(format!("writing {name}: {e}")),
    }
    summary
}

/// Runs every sweep point in parallel, writes one CSV per point and `summary.json` into the output directory.
///
/// Failures of individual points are recorded in the report; the sweep continues.
pub fn run_experiment(spec: &ProblemSpec, sweep: &SweepConfig) -> Result<ExperimentReport, DriverError> {
    sweep.validate()?;
    fs::create_dir_all(&sweep.out_dir)?;
    let runs: Vec<RunSummary> =
        sweep.points().into_par_iter().map(|(t, l, n)| run_point(spec, sweep, t, l, n)).collect();
    let report = ExperimentReport { problem: spec.kind.name().into(), seed: sweep.seed, runs };
    write_summary(&report, &sweep.out_dir.join("summary.json"))?;
    Ok(report)
}

pub fn write_summary(report: &ExperimentReport, path: &Path) -> Result<(), DriverError> {
    let json = serde_json::to_string_pretty(report).map_err(|e| DriverError::Config(e.to_string()))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!("zshape-known".parse::<ProblemKind>().unwrap(), ProblemKind::ZshapeKnown);
        assert!("lshape".parse::<ProblemKind>().is_err());
        assert_eq!("both".parse::<NestedMode>().unwrap().values(), &[true, false]);
        assert!("maybe".parse::<NestedMode>().is_err());
    }

    #[test]
    fn csv_names_are_distinct() {
        let a = csv_name(ProblemKind::ZshapeKnown, 0.2, 1e-3, true);
        assert_eq!(a, "zshape-known_theta0p2_lambda0p001_nested.csv");
        let b = csv_name(ProblemKind::ZshapeKnown, 0.2, 1e-3, false);
        assert_ne!(a, b);
    }

    #[test]
    fn sweep_points_cover_the_grid() {
        let s = SweepConfig { thetas: vec![0.2, 1.0], lambdas: vec![0.1, 0.01, 1e-3], ..Default::default() };
        let pts = s.points();
        assert_eq!(pts.len(), 12);
        let mut dedup = pts.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 12);
    }

    #[test]
    fn sweep_validation() {
        assert!(SweepConfig { thetas: vec![], ..Default::default() }.validate().is_err());
        assert!(SweepConfig { thetas: vec![0.0], ..Default::default() }.validate().is_err());
        assert!(SweepConfig { lambdas: vec![-1.0], ..Default::default() }.validate().is_err());
        assert!(SweepConfig::default().validate().is_ok());
    }
}
