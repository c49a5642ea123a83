//! Z-shape benchmarks, manufactured data and the sweep runner behind the CLI.

pub mod experiment;
pub mod geometry;
pub mod known;

pub use experiment::{run_experiment, ExperimentReport, NestedMode, ProblemKind, ProblemSpec, RunSummary, SweepConfig};
pub use geometry::{reference_triangle, unit_square, unit_square_dirichlet, zshape};
pub use known::{
    arctan_problem, exact_gradient, exact_solution_known, exact_value, h1_error, h1_error_known, known_problem,
    manufactured_data, BETA,
};
