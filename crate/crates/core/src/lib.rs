//! Adaptive P1 finite elements with an inexact Zarantonello (Picard) solver for
//! strongly monotone quasi-linear elliptic problems
//! `−div(μ(x, |∇u|²)∇u) = f` on 2D polygonal domains.
//!
//! The pieces are layered bottom-up: [`mesh`] (newest vertex bisection),
//! [`fe_space`], [`operator`] and [`nonlinearity`], [`picard`], [`estimator`],
//! [`driver`] and the Z-shape benchmarks in [`bench`].

pub mod bench;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod fe_space;
pub mod linalg;
pub mod mesh;
pub mod nonlinearity;
pub mod operator;
pub mod picard;
pub mod quadrature;

pub use driver::{
    fit_rate, picard_growth_check, run_adaptive, run_adaptive_with, run_full_sequence, AdaptiveTrace, DriverConfig,
    LevelRecord, PicardClass, RateAxis, Termination,
};
pub use error::{DriverError, EstimatorError, FemError, MeshError, SolverError};
pub use estimator::{compute_indicators, dorfler_mark, restricted_estimator, IndicatorField, MarkedSet};
pub use fe_space::{FEFunction, FESpace, RieszMatrix};
pub use linalg::SolverKind;
pub use mesh::{BoundaryFacet, BoundaryTag, Point, Triangulation};
pub use nonlinearity::{ArctanMu, ConstantMu, KnownSolutionMu, MonotonicityBounds, Nonlinearity};
pub use operator::MonotoneProblem;
pub use picard::{iterate_until_stop, newton_reference, DiscreteSystem, PicardConfig, PicardTrace};
