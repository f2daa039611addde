//! Constrained Bayesian Quality-Diversity optimization over mixed
//! continuous / discrete / categorical search spaces.
//!
//! Quality-Diversity (QD) solvers return an *archive*: a grid over
//! user-chosen feature functions where each occupied cell (niche) holds the
//! best feasible solution found with those feature values. This crate
//! provides two such solvers plus everything they stand on:
//!
//! * [`map_elites`] — a constrained, mixed-variable MAP-Elites evolutionary
//!   loop, usable standalone or as the auxiliary solver below;
//! * [`bayesian_qd`] — a surrogate-assisted loop that models the objective,
//!   features and constraints with Gaussian processes, optimizes a Lower
//!   Confidence Bound / Expected Violation infill problem with MAP-Elites,
//!   and spends exact evaluations only on Sobol'-selected elites;
//! * [`gp`] and [`kernels`] — ordinary-kriging Gaussian processes with
//!   product kernels mixing squared-exponential factors for continuous
//!   variables with Compound-Symmetry (Gower) or hypersphere-decomposition
//!   factors for discrete/categorical levels;
//! * [`space`] and [`sobol`] — mixed search-space definition, Latin
//!   Hypercube sampling and Sobol' sequences;
//! * [`archive`] — the feature-grid niche archive and its QD metrics;
//! * [`benchmarks`] — three analytical mixed-variable QD test problems;
//! * [`harness`] — repetition-level experiment orchestration with
//!   median/quantile convergence aggregation and CSV/JSON output.
//!
//! All solvers are deterministic for a fixed seed.

pub mod archive;
pub mod bayesian_qd;
pub mod benchmarks;
mod error;
pub mod gp;
pub mod harness;
pub mod kernels;
pub mod map_elites;
mod optim;
pub mod sobol;
pub mod space;

pub use crate::archive::{Archive, ArchiveEntry, FeatureGrid, InsertOutcome};
pub use crate::bayesian_qd::{run_bqd, BqdConfig, BqdRun};
pub use crate::error::Error;
pub use crate::gp::GpModel;
pub use crate::kernels::{KernelHyperparams, KernelMode};
pub use crate::map_elites::{run_map_elites, HistoryRecord, MapElitesConfig, MapElitesRun, QdProblem};
pub use crate::space::{lhs_sample, MixedPoint, MixedSpace};
