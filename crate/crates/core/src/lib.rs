//! Sparse linear tripole array synthesis.
//!
//! A reference beam (unit response toward the mainlobe, nulls over the
//! sidelobe regions) is sampled, lifted to a real second-order cone program
//! and solved for group-sparse weights over a dense grid of candidate
//! locations. Groups that survive pruning are the tripoles to build.

pub mod array_model;
pub mod conic;
pub mod error;
pub mod metrics;
pub mod pattern_grid;
pub mod sparse_design;

pub use array_model::{CandidateGrid, Direction, Polarization, WeightVector};
pub use conic::{ConicProgram, ConicSolution, KktResiduals, SolveStatus, SolverSettings};
pub use error::{Error, Result};
pub use metrics::{MetricBundle, PatternSweep};
pub use pattern_grid::{DesignSpec, Side, SidelobeRegion};
pub use sparse_design::{DesignResult, EpsilonPolicy, GroupNormConfig, ReweightTrace};
