//! Budgeted many-task training along trees of related tasks.
//!
//! Parameters flow from a root task down a rooted spanning tree; each task
//! starts from its parent's refined parameters and spends its share of a
//! global step budget on plain gradient descent.

pub mod budget;
pub mod cascade;
pub mod distances;
pub mod error;
pub mod graph;
pub mod linmodel;
pub mod rng;
pub mod tasks;
pub mod theory;

pub use budget::{allocate, AllocationScheme, BudgetAllocation, SchemeKind};
pub use cascade::{
    run_cascade, run_experiment, run_individual, run_method, CascadeResult, ExperimentConfig,
    Method,
};
pub use distances::{compute_distance_matrix, DistanceMatrix, DistanceParams, Metric};
pub use error::{Error, Result};
pub use graph::RootedTree;
pub use linmodel::{ContractionProfile, ModelParams, Refiner};
pub use tasks::{GroundTruth, SyntheticConfig, TaskCollection, TaskDataset};
