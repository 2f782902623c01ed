//! Shared fixtures for the criterion benches.

use ctl_core::tasks::generate_synthetic;
use ctl_core::{SyntheticConfig, TaskCollection};

/// Clustered collection shaped like the desk-scale experiments.
pub fn clustered(num_tasks: usize, dim: usize, seed: u64) -> TaskCollection {
    let cfg = SyntheticConfig {
        num_tasks,
        dim,
        n_train: 64,
        n_test: 128,
        num_clusters: 2.min(num_tasks),
        tau_between: 5.0,
        tau_within: 2.0,
        noise_sigma: 1.0,
        center_scale: 10.0,
        seed,
    };
    generate_synthetic(&cfg).expect("fixture config is valid").0
}
