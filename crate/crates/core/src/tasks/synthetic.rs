//! Clustered linear-regression task generator.
//!
//! A global centre `theta_0 ~ N(0, s^2 I)` (s = 1 by default) is perturbed by one of `K` cluster
//! shifts `delta_c ~ N(0, tau_between^2 I)` and a task-specific offset
//! `zeta_v ~ N(0, tau_within^2 I)`. Each task observes `y = X theta_v + eps`
//! with standard-Gaussian design rows and `eps ~ N(0, sigma^2 I)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TaskCollection, TaskDataset};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_tasks: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_clusters")]
    pub num_clusters: usize,
    #[serde(default)]
    pub tau_between: f64,
    #[serde(default)]
    pub tau_within: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Standard deviation of the global centre `theta_0`.
    #[serde(default = "unit_scale")]
    pub center_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_dim() -> usize {
    20
}
fn default_n_train() -> usize {
    64
}
fn default_n_test() -> usize {
    128
}
fn default_clusters() -> usize {
    1
}
fn unit_scale() -> f64 {
    1.0
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_tasks: 200,
            dim: default_dim(),
            n_train: default_n_train(),
            n_test: default_n_test(),
            num_clusters: default_clusters(),
            tau_between: 0.0,
            tau_within: 2.0,
            noise_sigma: 1.0,
            center_scale: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.num_tasks == 0 {
            return bad("num_tasks must be positive");
        }
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.n_train == 0 || self.n_test == 0 {
            return bad("n_train and n_test must be positive");
        }
        if self.num_clusters == 0 || self.num_clusters > self.num_tasks {
            return bad("num_clusters must be in 1..=num_tasks");
        }
        for (name, v) in [
            ("tau_between", self.tau_between),
            ("tau_within", self.tau_within),
            ("noise_sigma", self.noise_sigma),
            ("center_scale", self.center_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be a finite nonnegative number"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTruth {
    pub id: String,
    pub cluster: usize,
    pub theta_star: Vec<f64>,
}

/// Parameters that generated a synthetic collection, in collection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub theta0: Vec<f64>,
    pub cluster_shifts: Vec<Vec<f64>>,
    pub tasks: Vec<TaskTruth>,
}

impl GroundTruth {
    pub fn get(&self, id: &str) -> Option<&TaskTruth> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn theta_star(&self, index: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.tasks[index].theta_star)
    }
}

fn gaussian_vec<R: Rng>(rng: &mut R, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_iterator(
        len,
        (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)),
    )
}

/// Row-major standard-Gaussian design.
fn gaussian_design<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_iterator(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)),
    )
}

pub(crate) fn task_id(index: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(3);
    format!("task_{index:0width$}")
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(TaskCollection, GroundTruth)> {
    config.validate()?;
    let d = config.dim;

    let mut global = rng::rng_for(config.seed, "synthetic/theta0");
    let theta0 = gaussian_vec(&mut global, d, config.center_scale);
    let shifts: Vec<DVector<f64>> = (0..config.num_clusters)
        .map(|c| {
            gaussian_vec(
                &mut rng::substream(config.seed, "synthetic/cluster", c as u64),
                d,
                config.tau_between,
            )
        })
        .collect();

    let generated: Vec<(TaskDataset, TaskTruth)> = (0..config.num_tasks)
        .into_par_iter()
        .map(|v| {
            let mut r = rng::substream(config.seed, "synthetic/task", v as u64);
            let cluster = v % config.num_clusters;
            let zeta = gaussian_vec(&mut r, d, config.tau_within);
            let theta = &theta0 + &shifts[cluster] + zeta;

            let x_train = gaussian_design(&mut r, config.n_train, d);
            let eps_train = gaussian_vec(&mut r, config.n_train, config.noise_sigma);
            let x_test = gaussian_design(&mut r, config.n_test, d);
            let eps_test = gaussian_vec(&mut r, config.n_test, config.noise_sigma);
            let y_train = &x_train * &theta + eps_train;
            let y_test = &x_test * &theta + eps_test;

            let id = task_id(v, config.num_tasks);
            let truth = TaskTruth {
                id: id.clone(),
                cluster,
                theta_star: theta.iter().copied().collect(),
            };
            let task = TaskDataset {
                id,
                x_train,
                y_train,
                x_test,
                y_test,
            };
            (task, truth)
        })
        .collect();

    let (tasks, truths): (Vec<_>, Vec<_>) = generated.into_iter().unzip();
    let collection = TaskCollection::with_dim(d, tasks)?;
    let truth = GroundTruth {
        theta0: theta0.iter().copied().collect(),
        cluster_shifts: shifts.iter().map(|s| s.iter().copied().collect()).collect(),
        tasks: truths,
    };
    Ok((collection, truth))
}
