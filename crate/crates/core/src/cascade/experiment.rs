use std::io::Write;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_cascade_with, run_individual_with, CascadeOptions, CascadeResult, InitKind};
use crate::budget::{allocate, allocate_flat, AllocationScheme};
use crate::distances::{compute_distance_matrix, DistanceParams, Metric, OptimizationMetric};
use crate::error::{Error, Result};
use crate::graph::{medoid, mst, random_spanning_tree, root_tree, star_tree};
use crate::rng::{derive_seed, substream};
use crate::tasks::{
    generate_synthetic, load_collection, SyntheticConfig, TaskCollection, TaskDataset,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Individual,
    Star,
    RandomTree,
    Mst,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Individual,
        Method::Star,
        Method::RandomTree,
        Method::Mst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Individual => "individual",
            Method::Star => "star",
            Method::RandomTree => "random_tree",
            Method::Mst => "mst",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}`; expected one of individual, star, random_tree, mst"
                ))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

const MEDOID_METRIC: Metric = Metric::Optimization(OptimizationMetric::Gradient);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    /// Tree metric for `mst`; for `star` and `random_tree` it only picks the
    /// medoid root (default `gradient`).
    #[serde(default)]
    pub metric: Option<Metric>,
    pub budget: u64,
    #[serde(default)]
    pub scheme: AllocationScheme,
    #[serde(default = "one")]
    pub num_seeds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub data_path: Option<PathBuf>,
    /// Reshuffle train/test rows of loaded data per replicate.
    #[serde(default = "yes")]
    pub resplit: bool,
    #[serde(default)]
    pub distance: DistanceParams,
    #[serde(default)]
    pub init: InitKind,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn synthetic(
        method: Method,
        metric: Option<Metric>,
        budget: u64,
        data: SyntheticConfig,
    ) -> Self {
        ExperimentConfig {
            method,
            metric,
            budget,
            scheme: AllocationScheme::default(),
            num_seeds: 1,
            seed: 0,
            synthetic: Some(data),
            data_path: None,
            resplit: true,
            distance: DistanceParams::default(),
            init: InitKind::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Mst && self.metric.is_none() {
            return Err(Error::Config("method `mst` requires a metric".into()));
        }
        if self.num_seeds == 0 {
            return Err(Error::Config("num_seeds must be positive".into()));
        }
        match (&self.synthetic, &self.data_path) {
            (Some(s), None) => s.validate()?,
            (None, Some(_)) => {}
            _ => {
                return Err(Error::Config(
                    "exactly one of `synthetic` and `data_path` must be given".into(),
                ))
            }
        }
        self.scheme.validate()?;
        self.distance.validate()
    }

    pub fn tree_metric(&self) -> Metric {
        self.metric.unwrap_or(MEDOID_METRIC)
    }
}

pub fn replicate_seed(seed: u64, replicate: usize) -> u64 {
    derive_seed(seed, &format!("replicate/{replicate}"))
}

/// Builds the structure for `config.method`, allocates the budget and runs it.
/// Distances and trees see only training splits.
pub fn run_method(
    config: &ExperimentConfig,
    collection: &TaskCollection,
    seed: u64,
) -> Result<CascadeResult> {
    let options = CascadeOptions {
        init: config.init,
        seed: derive_seed(seed, "init"),
    };
    let t = collection.len();
    if config.method == Method::Individual {
        let budgets = allocate_flat(t, config.budget)?;
        let mut r = run_individual_with(collection, &budgets, options)?;
        r.seed = seed;
        return Ok(r);
    }
    if config.budget < t as u64 {
        return Err(Error::InfeasibleBudget {
            budget: config.budget,
            tasks: t,
        });
    }
    let metric = config.tree_metric();
    let params = DistanceParams {
        seed: derive_seed(seed, "distances"),
        ..config.distance.clone()
    };
    let train = collection.without_test();
    let dist = compute_distance_matrix(&train, metric, &params)?;
    let root = medoid(&dist);
    let tree = match config.method {
        Method::Star => star_tree(t, root, Some(&dist))?,
        Method::RandomTree => root_tree(
            &random_spanning_tree(t, derive_seed(seed, "random_tree")),
            root,
            &dist,
        )?,
        Method::Mst => root_tree(&mst(&dist)?, root, &dist)?,
        Method::Individual => unreachable!("handled above"),
    };
    let budgets = allocate(&tree, config.budget, &config.scheme)?;
    let mut r = run_cascade_with(collection, &tree, &budgets, options)?;
    r.metric_name = metric.name().to_string();
    r.seed = seed;
    Ok(r)
}

/// Pools each task's rows and redraws a split of the original sizes.
fn resplit(collection: &TaskCollection, seed: u64) -> Result<TaskCollection> {
    let tasks = collection
        .tasks()
        .iter()
        .enumerate()
        .map(|(v, t)| {
            let (n_tr, n) = (t.n_train(), t.n_train() + t.n_test());
            let x = DMatrix::from_fn(n, t.dim(), |i, j| {
                if i < n_tr {
                    t.x_train[(i, j)]
                } else {
                    t.x_test[(i - n_tr, j)]
                }
            });
            let y = DVector::from_fn(n, |i, _| {
                if i < n_tr {
                    t.y_train[i]
                } else {
                    t.y_test[i - n_tr]
                }
            });
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut substream(seed, "resplit", v as u64));
            let (tr, te) = perm.split_at(n_tr);
            TaskDataset::new(
                t.id.clone(),
                x.select_rows(tr),
                y.select_rows(tr),
                x.select_rows(te),
                y.select_rows(te),
            )
        })
        .collect::<Result<_>>()?;
    TaskCollection::with_dim(collection.dim(), tasks)
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub runs: Vec<CascadeResult>,
    /// Task-mean test RMSE per replicate.
    pub per_seed_mean: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over replicates; 0 for a single replicate.
    pub std: f64,
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Independent replicates, run in parallel and collected in replicate order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let loaded = match &config.data_path {
        Some(p) => Some(load_collection(p)?),
        None => None,
    };
    let seeds: Vec<u64> = (0..config.num_seeds)
        .map(|r| replicate_seed(config.seed, r))
        .collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let data = match (&config.synthetic, &loaded) {
                (Some(syn), _) => {
                    generate_synthetic(&SyntheticConfig {
                        seed: derive_seed(seed, "data"),
                        ..syn.clone()
                    })?
                    .0
                }
                (None, Some(c)) if config.resplit => resplit(c, derive_seed(seed, "data"))?,
                (None, Some(c)) => c.clone(),
                (None, None) => unreachable!("validated"),
            };
            run_method(config, &data, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let per_seed_mean: Vec<f64> = runs.iter().map(CascadeResult::mean_test_rmse).collect();
    let (mean, std) = mean_and_std(&per_seed_mean);
    Ok(ExperimentOutcome {
        config: config.clone(),
        seeds,
        runs,
        per_seed_mean,
        mean,
        std,
    })
}

pub const PER_TASK_HEADER: &str = "seed,task_id,test_rmse,budget,depth";

/// One row per replicate and task; `seed` is the replicate index.
pub fn write_per_task_csv<W: Write>(
    outcome: &ExperimentOutcome,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{PER_TASK_HEADER}")?;
    for (r, run) in outcome.runs.iter().enumerate() {
        let depth = run.structure.depths(run.ids.len());
        for v in 0..run.ids.len() {
            writeln!(
                out,
                "{r},{},{},{},{}",
                run.ids[v],
                crate::tasks::fmt_f64(run.test_rmse[v]),
                run.budgets.get(v),
                depth[v]
            )?;
        }
    }
    Ok(())
}
