//! Tree-structured training: each task warm-starts from its parent's refined
//! parameters and spends its own step budget.

mod experiment;

pub use experiment::{
    mean_and_std, replicate_seed, run_experiment, run_method, write_per_task_csv, ExperimentConfig,
    ExperimentOutcome, Method, PER_TASK_HEADER,
};

use std::time::Instant;

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::BudgetAllocation;
use crate::error::{Error, Result};
use crate::graph::{depths, levels, RootedTree};
use crate::linmodel::{rmse, ModelParams, Refiner};
use crate::rng::rng_for;
use crate::tasks::TaskCollection;

/// Starting parameters for roots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Zero,
    /// Standard Gaussian draw from the run seed.
    Gaussian,
}

pub fn initial_params(dim: usize, init: InitKind, seed: u64) -> ModelParams {
    match init {
        InitKind::Zero => DVector::zeros(dim),
        InitKind::Gaussian => {
            let mut rng = rng_for(seed, "cascade/init");
            DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng))
        }
    }
}

/// How tasks were connected during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    Tree(RootedTree),
    /// Every task is its own root.
    Independent,
}

impl Structure {
    pub fn tree(&self) -> Option<&RootedTree> {
        match self {
            Structure::Tree(t) => Some(t),
            Structure::Independent => None,
        }
    }

    pub fn depths(&self, tasks: usize) -> Vec<usize> {
        match self {
            Structure::Tree(t) => depths(t),
            Structure::Independent => vec![0; tasks],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CascadeResult {
    pub ids: Vec<String>,
    pub params: Vec<ModelParams>,
    pub test_rmse: Vec<f64>,
    pub train_rmse: Vec<f64>,
    pub structure: Structure,
    pub budgets: BudgetAllocation,
    pub metric_name: String,
    pub seed: u64,
    pub steps_executed: u64,
    pub wall_time: f64,
}

impl CascadeResult {
    pub fn mean_test_rmse(&self) -> f64 {
        self.test_rmse.iter().sum::<f64>() / self.test_rmse.len() as f64
    }

    pub fn mean_train_rmse(&self) -> f64 {
        self.train_rmse.iter().sum::<f64>() / self.train_rmse.len() as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CascadeOptions {
    pub init: InitKind,
    pub seed: u64,
}

fn check_budgets(collection: &TaskCollection, budgets: &BudgetAllocation) -> Result<()> {
    if budgets.len() != collection.len() {
        return Err(Error::Config(format!(
            "{} budgets for {} tasks",
            budgets.len(),
            collection.len()
        )));
    }
    if budgets.per_task.iter().sum::<u64>() != budgets.total {
        return Err(Error::Config(
            "per-task budgets do not sum to the total".into(),
        ));
    }
    Ok(())
}

fn refine_task(
    collection: &TaskCollection,
    v: usize,
    start: &ModelParams,
    steps: u64,
) -> Result<ModelParams> {
    if steps == 0 {
        return Ok(start.clone());
    }
    let task = &collection.tasks()[v];
    let refiner = Refiner::with_default_step(&task.x_train, &task.y_train)
        .map_err(|e| e.for_task(&task.id))?;
    refiner
        .refine(start, steps)
        .map_err(|e| e.for_task(&task.id))
}

fn finish(
    collection: &TaskCollection,
    params: Vec<ModelParams>,
    structure: Structure,
    budgets: &BudgetAllocation,
    options: CascadeOptions,
    started: Instant,
) -> Result<CascadeResult> {
    let executed: u64 = budgets.per_task.iter().sum();
    if executed != budgets.total {
        return Err(Error::Config(format!(
            "executed {executed} steps against a budget of {}",
            budgets.total
        )));
    }
    let (test_rmse, train_rmse) = collection
        .tasks()
        .iter()
        .zip(&params)
        .map(|(t, p)| {
            (
                rmse(p, &t.x_test, &t.y_test),
                rmse(p, &t.x_train, &t.y_train),
            )
        })
        .unzip();
    Ok(CascadeResult {
        ids: collection.ids(),
        params,
        test_rmse,
        train_rmse,
        structure,
        budgets: budgets.clone(),
        metric_name: String::new(),
        seed: options.seed,
        steps_executed: executed,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

pub fn run_cascade(
    collection: &TaskCollection,
    tree: &RootedTree,
    budgets: &BudgetAllocation,
) -> Result<CascadeResult> {
    run_cascade_with(collection, tree, budgets, CascadeOptions::default())
}

/// Refines level by level; nodes of one level run in parallel since each
/// reads only its parent's final parameters.
pub fn run_cascade_with(
    collection: &TaskCollection,
    tree: &RootedTree,
    budgets: &BudgetAllocation,
    options: CascadeOptions,
) -> Result<CascadeResult> {
    let started = Instant::now();
    check_budgets(collection, budgets)?;
    if tree.len() != collection.len() {
        return Err(Error::Config(format!(
            "tree has {} nodes for {} tasks",
            tree.len(),
            collection.len()
        )));
    }
    let init = initial_params(collection.dim(), options.init, options.seed);
    let mut params: Vec<Option<ModelParams>> = vec![None; collection.len()];
    let mut steps = 0u64;
    for level in levels(tree) {
        let refined: Vec<ModelParams> = level
            .par_iter()
            .map(|&v| {
                let start = match tree.parent[v] {
                    Some(p) => params[p]
                        .as_ref()
                        .expect("parent refined in an earlier level"),
                    None => &init,
                };
                refine_task(collection, v, start, budgets.get(v))
            })
            .collect::<Result<_>>()?;
        for (&v, p) in level.iter().zip(refined) {
            steps += budgets.get(v);
            params[v] = Some(p);
        }
    }
    debug_assert_eq!(steps, budgets.total);
    let params = params
        .into_iter()
        .map(|p| p.expect("every node lies on some level"))
        .collect();
    finish(
        collection,
        params,
        Structure::Tree(tree.clone()),
        budgets,
        options,
        started,
    )
}

pub fn run_individual(
    collection: &TaskCollection,
    budgets: &BudgetAllocation,
) -> Result<CascadeResult> {
    run_individual_with(collection, budgets, CascadeOptions::default())
}

/// Every task refined from the shared initial parameters.
pub fn run_individual_with(
    collection: &TaskCollection,
    budgets: &BudgetAllocation,
    options: CascadeOptions,
) -> Result<CascadeResult> {
    let started = Instant::now();
    check_budgets(collection, budgets)?;
    let init = initial_params(collection.dim(), options.init, options.seed);
    let params = (0..collection.len())
        .into_par_iter()
        .map(|v| refine_task(collection, v, &init, budgets.get(v)))
        .collect::<Result<_>>()?;
    finish(
        collection,
        params,
        Structure::Independent,
        budgets,
        options,
        started,
    )
}
