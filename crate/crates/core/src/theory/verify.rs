use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{noisy_path_bound, path_bound, NoisySpec, PathSpec};
use crate::budget::BudgetAllocation;
use crate::cascade::run_cascade;
use crate::error::{Error, Result};
use crate::graph::RootedTree;
use crate::linmodel::{pseudo_inverse_frobenius, Refiner};
use crate::rng::{derive_seed, rng_for, substream};
use crate::tasks::{TaskCollection, TaskDataset};

/// Slack for floating-point error in the noiseless comparison.
pub const NOISELESS_TOLERANCE: f64 = 1e-6;

/// A chain `v_0 -> ... -> v_m` of linear tasks whose optima sit at equal
/// spacing along a random direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// Number of edges `m`.
    pub length: usize,
    pub dim: usize,
    pub n_samples: usize,
    #[serde(default = "five")]
    pub root_budget: u64,
    /// Steps for `v_1..v_m`; empty means `budget` everywhere.
    #[serde(default)]
    pub budgets: Vec<u64>,
    #[serde(default = "five")]
    pub budget: u64,
    /// Distance between the optima of `v_0` and `v_m`.
    #[serde(default = "unit")]
    pub span: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "draws")]
    pub mc_draws: usize,
    #[serde(default)]
    pub seed: u64,
}

fn five() -> u64 {
    5
}
fn unit() -> f64 {
    1.0
}
fn draws() -> usize {
    200
}

impl ChainConfig {
    pub fn node_budgets(&self) -> Vec<u64> {
        if self.budgets.is_empty() {
            vec![self.budget; self.length]
        } else {
            self.budgets.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.length == 0 || self.dim == 0 {
            return bad("chain length and dim must be positive".into());
        }
        if self.n_samples < self.dim {
            return bad(format!(
                "n_samples {} must be at least dim {}",
                self.n_samples, self.dim
            ));
        }
        if !self.budgets.is_empty() && self.budgets.len() != self.length {
            return bad(format!(
                "{} budgets for a chain of length {}",
                self.budgets.len(),
                self.length
            ));
        }
        if !(self.span.is_finite() && self.span >= 0.0)
            || !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0)
        {
            return bad("span and noise_sigma must be finite and nonnegative".into());
        }
        if self.noise_sigma > 0.0 && self.mc_draws < 2 {
            return bad("noisy verification needs at least 2 draws".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: ChainConfig,
    pub noisy: bool,
    /// Leaf error, or its Monte-Carlo mean under noise.
    pub empirical: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Root error fed into the bound (a Monte-Carlo mean under noise).
    pub init_error: f64,
    pub rhos: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

struct Chain {
    designs: Vec<DMatrix<f64>>,
    optima: Vec<DVector<f64>>,
    tree: RootedTree,
    budgets: BudgetAllocation,
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

fn build_chain(cfg: &ChainConfig) -> Chain {
    let mut rng = rng_for(cfg.seed, "theory/chain");
    let m = cfg.length;
    let theta0 = DVector::from_fn(cfg.dim, |_, _| rng.sample(StandardNormal));
    let mut dir = DVector::from_fn(cfg.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    while dir.norm() == 0.0 {
        dir = DVector::from_fn(cfg.dim, |_, _| rng.sample(StandardNormal));
    }
    let dir = dir.normalize();
    let optima = (0..=m)
        .map(|i| &theta0 + &dir * (cfg.span * i as f64 / m as f64))
        .collect();
    let designs = (0..=m)
        .map(|_| gaussian_matrix(&mut rng, cfg.n_samples, cfg.dim))
        .collect();
    let tree = RootedTree {
        root: 0,
        parent: (0..=m).map(|v| v.checked_sub(1)).collect(),
        edge_length: vec![0.0; m + 1],
    };
    let mut per_task = vec![cfg.root_budget];
    per_task.extend(cfg.node_budgets());
    let total = per_task.iter().sum();
    Chain {
        designs,
        optima,
        tree,
        budgets: BudgetAllocation { per_task, total },
    }
}

/// Root and leaf errors of one cascade run with the given noise draw.
fn run_chain(chain: &Chain, noise: &[DVector<f64>]) -> Result<(f64, f64)> {
    let tasks = (0..chain.designs.len())
        .map(|i| {
            let y = &chain.designs[i] * &chain.optima[i] + &noise[i];
            TaskDataset::train_only(format!("chain_{i}"), chain.designs[i].clone(), y)
        })
        .collect::<Result<_>>()?;
    let collection = TaskCollection::new(tasks)?;
    let r = run_cascade(&collection, &chain.tree, &chain.budgets)?;
    let m = chain.designs.len() - 1;
    Ok((
        (&r.params[0] - &chain.optima[0]).norm(),
        (&r.params[m] - &chain.optima[m]).norm(),
    ))
}

/// Runs the chain and compares its leaf error with the matching bound.
pub fn verify_bounds(cfg: &ChainConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let chain = build_chain(cfg);
    let m = cfg.length;
    let rhos = chain.designs[1..]
        .iter()
        .map(|x| Ok(Refiner::with_default_step(x, &DVector::zeros(x.nrows()))?.contraction_rate()))
        .collect::<Result<Vec<f64>>>()?;
    let deltas = (1..=m)
        .map(|i| (&chain.optima[i] - &chain.optima[i - 1]).norm())
        .collect();
    let path = |init_error| PathSpec {
        rhos: rhos.clone(),
        budgets: cfg.node_budgets(),
        deltas: Vec::clone(&deltas),
        init_error,
    };

    if cfg.noise_sigma == 0.0 {
        let zeros: Vec<DVector<f64>> = vec![DVector::zeros(cfg.n_samples); m + 1];
        let (init_error, leaf) = run_chain(&chain, &zeros)?;
        let bound = path_bound(&path(init_error))?;
        return Ok(VerificationReport {
            config: cfg.clone(),
            noisy: false,
            empirical: leaf,
            bound,
            satisfied: leaf <= bound + NOISELESS_TOLERANCE,
            init_error,
            rhos,
            std_error: None,
        });
    }

    let a_frob = chain.designs[1..]
        .iter()
        .map(pseudo_inverse_frobenius)
        .collect::<Result<Vec<f64>>>()?;
    let noise_seed = derive_seed(cfg.seed, "theory/noise");
    let errors = (0..cfg.mc_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(noise_seed, "draw", k as u64);
            let noise: Vec<DVector<f64>> = (0..=m)
                .map(|_| {
                    DVector::from_fn(cfg.n_samples, |_, _| {
                        cfg.noise_sigma * rng.sample::<f64, _>(StandardNormal)
                    })
                })
                .collect();
            run_chain(&chain, &noise)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = errors.len() as f64;
    let init_error = errors.iter().map(|e| e.0).sum::<f64>() / k;
    let mean = errors.iter().map(|e| e.1).sum::<f64>() / k;
    let var = errors.iter().map(|e| (e.1 - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let std_error = (var / k).sqrt();
    let bound = noisy_path_bound(&NoisySpec {
        path: path(init_error),
        sigmas: vec![cfg.noise_sigma; m],
        a_frob,
    })?;
    Ok(VerificationReport {
        config: cfg.clone(),
        noisy: true,
        empirical: mean,
        bound,
        satisfied: mean <= bound + 2.0 * std_error,
        init_error,
        rhos,
        std_error: Some(std_error),
    })
}

/// Recipe for a batch of randomly shaped chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomChains {
    pub count: usize,
    pub max_length: usize,
    pub max_dim: usize,
    pub max_samples: usize,
    pub max_budget: u64,
    pub max_span: f64,
    pub noise_sigma: f64,
    pub mc_draws: usize,
    pub seed: u64,
}

impl Default for RandomChains {
    fn default() -> Self {
        RandomChains {
            count: 100,
            max_length: 5,
            max_dim: 10,
            max_samples: 100,
            max_budget: 20,
            max_span: 3.0,
            noise_sigma: 0.0,
            mc_draws: 200,
            seed: 0,
        }
    }
}

pub fn random_chain_configs(spec: &RandomChains) -> Result<Vec<ChainConfig>> {
    if spec.max_length == 0
        || spec.max_dim == 0
        || spec.max_budget == 0
        || spec.max_samples < spec.max_dim + 2
    {
        return Err(Error::Config(
            "random chain limits must be positive with max_samples >= max_dim + 2".into(),
        ));
    }
    let mut rng = rng_for(spec.seed, "theory/random_chains");
    Ok((0..spec.count)
        .map(|i| {
            let length = rng.random_range(1..=spec.max_length);
            let dim = rng.random_range(1..=spec.max_dim);
            ChainConfig {
                length,
                dim,
                n_samples: rng.random_range(dim + 2..=spec.max_samples),
                root_budget: rng.random_range(1..=spec.max_budget),
                budgets: (0..length)
                    .map(|_| rng.random_range(1..=spec.max_budget))
                    .collect(),
                budget: 0,
                span: rng.random_range(0.0..=spec.max_span),
                noise_sigma: spec.noise_sigma,
                mc_draws: spec.mc_draws,
                seed: derive_seed(spec.seed, &format!("chain/{i}")),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ChainConfig {
        ChainConfig {
            length: 3,
            dim: 4,
            n_samples: 12,
            root_budget: 5,
            budgets: vec![],
            budget: 3,
            span: 1.0,
            noise_sigma: 0.0,
            mc_draws: 50,
            seed: 1,
        }
    }

    #[test]
    fn coincident_optima_give_vanishing_errors() {
        let r = verify_bounds(&ChainConfig {
            span: 0.0,
            root_budget: 3000,
            ..base()
        })
        .unwrap();
        assert!(r.satisfied);
        assert!(r.empirical < 1e-8 && r.bound < 1e-6, "{r:?}");
    }

    #[test]
    fn random_noiseless_chains_hold() {
        let configs = random_chain_configs(&RandomChains {
            count: 30,
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        for c in configs {
            let r = verify_bounds(&c).unwrap();
            assert!(r.satisfied, "{r:?}");
            assert!(r.rhos.iter().all(|&p| (0.0..1.0).contains(&p)));
        }
    }

    #[test]
    fn optima_are_equally_spaced() {
        let chain = build_chain(&ChainConfig {
            span: 2.0,
            length: 4,
            ..base()
        });
        for i in 1..=4 {
            assert!(((&chain.optima[i] - &chain.optima[i - 1]).norm() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_chain_is_reported_with_standard_error() {
        let r = verify_bounds(&ChainConfig {
            noise_sigma: 0.5,
            ..base()
        })
        .unwrap();
        assert!(r.noisy && r.std_error.unwrap() > 0.0);
        assert!(r.satisfied, "{r:?}");
    }

    #[test]
    fn invalid_chains() {
        assert!(verify_bounds(&ChainConfig {
            n_samples: 2,
            ..base()
        })
        .is_err());
        assert!(verify_bounds(&ChainConfig {
            budgets: vec![1],
            ..base()
        })
        .is_err());
        assert!(verify_bounds(&ChainConfig {
            length: 0,
            ..base()
        })
        .is_err());
        assert!(verify_bounds(&ChainConfig {
            noise_sigma: 1.0,
            mc_draws: 1,
            ..base()
        })
        .is_err());
    }
}
