//! Splitting a global step budget into per-task integer budgets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{depths, RootedTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Uniform,
    DepthIncreasing,
    DepthDecreasing,
    EdgeLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationScheme {
    pub kind: SchemeKind,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    /// Share of the budget reserved for the root; 0 lets the root join the
    /// proportional split.
    pub seed_fraction: f64,
}

impl Default for AllocationScheme {
    fn default() -> Self {
        AllocationScheme {
            kind: SchemeKind::Uniform,
            alpha: 1.0,
            beta: 1.0,
            epsilon: 1e-9,
            seed_fraction: 0.1,
        }
    }
}

impl AllocationScheme {
    pub fn of_kind(kind: SchemeKind) -> Self {
        AllocationScheme {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("epsilon", self.epsilon)?;
        if !(0.0..1.0).contains(&self.seed_fraction) {
            return Err(Error::Config(format!(
                "seed_fraction must lie in [0, 1), got {}",
                self.seed_fraction
            )));
        }
        Ok(())
    }

    fn weight(&self, depth: usize, edge: f64) -> f64 {
        let level = (depth + 1) as f64;
        match self.kind {
            SchemeKind::Uniform => 1.0,
            SchemeKind::DepthIncreasing => level.powf(self.alpha),
            SchemeKind::DepthDecreasing => level.powf(-self.alpha),
            SchemeKind::EdgeLength => (edge + self.epsilon).powf(self.beta),
        }
    }
}

/// Σ per_task = total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetAllocation {
    pub per_task: Vec<u64>,
    pub total: u64,
}

impl BudgetAllocation {
    pub fn get(&self, v: usize) -> u64 {
        self.per_task[v]
    }

    pub fn len(&self) -> usize {
        self.per_task.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_task.is_empty()
    }
}

/// Integer shares of `total` proportional to `weights`, summing exactly to
/// `total`. Leftover units go to larger fractional parts, then lower indices.
pub fn largest_remainder(total: u64, weights: &[f64]) -> Result<Vec<u64>> {
    for (i, w) in weights.iter().enumerate() {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::NonFiniteWeight(i, i));
        }
    }
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return if total == 0 {
            Ok(vec![0; weights.len()])
        } else {
            Err(Error::Config(
                "no positive weight to share the budget".into(),
            ))
        };
    }
    let shares: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = shares.iter().map(|s| s.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    // Float rounding can push the floors one unit past `total`.
    let mut excess = assigned.saturating_sub(total);
    while excess > 0 {
        let i = (0..out.len())
            .filter(|&i| out[i] > 0)
            .min_by(|&a, &b| (shares[a] - out[a] as f64).total_cmp(&(shares[b] - out[b] as f64)))
            .expect("a positive share exists");
        out[i] -= 1;
        excess -= 1;
    }
    let left = total - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| {
        (shares[b] - out[b] as f64)
            .total_cmp(&(shares[a] - out[a] as f64))
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(left as usize) {
        out[i] += 1;
    }
    Ok(out)
}

/// Budget for the root before the proportional split.
pub fn seed_budget(total: u64, tasks: usize, seed_fraction: f64) -> u64 {
    if seed_fraction == 0.0 {
        return 0;
    }
    let raw = ((seed_fraction * total as f64).floor() as u64).max(1);
    raw.min(total - (tasks as u64 - 1))
}

/// Per-task budgets for a rooted tree; every task receives at least one step.
pub fn allocate(
    tree: &RootedTree,
    total: u64,
    scheme: &AllocationScheme,
) -> Result<BudgetAllocation> {
    scheme.validate()?;
    let t = tree.len();
    if t == 0 || total < t as u64 {
        return Err(Error::InfeasibleBudget {
            budget: total,
            tasks: t,
        });
    }
    if t == 1 {
        return Ok(BudgetAllocation {
            per_task: vec![total],
            total,
        });
    }
    let depth = depths(tree);
    let seed = seed_budget(total, t, scheme.seed_fraction);
    let members: Vec<usize> = (0..t).filter(|&v| seed == 0 || v != tree.root).collect();
    let weights: Vec<f64> = members
        .iter()
        .map(|&v| {
            scheme.weight(
                depth[v],
                if v == tree.root {
                    0.0
                } else {
                    tree.edge_length[v]
                },
            )
        })
        .collect();
    let pool = total - seed - members.len() as u64;
    let shares = largest_remainder(pool, &weights)?;
    let mut per_task = vec![0; t];
    per_task[tree.root] = seed;
    for (&v, s) in members.iter().zip(shares) {
        per_task[v] = 1 + s;
    }
    Ok(BudgetAllocation { per_task, total })
}

pub fn uniform_default(tree: &RootedTree, total: u64) -> Result<BudgetAllocation> {
    allocate(tree, total, &AllocationScheme::default())
}

/// Flat uniform split over `tasks` with no seed share.
pub fn allocate_flat(tasks: usize, total: u64) -> Result<BudgetAllocation> {
    if tasks == 0 || total < tasks as u64 {
        return Err(Error::InfeasibleBudget {
            budget: total,
            tasks,
        });
    }
    Ok(BudgetAllocation {
        per_task: largest_remainder(total, &vec![1.0; tasks])?,
        total,
    })
}
