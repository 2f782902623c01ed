//! Distances from optimization quantities: the gradient of the loss at the
//! origin, `X^T y`, and ridge-regression solutions.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::DistanceParams;
use crate::error::{Error, Result};
use crate::linmodel;
use crate::tasks::TaskDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptimizationMetric {
    Gradient,
    Model,
}

/// `X^T y`, optionally scaled to unit length.
pub(crate) fn gradient_signature(task: &TaskDataset, normalize: bool) -> DVector<f64> {
    let g = task.x_train.tr_mul(&task.y_train);
    let norm = g.norm();
    if normalize && norm > 0.0 {
        g / norm
    } else {
        g
    }
}

pub(crate) fn model_signature(task: &TaskDataset, params: &DistanceParams) -> Result<DVector<f64>> {
    let lambda = params
        .ridge_lambda
        .unwrap_or_else(|| linmodel::default_ridge_lambda(&task.x_train));
    linmodel::ridge_solution(&task.x_train, &task.y_train, lambda)
}

pub(crate) fn signature(
    task: &TaskDataset,
    metric: OptimizationMetric,
    params: &DistanceParams,
) -> Result<DVector<f64>> {
    match metric {
        OptimizationMetric::Gradient => Ok(gradient_signature(task, params.normalize_gradients)),
        OptimizationMetric::Model => model_signature(task, params),
    }
}

pub fn optimization_family_distance(
    u: &TaskDataset,
    v: &TaskDataset,
    metric: OptimizationMetric,
    params: &DistanceParams,
) -> Result<f64> {
    params.validate()?;
    if u.dim() != v.dim() {
        return Err(Error::Shape(format!(
            "feature dimensions differ: {} vs {}",
            u.dim(),
            v.dim()
        )));
    }
    let su = signature(u, metric, params).map_err(|e| e.for_task(&u.id))?;
    let sv = signature(v, metric, params).map_err(|e| e.for_task(&v.id))?;
    Ok((su - sv).norm())
}
