use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::feature::{feature_distance_with, FourierFeatures};
use super::optimization::signature;
use super::target::target_distance_with;
use super::{DistanceParams, FeatureMetric, Metric};
use crate::error::{Error, Result};
use crate::tasks::{TaskCollection, TaskDataset};

/// Symmetric, zero-diagonal matrix of nonnegative task distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: DMatrix<f64>,
    metric_name: String,
}

impl DistanceMatrix {
    pub fn new(
        ids: Vec<String>,
        values: DMatrix<f64>,
        metric_name: impl Into<String>,
    ) -> Result<Self> {
        let t = ids.len();
        if values.shape() != (t, t) {
            return Err(Error::Shape(format!(
                "{t} ids but a {}x{} matrix",
                values.nrows(),
                values.ncols()
            )));
        }
        for u in 0..t {
            if values[(u, u)] != 0.0 {
                return Err(Error::Config(format!("nonzero diagonal entry at {u}")));
            }
            for v in 0..t {
                let w = values[(u, v)];
                if !w.is_finite() {
                    return Err(Error::NonFiniteWeight(u, v));
                }
                if w < 0.0 || w != values[(v, u)] {
                    return Err(Error::Config(format!(
                        "entry ({u}, {v}) breaks symmetry or nonnegativity"
                    )));
                }
            }
        }
        Ok(DistanceMatrix {
            ids,
            values,
            metric_name: metric_name.into(),
        })
    }

    /// Builds from raw rows without the id header; ids default to indices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        if rows.iter().any(|r| r.len() != t) {
            return Err(Error::Shape(
                "distance rows must form a square matrix".into(),
            ));
        }
        let values = DMatrix::from_fn(t, t, |i, j| rows[i][j]);
        Self::new((0..t).map(|i| i.to_string()).collect(), values, "custom")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[(u, v)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn row_sum(&self, v: usize) -> f64 {
        self.values.row(v).sum()
    }
}

/// Column means and standard deviations over every training row of the
/// collection; constant columns keep unit scale.
fn standardized(collection: &TaskCollection) -> Vec<DMatrix<f64>> {
    let d = collection.dim();
    let total: usize = collection.tasks().iter().map(TaskDataset::n_train).sum();
    let mut mean = DVector::<f64>::zeros(d);
    for t in collection.tasks() {
        for row in t.x_train.row_iter() {
            mean += row.transpose();
        }
    }
    mean /= total.max(1) as f64;
    let mut var = DVector::<f64>::zeros(d);
    for t in collection.tasks() {
        for row in t.x_train.row_iter() {
            var += (row.transpose() - &mean).map(|v| v * v);
        }
    }
    var /= total.max(1) as f64;
    let scale = var.map(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
    collection
        .tasks()
        .iter()
        .map(|t| {
            let mut x = t.x_train.clone();
            for (j, mut col) in x.column_iter_mut().enumerate() {
                col.apply(|v| *v = (*v - mean[j]) / scale[j]);
            }
            x
        })
        .collect()
}

/// Pairwise distances between the training splits of all tasks.
pub fn compute_distance_matrix(
    collection: &TaskCollection,
    metric: Metric,
    params: &DistanceParams,
) -> Result<DistanceMatrix> {
    params.validate()?;
    let tasks = collection.tasks();
    let t = tasks.len();
    let pairs: Vec<(usize, usize)> = (0..t)
        .flat_map(|u| (u + 1..t).map(move |v| (u, v)))
        .collect();
    let annotate = |u: usize, v: usize| {
        move |e: Error| Error::Pair(tasks[u].id.clone(), tasks[v].id.clone(), Box::new(e))
    };

    let weights: Vec<f64> = match metric {
        Metric::Feature(fm) => {
            let designs: Vec<DMatrix<f64>> = if params.standardize_features {
                standardized(collection)
            } else {
                tasks.iter().map(|t| t.x_train.clone()).collect()
            };
            let rff = (fm == FeatureMetric::Mmd)
                .then(|| FourierFeatures::new(collection.dim(), params.rff_dim, params.seed));
            pairs
                .par_iter()
                .map(|&(u, v)| {
                    feature_distance_with(&designs[u], &designs[v], fm, rff.as_ref())
                        .map_err(annotate(u, v))
                })
                .collect::<Result<_>>()?
        }
        Metric::Target(tm) => pairs
            .par_iter()
            .map(|&(u, v)| {
                target_distance_with(&tasks[u].y_train, &tasks[v].y_train, tm, params)
                    .map_err(annotate(u, v))
            })
            .collect::<Result<_>>()?,
        Metric::Optimization(om) => {
            let signatures: Vec<DVector<f64>> = tasks
                .par_iter()
                .map(|task| signature(task, om, params).map_err(|e| e.for_task(&task.id)))
                .collect::<Result<_>>()?;
            pairs
                .par_iter()
                .map(|&(u, v)| Ok((&signatures[u] - &signatures[v]).norm()))
                .collect::<Result<_>>()?
        }
    };

    let mut values = DMatrix::zeros(t, t);
    for (&(u, v), &w) in pairs.iter().zip(&weights) {
        if !w.is_finite() {
            return Err(annotate(u, v)(Error::NonFiniteWeight(u, v)));
        }
        let w = w.max(0.0);
        values[(u, v)] = w;
        values[(v, u)] = w;
    }
    DistanceMatrix::new(collection.ids(), values, metric.name())
}

/// Square CSV: a header row of task ids, then one row of values per task.
pub fn write_distance_csv(matrix: &DistanceMatrix, path: &Path) -> Result<()> {
    let to_err = |e: csv::Error| Error::format(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    w.write_record(matrix.ids()).map_err(to_err)?;
    for u in 0..matrix.len() {
        w.write_record((0..matrix.len()).map(|v| crate::tasks::fmt_f64(matrix.get(u, v))))
            .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_distance_csv(path: &Path, metric_name: &str) -> Result<DistanceMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let ids: Vec<String> = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let t = ids.len();
    let mut values = DMatrix::zeros(t, t);
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, format!("row {}: {e}", i + 2)))?;
        if i >= t || record.len() != t {
            return Err(Error::format(path, "distance matrix is not square"));
        }
        for (j, cell) in record.iter().enumerate() {
            values[(i, j)] = cell.trim().parse().map_err(|_| {
                Error::format(
                    path,
                    format!("row {}, column {}: non-numeric cell `{cell}`", i + 2, j + 1),
                )
            })?;
        }
        rows += 1;
    }
    if rows != t {
        return Err(Error::format(path, "distance matrix is not square"));
    }
    DistanceMatrix::new(ids, values, metric_name)
}
