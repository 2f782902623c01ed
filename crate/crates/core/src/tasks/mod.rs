//! Task data model: per-task train/test splits and collections of tasks that
//! share a feature dimension.

mod io;
mod synthetic;

pub(crate) use io::fmt_f64;
pub use io::{load_collection, load_train_only, save_collection, Manifest, ManifestEntry};
pub use synthetic::{generate_synthetic, GroundTruth, SyntheticConfig, TaskTruth};

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One regression task with a train and a test split.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub id: String,
    pub x_train: DMatrix<f64>,
    pub y_train: DVector<f64>,
    pub x_test: DMatrix<f64>,
    pub y_test: DVector<f64>,
}

impl TaskDataset {
    pub fn new(
        id: impl Into<String>,
        x_train: DMatrix<f64>,
        y_train: DVector<f64>,
        x_test: DMatrix<f64>,
        y_test: DVector<f64>,
    ) -> Result<Self> {
        let task = TaskDataset {
            id: id.into(),
            x_train,
            y_train,
            x_test,
            y_test,
        };
        task.validate()?;
        Ok(task)
    }

    /// A task whose test split is empty.
    pub fn train_only(
        id: impl Into<String>,
        x_train: DMatrix<f64>,
        y_train: DVector<f64>,
    ) -> Result<Self> {
        let d = x_train.ncols();
        Self::new(
            id,
            x_train,
            y_train,
            DMatrix::zeros(0, d),
            DVector::zeros(0),
        )
    }

    pub fn dim(&self) -> usize {
        self.x_train.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.x_train.nrows()
    }

    pub fn n_test(&self) -> usize {
        self.x_test.nrows()
    }

    /// Same task with the test split dropped.
    pub fn without_test(&self) -> TaskDataset {
        TaskDataset {
            id: self.id.clone(),
            x_train: self.x_train.clone(),
            y_train: self.y_train.clone(),
            x_test: DMatrix::zeros(0, self.dim()),
            y_test: DVector::zeros(0),
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Shape(msg).for_task(&self.id));
        if self.x_train.nrows() != self.y_train.len() {
            return fail(format!(
                "train split has {} feature rows but {} targets",
                self.x_train.nrows(),
                self.y_train.len()
            ));
        }
        if self.x_test.nrows() != self.y_test.len() {
            return fail(format!(
                "test split has {} feature rows but {} targets",
                self.x_test.nrows(),
                self.y_test.len()
            ));
        }
        if self.x_test.nrows() > 0 && self.x_test.ncols() != self.x_train.ncols() {
            return fail(format!(
                "train split has {} features but test split has {}",
                self.x_train.ncols(),
                self.x_test.ncols()
            ));
        }
        let finite = self
            .x_train
            .iter()
            .chain(self.y_train.iter())
            .chain(self.x_test.iter())
            .chain(self.y_test.iter());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite entry".into()).for_task(&self.id));
        }
        Ok(())
    }
}

/// Ordered set of tasks sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCollection {
    tasks: Vec<TaskDataset>,
    dim: usize,
}

impl TaskCollection {
    pub fn new(tasks: Vec<TaskDataset>) -> Result<Self> {
        let dim = match tasks.first() {
            Some(t) => t.dim(),
            None => {
                return Err(Error::Config(
                    "a collection needs at least one task to infer its dimension".into(),
                ))
            }
        };
        Self::with_dim(dim, tasks)
    }

    pub fn with_dim(dim: usize, tasks: Vec<TaskDataset>) -> Result<Self> {
        let mut seen = HashSet::new();
        for task in &tasks {
            if task.dim() != dim {
                return Err(Error::Shape(format!(
                    "dimension {} differs from collection dimension {dim}",
                    task.dim()
                ))
                .for_task(&task.id));
            }
            if !seen.insert(task.id.as_str()) {
                return Err(Error::Config(format!("duplicate task id `{}`", task.id)));
            }
        }
        Ok(TaskCollection { tasks, dim })
    }

    pub fn tasks(&self) -> &[TaskDataset] {
        &self.tasks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.id.clone()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    /// Copy of the collection with every test split removed.
    pub fn without_test(&self) -> TaskCollection {
        TaskCollection {
            tasks: self.tasks.iter().map(TaskDataset::without_test).collect(),
            dim: self.dim,
        }
    }

    pub fn into_tasks(self) -> Vec<TaskDataset> {
        self.tasks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: &str, d: usize) -> TaskDataset {
        TaskDataset::train_only(id, DMatrix::zeros(3, d), DVector::zeros(3)).unwrap()
    }

    #[test]
    fn row_mismatch_is_rejected() {
        let err =
            TaskDataset::train_only("a", DMatrix::zeros(3, 2), DVector::zeros(2)).unwrap_err();
        assert!(err.to_string().contains("task `a`"), "{err}");
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut x = DMatrix::zeros(2, 2);
        x[(1, 1)] = f64::NAN;
        assert!(TaskDataset::train_only("a", x, DVector::zeros(2)).is_err());
    }

    #[test]
    fn collection_checks_dimension_and_ids() {
        assert!(TaskCollection::new(vec![task("a", 2), task("b", 3)]).is_err());
        assert!(TaskCollection::new(vec![task("a", 2), task("a", 2)]).is_err());
        let c = TaskCollection::new(vec![task("a", 2), task("b", 2)]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.index_of("b"), Some(1));
    }
}
