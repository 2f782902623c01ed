//! On-disk task collections: a `manifest.json` next to one train and one test
//! CSV per task. CSVs carry a `x1,...,xd,y` header and one sample per row.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{TaskCollection, TaskDataset};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub train_csv: String,
    pub test_csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dim: usize,
    pub tasks: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))
    }
}

pub fn save_collection(collection: &TaskCollection, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(collection.len());
    for task in collection.tasks() {
        let train_csv = format!("{}_train.csv", task.id);
        let test_csv = format!("{}_test.csv", task.id);
        write_split(&dir.join(&train_csv), &task.x_train, &task.y_train)?;
        write_split(&dir.join(&test_csv), &task.x_test, &task.y_test)?;
        entries.push(ManifestEntry {
            id: task.id.clone(),
            train_csv,
            test_csv,
        });
    }
    let manifest = Manifest {
        dim: collection.dim(),
        tasks: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Loads every task with both splits.
pub fn load_collection(dir: &Path) -> Result<TaskCollection> {
    load(dir, true)
}

/// Loads training splits only; test CSVs are never opened.
pub fn load_train_only(dir: &Path) -> Result<TaskCollection> {
    load(dir, false)
}

fn load(dir: &Path, with_test: bool) -> Result<TaskCollection> {
    let manifest = Manifest::read(dir)?;
    let mut tasks = Vec::with_capacity(manifest.tasks.len());
    for entry in &manifest.tasks {
        let (x_train, y_train) = read_split(&dir.join(&entry.train_csv), manifest.dim)
            .map_err(|e| e.for_task(&entry.id))?;
        let task = if with_test {
            let (x_test, y_test) = read_split(&dir.join(&entry.test_csv), manifest.dim)
                .map_err(|e| e.for_task(&entry.id))?;
            TaskDataset::new(entry.id.clone(), x_train, y_train, x_test, y_test)?
        } else {
            TaskDataset::train_only(entry.id.clone(), x_train, y_train)?
        };
        tasks.push(task);
    }
    TaskCollection::with_dim(manifest.dim, tasks)
}

pub(crate) fn fmt_f64(v: f64) -> String {
    // Debug formatting is the shortest string that parses back to the same bits.
    format!("{v:?}")
}

fn write_split(path: &Path, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(io_err)?;
    for i in 0..x.nrows() {
        let mut row: Vec<String> = x.row(i).iter().map(|&v| fmt_f64(v)).collect();
        row.push(fmt_f64(y[i]));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_split(path: &PathBuf, dim: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if header.len() != dim + 1 {
        return Err(Error::Shape(format!(
            "{}: {} feature columns, expected {dim}",
            path.display(),
            header.len().saturating_sub(1)
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| Error::format(path, format!("row {line}: {e}")))?;
        if record.len() != dim + 1 {
            return Err(Error::Shape(format!(
                "{} row {line}: {} columns, expected {}",
                path.display(),
                record.len(),
                dim + 1
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::format(
                    path,
                    format!("row {line}, column {}: non-numeric cell `{cell}`", j + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    path,
                    format!("row {line}, column {}: non-finite value", j + 1),
                ));
            }
            if j < dim {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    let n = ys.len();
    Ok((DMatrix::from_row_slice(n, dim, &xs), DVector::from_vec(ys)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{generate_synthetic, SyntheticConfig};
    use proptest::prelude::*;

    fn small() -> TaskCollection {
        let cfg = SyntheticConfig {
            num_tasks: 2,
            dim: 4,
            n_train: 5,
            n_test: 3,
            num_clusters: 1,
            tau_between: 0.0,
            tau_within: 1.0,
            noise_sigma: 0.1,
            center_scale: 1.0,
            seed: 3,
        };
        generate_synthetic(&cfg).unwrap().0
    }

    #[test]
    fn loads_two_tasks() {
        let dir = tempfile::tempdir().unwrap();
        save_collection(&small(), dir.path()).unwrap();
        let loaded = load_collection(dir.path()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded, small());
    }

    #[test]
    fn single_task_writes_two_csvs_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let one = TaskCollection::new(vec![small().tasks()[0].clone()]).unwrap();
        save_collection(&one, dir.path()).unwrap();
        let mut names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(
            names,
            vec!["manifest.json", "task_000_test.csv", "task_000_train.csv"]
        );
    }

    #[test]
    fn empty_collection_has_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let empty = TaskCollection::with_dim(3, vec![]).unwrap();
        save_collection(&empty, dir.path()).unwrap();
        let manifest = Manifest::read(dir.path()).unwrap();
        assert_eq!(manifest.dim, 3);
        assert!(manifest.tasks.is_empty());
        assert!(load_collection(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn dimension_mismatch_names_the_task() {
        let dir = tempfile::tempdir().unwrap();
        save_collection(&small(), dir.path()).unwrap();
        fs::write(
            dir.path().join("task_001_train.csv"),
            "x1,x2,x3,y\n1,2,3,4\n",
        )
        .unwrap();
        let err = load_collection(dir.path()).unwrap_err().to_string();
        assert!(
            err.contains("task_001") && err.contains("3 feature columns"),
            "{err}"
        );
    }

    #[test]
    fn non_numeric_cell_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        save_collection(&small(), dir.path()).unwrap();
        fs::write(
            dir.path().join("task_000_test.csv"),
            "x1,x2,x3,x4,y\n1,2,3,4,5\n1,2,abc,4,5\n",
        )
        .unwrap();
        let err = load_collection(dir.path()).unwrap_err().to_string();
        assert!(
            err.contains("task_000") && err.contains("row 3") && err.contains("abc"),
            "{err}"
        );
    }

    #[test]
    fn missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_collection(dir.path()).unwrap_err().to_string();
        assert!(err.contains("manifest.json"), "{err}");
    }

    #[test]
    fn train_only_ignores_missing_test_files() {
        let dir = tempfile::tempdir().unwrap();
        save_collection(&small(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("task_000_test.csv")).unwrap();
        fs::remove_file(dir.path().join("task_001_test.csv")).unwrap();
        let c = load_train_only(dir.path()).unwrap();
        assert_eq!(c.tasks()[1].x_train, small().tasks()[1].x_train);
        assert_eq!(c.tasks()[1].n_test(), 0);
        assert!(load_collection(dir.path()).is_err());
    }

    #[test]
    fn unwritable_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        assert!(save_collection(&small(), &blocker.join("sub")).is_err());
    }

    fn arb_collection() -> impl Strategy<Value = TaskCollection> {
        (1usize..4, 1usize..4, 0usize..4, 0usize..3).prop_flat_map(|(tasks, d, n_train, n_test)| {
            let cells = (n_train + n_test) * (d + 1);
            proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, cells), tasks)
                .prop_map(move |all| {
                    let tasks = all
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| {
                            let (train, test) = v.split_at(n_train * (d + 1));
                            let x_train =
                                DMatrix::from_row_slice(n_train, d, &train[..n_train * d]);
                            let y_train = DVector::from_column_slice(&train[n_train * d..]);
                            let x_test = DMatrix::from_row_slice(n_test, d, &test[..n_test * d]);
                            let y_test = DVector::from_column_slice(&test[n_test * d..]);
                            TaskDataset::new(format!("t{i}"), x_train, y_train, x_test, y_test)
                                .unwrap()
                        })
                        .collect();
                    TaskCollection::with_dim(d, tasks).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn save_load_round_trips_bitwise(c in arb_collection()) {
            let dir = tempfile::tempdir().unwrap();
            save_collection(&c, dir.path()).unwrap();
            let back = load_collection(dir.path()).unwrap();
            for (a, b) in c.tasks().iter().zip(back.tasks()) {
                let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
                prop_assert_eq!(bits(&a.x_train), bits(&b.x_train));
                prop_assert_eq!(bits(&a.x_test), bits(&b.x_test));
                prop_assert_eq!(a.y_train.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                                b.y_train.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
                prop_assert_eq!(a.y_test.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                                b.y_test.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            }
            prop_assert_eq!(back, c);
        }
    }
}
