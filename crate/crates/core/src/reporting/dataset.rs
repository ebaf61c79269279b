//! CSV ingestion into a standardized, split tabular dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{LabeledData, TrainData};

/// Row indices of the three splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// `(train, valid, test)` sizes: `floor(0.42 N)`, `floor(0.25 N)`, rest.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 42 / 100;
    let valid = n * 25 / 100;
    (train, valid, n - train - valid)
}

#[derive(Debug, Clone)]
pub struct TabularDataset {
    pub feature_names: Vec<String>,
    /// Standardized with training-split statistics.
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub splits: Splits,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn subset(&self, rows: &[usize]) -> LabeledData {
        LabeledData {
            x: self.features.select(Axis(0), rows),
            y: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn train_data(&self) -> TrainData {
        TrainData {
            train: self.subset(&self.splits.train),
            valid: self.subset(&self.splits.valid),
            n_classes: self.n_classes(),
        }
    }

    pub fn test_data(&self) -> LabeledData {
        self.subset(&self.splits.test)
    }
}

enum Column {
    Numeric,
    /// Sorted distinct values, one-hot encoded.
    Categorical(Vec<String>),
}

/// Reads a headed CSV, one-hot encodes non-numeric feature columns, maps
/// labels to `0..C`, shuffles with `split_seed` and standardizes.
///
/// A feature column is categorical when its first data cell is not a
/// number; a non-numeric cell in a numeric column is an error.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, split_seed: u64) -> Result<TabularDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    from_rows(path, &header, &rows, label_column, split_seed)
}

/// [`load_csv`] on already-parsed cells; `path` only labels errors.
pub fn from_rows(
    path: &Path,
    header: &[String],
    rows: &[Vec<String>],
    label_column: &str,
    split_seed: u64,
) -> Result<TabularDataset> {
    let err = |row: usize, message: String| Error::Ingestion {
        path: PathBuf::from(path),
        row,
        message,
    };
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| err(1, format!("missing label column {label_column:?}")))?;
    if rows.is_empty() {
        return Err(err(2, "no data rows".into()));
    }
    // line numbers are 1-based and the header is line 1
    let line = |i: usize| i + 2;
    if let Some(i) = rows.iter().position(|r| r.len() != header.len()) {
        return Err(err(line(i), format!("expected {} cells, found {}", header.len(), rows[i].len())));
    }

    let columns: Vec<(usize, Column)> = (0..header.len())
        .filter(|&c| c != label_idx)
        .map(|c| {
            if parse_number(&rows[0][c]).is_some() {
                (c, Column::Numeric)
            } else {
                let values: BTreeSet<&str> = rows.iter().map(|r| r[c].as_str()).collect();
                (c, Column::Categorical(values.into_iter().map(str::to_owned).collect()))
            }
        })
        .collect();

    let mut feature_names = Vec::new();
    for (c, col) in &columns {
        match col {
            Column::Numeric => feature_names.push(header[*c].clone()),
            Column::Categorical(values) => {
                feature_names.extend(values.iter().map(|v| format!("{}={v}", header[*c])));
            }
        }
    }

    let n = rows.len();
    let mut features = Array2::<f64>::zeros((n, feature_names.len()));
    for (i, row) in rows.iter().enumerate() {
        let mut j = 0;
        for (c, col) in &columns {
            let cell = &row[*c];
            match col {
                Column::Numeric => {
                    features[[i, j]] = parse_number(cell).ok_or_else(|| {
                        err(line(i), format!("column {:?}: non-numeric value {cell:?}", header[*c]))
                    })?;
                    j += 1;
                }
                Column::Categorical(values) => {
                    let k = values.binary_search(cell).expect("value collected from the same rows");
                    features[[i, j + k]] = 1.0;
                    j += values.len();
                }
            }
        }
    }

    let raw_labels: Vec<&str> = rows.iter().map(|r| r[label_idx].as_str()).collect();
    if let Some(i) = raw_labels.iter().position(|l| l.is_empty()) {
        return Err(err(line(i), "empty label".into()));
    }
    let class_names = ordered_classes(&raw_labels);
    if class_names.len() < 2 {
        return Err(err(2, format!("label column {label_column:?} has a single class")));
    }
    let class_index: BTreeMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels: Vec<usize> = raw_labels.iter().map(|l| class_index[l]).collect();

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let (n_train, n_valid, _) = split_sizes(n);
    let splits = Splits {
        train: perm[..n_train].to_vec(),
        valid: perm[n_train..n_train + n_valid].to_vec(),
        test: perm[n_train + n_valid..].to_vec(),
    };
    standardize(&mut features, &splits.train);

    Ok(TabularDataset {
        feature_names,
        features,
        labels,
        class_names,
        splits,
    })
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Numeric labels sort numerically, anything else lexicographically.
fn ordered_classes(labels: &[&str]) -> Vec<String> {
    let distinct: BTreeSet<&str> = labels.iter().copied().collect();
    let mut classes: Vec<&str> = distinct.into_iter().collect();
    if classes.iter().all(|c| parse_number(c).is_some()) {
        classes.sort_by(|a, b| parse_number(a).unwrap().total_cmp(&parse_number(b).unwrap()));
    }
    classes.into_iter().map(str::to_owned).collect()
}

/// Zero mean, unit variance per column using only `rows` for the
/// statistics. Constant columns are centered only.
pub fn standardize(features: &mut Array2<f64>, rows: &[usize]) {
    if rows.is_empty() {
        return;
    }
    let reference = features.select(Axis(0), rows);
    let count = rows.len() as f64;
    for (j, mut column) in features.columns_mut().into_iter().enumerate() {
        let col = reference.column(j);
        let mean = col.sum() / count;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        column.mapv_inplace(|v| (v - mean) / std);
    }
}
