//! Dataset ingestion and the feature pipeline that maps raw columns to
//! predicate truth values.

mod association;
mod binarize;
mod cart;

use std::io::Read;
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NrnError, Result};

pub use association::{association_score, AssociationScorer, BinnedMutualInformation};
pub use binarize::{fbft_fit, fbft_transform, BinarizationPlan, BinarizeMode, ColumnSpec, FbftParams, FeaturePipeline};
pub use cart::{fit_gini_tree, SplitNode};

/// Labeled tabular data: `features` is `(n, m)`, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(NrnError::BadValue { row, column: column.to_string(), message: "missing value".into() });
    }
    let v: f64 = s.parse().map_err(|_| NrnError::BadValue {
        row,
        column: column.to_string(),
        message: format!("`{s}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(NrnError::BadValue { row, column: column.to_string(), message: "non-finite value".into() });
    }
    Ok(v)
}

fn parse_label(raw: &str, row: usize, column: &str) -> Result<u8> {
    let v = parse_cell(raw, row, column)?;
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(NrnError::NonBinaryLabel(raw.trim().to_string()))
    }
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.ncols() != feature_names.len() {
            return Err(NrnError::DimensionMismatch {
                what: "feature columns",
                expected: feature_names.len(),
                found: features.ncols(),
            });
        }
        if features.nrows() != labels.len() {
            return Err(NrnError::DimensionMismatch { what: "labels", expected: features.nrows(), found: labels.len() });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(NrnError::NonBinaryLabel(bad.to_string()));
        }
        Ok(Self { feature_names, features, labels })
    }

    /// Reads a headered CSV; every column except `label` is a numeric feature.
    /// Rows with missing or non-numeric cells are rejected.
    pub fn from_csv<R: Read>(reader: R, label: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let label_idx = headers
            .iter()
            .position(|h| h == label)
            .ok_or_else(|| NrnError::MissingColumn(label.to_string()))?;
        let feature_names: Vec<String> =
            headers.iter().enumerate().filter(|&(i, _)| i != label_idx).map(|(_, h)| h.clone()).collect();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            let row = r + 1;
            for (i, cell) in record.iter().enumerate() {
                if i == label_idx {
                    labels.push(parse_label(cell, row, &headers[i])?);
                } else {
                    values.push(parse_cell(cell, row, &headers[i])?);
                }
            }
        }
        let n = labels.len();
        let features = Array2::from_shape_vec((n, feature_names.len()), values)
            .map_err(|e| NrnError::Structure(e.to_string()))?;
        Self::new(feature_names, features, labels)
    }

    pub fn from_path(path: impl AsRef<Path>, label: &str) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?, label)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.features.column(j)
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&0) && self.labels.contains(&1)
    }
}

/// Reads feature columns by name, in `feature_names` order. An optional
/// label column is ignored; any other unknown or missing column is a schema error.
pub fn read_features<R: Read>(reader: R, feature_names: &[String], label: Option<&str>) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let missing: Vec<String> = feature_names.iter().filter(|f| !headers.contains(f)).cloned().collect();
    let extra: Vec<String> = headers
        .iter()
        .filter(|h| !feature_names.contains(h) && Some(h.as_str()) != label)
        .cloned()
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(NrnError::Schema { missing, extra });
    }
    let positions: Vec<usize> =
        feature_names.iter().map(|f| headers.iter().position(|h| h == f).expect("checked above")).collect();
    let mut values = Vec::new();
    let mut n = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        for &p in &positions {
            values.push(parse_cell(record.get(p).unwrap_or(""), r + 1, &headers[p])?);
        }
        n += 1;
    }
    Array2::from_shape_vec((n, feature_names.len()), values).map_err(|e| NrnError::Structure(e.to_string()))
}

/// Min-max scaler for one column with its inverse map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn fit(column: ArrayView1<'_, f64>) -> Self {
        let min = column.iter().copied().fold(f64::INFINITY, f64::min);
        let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min.is_finite() {
            Self { min, max }
        } else {
            Self { min: 0.0, max: 0.0 }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max <= self.min
    }

    /// Scaled value, clipped into `[0, 1]` for values outside the fitted range.
    /// Constant columns map to 0.5.
    pub fn scale(&self, v: f64) -> f64 {
        if self.is_constant() {
            0.5
        } else {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }

    pub fn inverse(&self, s: f64) -> f64 {
        if self.is_constant() {
            self.min
        } else {
            self.min + s * (self.max - self.min)
        }
    }
}

/// Scales a column into `[0, 1]` and returns the scaler for the inverse map.
pub fn minmax_scale(column: ArrayView1<'_, f64>) -> (Vec<f64>, MinMaxScaler) {
    let scaler = MinMaxScaler::fit(column);
    (column.iter().map(|&v| scaler.scale(v)).collect(), scaler)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub const TRAIN_CAP: usize = 10_000;
pub const EVAL_CAP: usize = 50_000;

/// Random 60% train (capped at 10 000 rows); the remainder split evenly into
/// validation and test, each capped at 50 000 rows.
pub fn split_dataset(n: usize, seed: u64) -> Splits {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 6 / 10;
    let rest = &perm[n_train..];
    let n_val = rest.len() / 2;
    Splits {
        train: perm[..n_train.min(TRAIN_CAP)].to_vec(),
        val: rest[..n_val.min(EVAL_CAP)].to_vec(),
        test: rest[n_val..][..(rest.len() - n_val).min(EVAL_CAP)].to_vec(),
    }
}

/// Number of cross-validation folds for a training split of `n_train` rows.
pub fn cv_folds(n_train: usize) -> usize {
    match n_train {
        n if n > 6000 => 1,
        n if n >= 3000 => 2,
        n if n >= 1000 => 3,
        _ => 5,
    }
}
