//! Binarization of numeric features from decision-tree split thresholds,
//! and the fitted pipeline from raw rows to predicate truth values.

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cart::fit_gini_tree;
use super::{Dataset, MinMaxScaler};
use crate::condition::{format_sig6, CmpOp, ThresholdCondition};
use crate::error::{NrnError, Result};
use crate::network::Predicate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbftParams {
    pub tree_num: usize,
    pub tree_depth: usize,
    pub feature_selection: f64,
    pub thresh_round: u32,
}

impl Default for FbftParams {
    fn default() -> Self {
        Self { tree_num: 11, tree_depth: 6, feature_selection: 0.65, thresh_round: 4 }
    }
}

/// Sorted, deduplicated thresholds per feature; each yields a column `1{f <= t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarizationPlan {
    pub thresholds: Vec<Vec<f64>>,
    /// Set when the labels held a single class and no tree could split.
    pub degenerate: bool,
}

impl BinarizationPlan {
    pub fn is_empty(&self) -> bool {
        self.thresholds.iter().all(Vec::is_empty)
    }
}

fn round_to(v: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (v * scale).round() / scale
}

/// Fits `tree_num` depth-limited Gini trees on bootstrap resamples, each over
/// a random `ceil(feature_selection * m)` feature subset, and collects their
/// rounded split thresholds.
pub fn fbft_fit(data: &Dataset, params: &FbftParams, seed: u64) -> Result<BinarizationPlan> {
    if params.tree_num == 0 || params.tree_depth == 0 {
        return Err(NrnError::InvalidParameter("fbft needs tree_num >= 1 and tree_depth >= 1".into()));
    }
    if !(params.feature_selection > 0.0 && params.feature_selection <= 1.0) {
        return Err(NrnError::InvalidParameter("fbft_feature_selection must be in (0, 1]".into()));
    }
    let m = data.n_features();
    let n = data.n_samples();
    let mut thresholds = vec![Vec::new(); m];
    if !data.has_both_classes() || m == 0 {
        log::warn!("binarization skipped: training labels hold a single class");
        return Ok(BinarizationPlan { thresholds, degenerate: true });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ((params.feature_selection * m as f64).ceil() as usize).clamp(1, m);
    for _ in 0..params.tree_num {
        let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut features = sample(&mut rng, m, k).into_vec();
        features.sort_unstable();
        for split in fit_gini_tree(data.features.view(), &data.labels, &rows, &features, params.tree_depth) {
            thresholds[split.feature].push(round_to(split.threshold, params.thresh_round));
        }
    }
    for t in &mut thresholds {
        t.sort_by(f64::total_cmp);
        t.dedup();
    }
    Ok(BinarizationPlan { thresholds, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinarizeMode {
    /// Features with thresholds become binary columns; the rest pass through scaled.
    #[default]
    Replace,
    /// Every feature passes through min-max scaled.
    None,
}

/// How one predicate column is computed from the raw row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ColumnSpec {
    Threshold { feature: usize, threshold: f64 },
    Scaled { feature: usize },
}

impl ColumnSpec {
    pub fn feature(&self) -> usize {
        match *self {
            ColumnSpec::Threshold { feature, .. } | ColumnSpec::Scaled { feature } => feature,
        }
    }
}

/// Fitted mapping from raw feature rows to predicate-space rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub feature_names: Vec<String>,
    pub scalers: Vec<MinMaxScaler>,
    pub mode: BinarizeMode,
    pub plan: Option<BinarizationPlan>,
    pub columns: Vec<ColumnSpec>,
}

impl FeaturePipeline {
    pub fn fit(train: &Dataset, mode: BinarizeMode, fbft: &FbftParams, seed: u64) -> Result<Self> {
        let plan = match mode {
            BinarizeMode::Replace => Some(fbft_fit(train, fbft, seed)?),
            BinarizeMode::None => None,
        };
        let scalers = (0..train.n_features()).map(|j| MinMaxScaler::fit(train.column(j))).collect();
        Ok(Self::from_plan(train.feature_names.clone(), scalers, mode, plan))
    }

    pub fn from_plan(
        feature_names: Vec<String>,
        scalers: Vec<MinMaxScaler>,
        mode: BinarizeMode,
        plan: Option<BinarizationPlan>,
    ) -> Self {
        let mut columns = Vec::new();
        for feature in 0..feature_names.len() {
            match plan.as_ref().map(|p| p.thresholds[feature].as_slice()) {
                Some(ts) if !ts.is_empty() => {
                    columns.extend(ts.iter().map(|&threshold| ColumnSpec::Threshold { feature, threshold }))
                }
                _ => columns.push(ColumnSpec::Scaled { feature }),
            }
        }
        Self { feature_names, scalers, mode, plan, columns }
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn predicates(&self) -> Vec<Predicate> {
        self.columns
            .iter()
            .map(|spec| match *spec {
                ColumnSpec::Threshold { feature, threshold } => {
                    let condition = ThresholdCondition::new(feature, &self.feature_names[feature], CmpOp::Le, threshold);
                    Predicate {
                        feature_index: feature,
                        name: format!("{} <= {}", self.feature_names[feature], format_sig6(threshold)),
                        condition: Some(condition),
                    }
                }
                ColumnSpec::Scaled { feature } => Predicate {
                    feature_index: feature,
                    name: self.feature_names[feature].clone(),
                    condition: None,
                },
            })
            .collect()
    }

    pub fn transform(&self, raw: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if raw.ncols() != self.feature_names.len() {
            return Err(NrnError::DimensionMismatch {
                what: "raw feature columns",
                expected: self.feature_names.len(),
                found: raw.ncols(),
            });
        }
        Ok(Array2::from_shape_fn((raw.nrows(), self.columns.len()), |(r, c)| match self.columns[c] {
            ColumnSpec::Threshold { feature, threshold } => {
                if raw[[r, feature]] <= threshold {
                    1.0
                } else {
                    0.0
                }
            }
            ColumnSpec::Scaled { feature } => self.scalers[feature].scale(raw[[r, feature]]),
        }))
    }
}

/// Applies a plan to `data`, scaling pass-through features on `data` itself.
pub fn fbft_transform(plan: &BinarizationPlan, data: &Dataset) -> Result<(Array2<f64>, Vec<Predicate>)> {
    if plan.thresholds.len() != data.n_features() {
        return Err(NrnError::Schema {
            missing: Vec::new(),
            extra: vec![format!("plan covers {} features, data has {}", plan.thresholds.len(), data.n_features())],
        });
    }
    let scalers = (0..data.n_features()).map(|j| MinMaxScaler::fit(data.column(j))).collect();
    let pipe = FeaturePipeline::from_plan(data.feature_names.clone(), scalers, BinarizeMode::Replace, Some(plan.clone()));
    Ok((pipe.transform(data.features.view())?, pipe.predicates()))
}
