//! Ranking and attribution metrics.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NrnError, Result};
use crate::model::Model;
use crate::preprocess::Dataset;
use crate::scalar::Scalar;
use crate::stats::{average_ranks, pearson, spearman};

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Computed from average ranks in `O(n log n)`.
///
/// With a single output channel the micro average is the plain binary AUC.
pub fn roc_auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(NrnError::DimensionMismatch { what: "labels", expected: scores.len(), found: labels.len() });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(NrnError::SingleClass);
    }
    let s: Vec<f64> = scores.iter().map(|v| v.as_f64()).collect();
    if s.iter().any(|v| v.is_nan()) {
        return Err(NrnError::InvalidParameter("scores contain NaN".into()));
    }
    let ranks = average_ranks(&s);
    // Average ranks are multiples of 1/2, so doubling keeps the sum exact.
    let twice_rank_sum: f64 = ranks.iter().zip(labels).filter(|&(_, &l)| l == 1).map(|(r, _)| 2.0 * r).sum();
    let twice_u = twice_rank_sum - (n_pos * (n_pos + 1)) as f64;
    Ok(twice_u / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Change in AUC from permuting each raw feature column, correlated with an
/// importance vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleDeletion {
    pub base_auc: f64,
    pub delta_auc: Vec<f64>,
    pub spearman: f64,
    pub pearson: f64,
}

/// Permutes each raw column in turn with a seeded shuffle, rescoring through
/// `predict`. Fails when either vector has zero variance.
pub fn single_deletion<F>(
    predict: F,
    importance: &[f64],
    raw: ArrayView2<'_, f64>,
    labels: &[u8],
    seed: u64,
) -> Result<SingleDeletion>
where
    F: Fn(ArrayView2<'_, f64>) -> Result<Vec<f64>>,
{
    let m = raw.ncols();
    if importance.len() != m {
        return Err(NrnError::DimensionMismatch { what: "importance vector", expected: m, found: importance.len() });
    }
    let base_auc = roc_auc(&predict(raw)?, labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta_auc = Vec::with_capacity(m);
    let mut work: Array2<f64> = raw.to_owned();
    for j in 0..m {
        let mut perm: Vec<usize> = (0..raw.nrows()).collect();
        perm.shuffle(&mut rng);
        for (r, &src) in perm.iter().enumerate() {
            work[[r, j]] = raw[[src, j]];
        }
        delta_auc.push(base_auc - roc_auc(&predict(work.view())?, labels)?);
        work.column_mut(j).assign(&raw.column(j));
    }
    Ok(SingleDeletion {
        base_auc,
        spearman: spearman(importance, &delta_auc)?,
        pearson: pearson(importance, &delta_auc)?,
        delta_auc,
    })
}

/// Mean rule count of simplified explanations over `k` rows drawn without
/// replacement (all rows when `k` exceeds the row count).
pub fn explanation_size(model: &Model, raw: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<f64> {
    if k == 0 {
        return Err(NrnError::InvalidParameter("explanation sample count must be >= 1".into()));
    }
    if raw.nrows() == 0 {
        return Err(NrnError::InvalidParameter("no rows to explain".into()));
    }
    let rows = sample(&mut ChaCha8Rng::seed_from_u64(seed), raw.nrows(), k.min(raw.nrows())).into_vec();
    let mut total = 0usize;
    for &r in &rows {
        total += model.explain(raw.row(r))?.size();
    }
    Ok(total as f64 / rows.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub explanation_size: f64,
    /// `None` when the deletion deltas or the importances have zero variance.
    pub sd_spearman: Option<f64>,
    pub sd_pearson: Option<f64>,
    pub parameter_count: usize,
    /// Parameter count in thousands.
    pub parameter_count_k: f64,
    pub n_samples: usize,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

/// AUC, explanation size over `k` samples and single-deletion correlations
/// of the model's feature importance on a labeled dataset.
pub fn evaluate(model: &Model, data: &Dataset, k: usize, seed: u64) -> Result<EvalReport> {
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let scores = model.predict(data.features.view())?;
    let auc = roc_auc(&scores, &data.labels)?;
    timings.insert("auc".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let explanation_size = explanation_size(model, data.features.view(), k, seed)?;
    timings.insert("explanation_size".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let importance = model.feature_importance();
    let (sd_spearman, sd_pearson) =
        match single_deletion(|x| model.predict(x), &importance, data.features.view(), &data.labels, seed) {
            Ok(sd) => (Some(sd.spearman), Some(sd.pearson)),
            Err(NrnError::UndefinedCorrelation(why)) => {
                log::warn!("single-deletion correlation undefined: {why}");
                (None, None)
            }
            Err(e) => return Err(e),
        };
    timings.insert("single_deletion".to_string(), t.elapsed().as_secs_f64());

    let parameter_count = model.network.parameter_count();
    Ok(EvalReport {
        auc,
        explanation_size,
        sd_spearman,
        sd_pearson,
        parameter_count,
        parameter_count_k: parameter_count as f64 / 1000.0,
        n_samples: data.n_samples(),
        timings,
    })
}
