//! A fitted feature pipeline and network, with its persisted document.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{NrnError, Result};
use crate::explain::{self, ExplanationTrace, GlobalExplanation, InclusionTest, SampleExplanation};
use crate::network::persist::{check_version, NetworkDocument, FORMAT_VERSION};
use crate::network::ArchitectureConfig;
use crate::preprocess::{BinarizationPlan, BinarizeMode, Dataset, FbftParams, FeaturePipeline, MinMaxScaler};
use crate::trainer::{self, EpochRecord, Split, TrainConfig};
use crate::Network;

/// Everything needed to fit a model from raw data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: ArchitectureConfig,
    pub training: TrainConfig,
    pub binarize: BinarizeMode,
    pub fbft: FbftParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub label: String,
    pub seed: u64,
    pub config_hash: String,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub pipeline: FeaturePipeline,
    pub network: Network,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub binarize: BinarizeMode,
    pub binarization_plan: Option<BinarizationPlan>,
    pub scalers: Vec<MinMaxScaler>,
    pub network: NetworkDocument,
    pub metadata: TrainingMetadata,
}

/// Model plus the per-epoch log of the run that produced it.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: Model,
    pub history: Vec<EpochRecord>,
}

impl Model {
    /// Fits binarization, initializes the network and trains it. One seed
    /// drives all three stages through fixed offsets.
    pub fn fit(train: &Dataset, val: Option<&Dataset>, cfg: &ModelConfig, seed: u64, label: &str) -> Result<FitOutcome> {
        if !train.has_both_classes() {
            return Err(NrnError::SingleClass);
        }
        let pipeline = FeaturePipeline::fit(train, cfg.binarize, &cfg.fbft, seed)?;
        let x_train = pipeline.transform(train.features.view())?;
        let x_val = val.map(|v| pipeline.transform(v.features.view())).transpose()?;
        let network = Network::init(train.feature_names.clone(), pipeline.predicates(), &cfg.architecture, seed.wrapping_add(1))?;
        let tc = TrainConfig { seed: seed.wrapping_add(2), ..cfg.training.clone() };
        let val_split = match (&x_val, val) {
            (Some(x), Some(v)) => Some(Split { x: x.view(), y: &v.labels }),
            _ => None,
        };
        let out = trainer::train(network, Split { x: x_train.view(), y: &train.labels }, val_split, &tc)?;
        let metadata = TrainingMetadata {
            label: label.to_string(),
            seed,
            config_hash: String::new(),
            best_epoch: out.best_epoch,
            epochs_run: out.history.len(),
            best_val_auc: out.best_val_auc,
        };
        Ok(FitOutcome { model: Model { pipeline, network: out.network, metadata }, history: out.history })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.pipeline.feature_names
    }

    pub fn predict(&self, raw: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let x = self.pipeline.transform(raw)?;
        self.network.predict(x.view())
    }

    pub fn explain_tree(&self, raw: ArrayView1<'_, f64>, test: InclusionTest) -> Result<ExplanationTrace> {
        explain::explain_prediction(&self.network, &self.pipeline, raw, test)
    }

    /// Simplified single-conjunction explanation of one raw row, for the
    /// predicted class.
    pub fn explain(&self, raw: ArrayView1<'_, f64>) -> Result<SampleExplanation> {
        let trace = self.explain_tree(raw, InclusionTest::default())?;
        Ok(explain::simplify(&trace.tree, raw.as_slice().unwrap_or(&raw.to_vec()), trace.output))
    }

    pub fn feature_importance(&self) -> Vec<f64> {
        explain::feature_importance(&self.network)
    }

    pub fn global_explanation(
        &self,
        raw: ArrayView2<'_, f64>,
        confidence_percentile: f64,
        weight_quantile: f64,
    ) -> Result<GlobalExplanation> {
        let x = self.pipeline.transform(raw)?;
        let p = self.network.predict(x.view())?;
        explain::global_explanation(&self.network, &self.pipeline, x.view(), &p, confidence_percentile, weight_quantile)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            format_version: FORMAT_VERSION,
            feature_names: self.pipeline.feature_names.clone(),
            binarize: self.pipeline.mode,
            binarization_plan: self.pipeline.plan.clone(),
            scalers: self.pipeline.scalers.clone(),
            network: self.network.to_document(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.format_version > FORMAT_VERSION {
            return Err(NrnError::Version { found: doc.format_version, supported: FORMAT_VERSION });
        }
        if doc.scalers.len() != doc.feature_names.len() {
            return Err(NrnError::Structure("one scaler per feature expected".into()));
        }
        if let Some(plan) = &doc.binarization_plan {
            if plan.thresholds.len() != doc.feature_names.len() {
                return Err(NrnError::Structure("binarization plan does not cover the schema".into()));
            }
        }
        let pipeline = FeaturePipeline::from_plan(doc.feature_names, doc.scalers, doc.binarize, doc.binarization_plan);
        let network = Network::from_document(doc.network)?;
        if network.predicates() != pipeline.predicates().as_slice() {
            return Err(NrnError::Structure("network predicates disagree with the binarization plan".into()));
        }
        Ok(Self { pipeline, network, metadata: doc.metadata })
    }

    /// Deterministic JSON text: fixed field order, no timestamps.
    pub fn save(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model document serializes")
    }

    pub fn load(text: &str) -> Result<Self> {
        check_version(text)?;
        Self::from_document(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((n, 3), || rng.gen_range(-5.0..5.0));
        let y = x.outer_iter().map(|r| u8::from(r[0] > 1.0 || r[2] < -2.0)).collect();
        Dataset::new(vec!["a".into(), "b".into(), "c".into()], x, y).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let d = data(300, 1);
        let cfg = ModelConfig { training: TrainConfig { epochs: 5, ..Default::default() }, ..Default::default() };
        let m = Model::fit(&d, Some(&d), &cfg, 9, "y").unwrap().model;
        let text = m.save();
        let back = Model::load(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.save(), text);
        let held = data(50, 2);
        let (p, q) = (m.predict(held.features.view()).unwrap(), back.predict(held.features.view()).unwrap());
        assert!(p.iter().zip(&q).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn explanations_hold_on_their_rows() {
        let d = data(400, 3);
        let cfg = ModelConfig { training: TrainConfig { epochs: 40, ..Default::default() }, ..Default::default() };
        let m = Model::fit(&d, Some(&d), &cfg, 4, "y").unwrap().model;
        for row in d.features.outer_iter().take(60) {
            let e = m.explain(row).unwrap();
            assert!(e.holds(row.as_slice().unwrap()), "{e}");
        }
    }

    #[test]
    fn rejects_newer_documents() {
        let d = data(100, 5);
        let cfg = ModelConfig { training: TrainConfig { epochs: 1, ..Default::default() }, ..Default::default() };
        let m = Model::fit(&d, None, &cfg, 1, "y").unwrap().model;
        let text = m.save().replacen("\"format_version\": 1", "\"format_version\": 7", 1);
        assert!(matches!(Model::load(&text), Err(NrnError::Version { found: 7, .. })));
    }
}
