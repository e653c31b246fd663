//! Flat run configuration. Keys follow the hyper-parameter names used in
//! R-NRN tuning tables so ranges can be copied over directly.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nrn_core::model::ModelConfig;
use nrn_core::network::ArchitectureConfig;
use nrn_core::preprocess::{BinarizeMode, FbftParams};
use nrn_core::trainer::{PruneStrategy, TrainConfig};
use nrn_core::NormalForm;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

/// Everything a training run depends on. Paths are carried along but are
/// not part of the configuration hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub label: Option<String>,
    pub seed: u64,
    pub out: Option<PathBuf>,

    pub n_layers: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub layer_sizes: Vec<usize>,
    pub n_selected_features_input: usize,
    pub n_selected_features_internal: usize,
    pub n_selected_features_output: usize,
    pub normal_form: NormalForm,
    pub weight_init: f64,
    pub add_negations: bool,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub perform_prune_quantile: f64,
    pub perform_prune_pc: usize,
    pub ip_pc: usize,
    pub ip_plateau_count_pc: usize,
    pub ucb_scale: f64,
    pub prune_strategy: PruneStrategy,
    pub delta: f64,
    pub early_stopping_plateau_count: usize,
    pub t_0: usize,
    pub t_mult: usize,
    pub use_l1: bool,
    pub l1_lambda: f64,
    pub use_weight_decay: bool,
    pub weight_decay_alpha: f64,
    pub use_swa: bool,
    pub use_lookahead: bool,

    pub binarize: BinarizeMode,
    pub fbft_tree_num: usize,
    pub fbft_tree_depth: usize,
    pub fbft_feature_selection: f64,
    pub fbft_thresh_round: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        let arch = ArchitectureConfig::default();
        let train = TrainConfig::default();
        let fbft = FbftParams::default();
        Self {
            data: None,
            label: None,
            seed: 0,
            out: None,
            n_layers: arch.n_layers,
            layer_sizes: arch.layer_sizes,
            n_selected_features_input: arch.n_selected_features_input,
            n_selected_features_internal: arch.n_selected_features_internal,
            n_selected_features_output: arch.n_selected_features_output,
            normal_form: arch.normal_form,
            weight_init: arch.weight_init,
            add_negations: arch.add_negations,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            perform_prune_quantile: train.prune_quantile,
            perform_prune_pc: train.kappa,
            ip_pc: train.iota,
            ip_plateau_count_pc: train.tau,
            ucb_scale: train.ucb_scale,
            prune_strategy: train.prune_strategy,
            delta: train.delta,
            early_stopping_plateau_count: train.early_stopping_plateau_count,
            t_0: train.t_0,
            t_mult: train.t_mult,
            use_l1: false,
            l1_lambda: 1e-3,
            use_weight_decay: false,
            weight_decay_alpha: 1e-3,
            use_swa: false,
            use_lookahead: false,
            binarize: BinarizeMode::default(),
            fbft_tree_num: fbft.tree_num,
            fbft_tree_depth: fbft.tree_depth,
            fbft_feature_selection: fbft.feature_selection,
            fbft_thresh_round: fbft.thresh_round,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Sizes {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match Sizes::deserialize(d)? {
        Sizes::One(n) => vec![n],
        Sizes::Many(v) => v,
    })
}

/// Parses one `key=value` override. The value is read as a TOML value and
/// falls back to a bare string, so `normal_form=cnf` works unquoted.
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (key, value) = s.split_once('=').with_context(|| format!("override `{s}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        bail!("override `{s}` has an empty key");
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

/// Layers a config file, then `overrides` in order, over the defaults.
pub fn load(file: Option<&Path>, overrides: &[(String, toml::Value)]) -> Result<RunConfig> {
    let mut table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => toml::Table::new(),
    };
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    let cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
    cfg.check_supported()?;
    Ok(cfg)
}

/// Tuning ranges. Values outside them are allowed with a warning.
const INT_RANGES: &[(&str, usize, usize)] = &[
    ("n_layers", 1, 6),
    ("n_selected_features_input", 2, 12),
    ("n_selected_features_internal", 2, 10),
    ("n_selected_features_output", 2, 10),
    ("perform_prune_pc", 1, 8),
    ("ip_pc", 0, 20),
    ("ip_plateau_count_pc", 10, 30),
    ("early_stopping_plateau_count", 25, 50),
    ("t_0", 2, 10),
    ("t_mult", 1, 5),
    ("fbft_tree_num", 2, 20),
    ("fbft_tree_depth", 2, 10),
    ("fbft_thresh_round", 2, 6),
];

const REAL_RANGES: &[(&str, f64, f64)] = &[
    ("perform_prune_quantile", 0.05, 0.9),
    ("ucb_scale", 1.0, 2.0),
    ("delta", 1.0, 12.0),
    ("weight_init", 0.01, 1.0),
    ("learning_rate", 0.0001, 0.15),
    ("l1_lambda", 0.00001, 0.1),
    ("weight_decay_alpha", 0.00001, 0.1),
    ("fbft_feature_selection", 0.3, 1.0),
];

impl RunConfig {
    fn check_supported(&self) -> Result<()> {
        if self.use_swa {
            bail!("unsupported option: use_swa (stochastic weight averaging is not implemented)");
        }
        if self.use_lookahead {
            bail!("unsupported option: use_lookahead (the Lookahead optimizer is not implemented)");
        }
        Ok(())
    }

    /// Messages for every value outside its tuning range.
    pub fn range_warnings(&self) -> Vec<String> {
        let json = serde_json::to_value(self).expect("config serializes");
        let mut out = Vec::new();
        for &(name, lo, hi) in INT_RANGES {
            let v = json[name].as_u64().unwrap_or_default() as usize;
            if v < lo || v > hi {
                out.push(format!("{name} = {v} is outside the usual range [{lo}, {hi}]"));
            }
        }
        for &(name, lo, hi) in REAL_RANGES {
            let v = json[name].as_f64().unwrap_or_default();
            if !(lo..=hi).contains(&v) {
                out.push(format!("{name} = {v} is outside the usual range [{lo}, {hi}]"));
            }
        }
        for &s in &self.layer_sizes {
            if !(2..=30).contains(&s) {
                out.push(format!("layer_sizes entry {s} is outside the usual range [2, 30]"));
            }
        }
        out
    }

    /// SHA-256 over the canonical JSON of the configuration without paths.
    pub fn hash(&self) -> String {
        let mut json = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = json.as_object_mut() {
            map.remove("data");
            map.remove("out");
        }
        // serde_json maps are sorted by key, which makes the text canonical.
        let text = serde_json::to_string(&json).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            architecture: ArchitectureConfig {
                n_layers: self.n_layers,
                layer_sizes: self.layer_sizes.clone(),
                n_selected_features_input: self.n_selected_features_input,
                n_selected_features_internal: self.n_selected_features_internal,
                n_selected_features_output: self.n_selected_features_output,
                normal_form: self.normal_form,
                weight_init: self.weight_init,
                add_negations: self.add_negations,
            },
            training: TrainConfig {
                epochs: self.epochs,
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
                prune_quantile: self.perform_prune_quantile,
                delta: self.delta,
                kappa: self.perform_prune_pc,
                tau: self.ip_plateau_count_pc,
                iota: self.ip_pc,
                prune_strategy: self.prune_strategy,
                ucb_scale: self.ucb_scale,
                l1_lambda: self.use_l1.then_some(self.l1_lambda),
                weight_decay: self.use_weight_decay.then_some(self.weight_decay_alpha),
                t_0: self.t_0,
                t_mult: self.t_mult,
                early_stopping_plateau_count: self.early_stopping_plateau_count,
                seed: self.seed,
                ..TrainConfig::default()
            },
            binarize: self.binarize,
            fbft: FbftParams {
                tree_num: self.fbft_tree_num,
                tree_depth: self.fbft_tree_depth,
                feature_selection: self.fbft_feature_selection,
                thresh_round: self.fbft_thresh_round,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[&str]) -> Vec<(String, toml::Value)> {
        pairs.iter().map(|p| parse_override(p).unwrap()).collect()
    }

    #[test]
    fn defaults_match_the_library() {
        let cfg = load(None, &[]).unwrap();
        let m = cfg.model_config();
        assert_eq!(m.architecture, ArchitectureConfig::default());
        assert_eq!(m.training, TrainConfig::default());
        assert_eq!(m.fbft, FbftParams::default());
        assert!(cfg.range_warnings().is_empty(), "{:?}", cfg.range_warnings());
    }

    #[test]
    fn file_and_flags_hash_alike() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "layer_sizes = 12\nnormal_form = \"cnf\"\nuse_l1 = true\nl1_lambda = 0.01\nprune_strategy = \"logic_class\"\n",
        )
        .unwrap();
        let from_file = load(Some(&path), &[]).unwrap();
        let from_flags =
            load(None, &set(&["layer_sizes=12", "normal_form=cnf", "use_l1=true", "l1_lambda=0.01", "prune_strategy=logic_class"]))
                .unwrap();
        assert_eq!(from_file, from_flags);
        assert_eq!(from_file.hash(), from_flags.hash());
        assert_eq!(from_file.layer_sizes, vec![12]);
        assert_eq!(from_file.model_config().training.l1_lambda, Some(0.01));
        assert_ne!(from_file.hash(), load(None, &[]).unwrap().hash());
    }

    #[test]
    fn paths_do_not_change_the_hash() {
        let a = load(None, &set(&["data=a.csv", "out=x"])).unwrap();
        let b = load(None, &set(&["data=b.csv", "out=y"])).unwrap();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn out_of_range_warns_only() {
        let cfg = load(None, &set(&["delta=40.0", "layer_sizes=[64, 8]"])).unwrap();
        let w = cfg.range_warnings();
        assert_eq!(w.len(), 2, "{w:?}");
        assert!(w[0].contains("delta"));
    }

    #[test]
    fn rejections() {
        assert!(load(None, &set(&["use_swa=true"])).unwrap_err().to_string().contains("unsupported"));
        assert!(load(None, &set(&["use_lookahead=true"])).is_err());
        assert!(load(None, &set(&["no_such_key=1"])).is_err());
        assert!(load(None, &set(&["normal_form=xnf"])).is_err());
        assert!(parse_override("novalue").is_err());
    }
}
