//! The reasoning network: predicate leaves feeding alternating
//! conjunction/disjunction blocks under a single root node.

use std::fmt;

use ndarray::{Array2, Array3, Array4, ArrayView2, ArrayView3};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::condition::ThresholdCondition;
use crate::error::{NrnError, Result};
use crate::logic::{block_forward_gathered, pre_activation_unchecked, BlockShape, LogicKind};
use crate::scalar::Scalar;

/// Leaf binding an input column to a displayable condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub feature_index: usize,
    pub name: String,
    /// Present for binarized columns (`f <= t`); absent for scaled pass-through columns.
    pub condition: Option<ThresholdCondition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalForm {
    Cnf,
    Dnf,
}

impl NormalForm {
    /// Kind of the block reading the predicates.
    pub fn first_kind(self) -> LogicKind {
        match self {
            NormalForm::Dnf => LogicKind::Conjunction,
            NormalForm::Cnf => LogicKind::Disjunction,
        }
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalForm::Cnf => "cnf",
            NormalForm::Dnf => "dnf",
        })
    }
}

/// Per output node, the indices it reads from the previous layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Connectivity(Vec<Vec<usize>>);

impl Connectivity {
    pub fn new(lists: Vec<Vec<usize>>) -> Self {
        Self(lists)
    }

    pub fn node(&self, o: usize) -> &[usize] {
        &self.0[o]
    }

    pub fn nodes(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub(crate) fn set(&mut self, o: usize, i: usize, source: usize) {
        self.0[o][i] = source;
    }

    /// Checks non-empty, equal-length, in-bounds, duplicate-free lists.
    pub fn validate(&self, out_size: usize, in_size: usize, source_width: usize) -> Result<()> {
        if self.0.len() != out_size {
            return Err(NrnError::Structure(format!(
                "connectivity has {} nodes, block has {out_size}",
                self.0.len()
            )));
        }
        for (o, list) in self.0.iter().enumerate() {
            if list.len() != in_size || list.is_empty() {
                return Err(NrnError::Structure(format!(
                    "node {o} reads {} inputs, expected {in_size}",
                    list.len()
                )));
            }
            for (k, &src) in list.iter().enumerate() {
                if src >= source_width {
                    return Err(NrnError::Structure(format!(
                        "node {o} reads index {src}, previous layer has width {source_width}"
                    )));
                }
                if list[..k].contains(&src) {
                    return Err(NrnError::Structure(format!("node {o} reads index {src} twice")));
                }
            }
        }
        Ok(())
    }
}

/// A layer of same-kind nodes with weights `(C, O, I)` and biases `(C, O)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicBlock<T> {
    kind: LogicKind,
    shape: BlockShape,
    weights: Array3<T>,
    betas: Array2<T>,
    connectivity: Connectivity,
}

impl<T: Scalar> LogicBlock<T> {
    pub fn new(
        kind: LogicKind,
        weights: Array3<T>,
        betas: Array2<T>,
        connectivity: Connectivity,
    ) -> Result<Self> {
        let d = weights.shape();
        let shape = BlockShape::new(d[0], d[1], d[2])?;
        if betas.shape() != [shape.channels, shape.out_size] {
            return Err(NrnError::DimensionMismatch {
                what: "block betas",
                expected: shape.channels * shape.out_size,
                found: betas.len(),
            });
        }
        if betas.iter().any(|&b| !(b >= T::zero())) {
            return Err(NrnError::InvalidParameter("block betas must be >= 0".into()));
        }
        if connectivity.nodes().len() != shape.out_size {
            return Err(NrnError::Structure("connectivity does not match block out_size".into()));
        }
        Ok(Self { kind, shape, weights, betas, connectivity })
    }

    pub fn kind(&self) -> LogicKind {
        self.kind
    }

    pub fn shape(&self) -> BlockShape {
        self.shape
    }

    pub fn weights(&self) -> &Array3<T> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Array3<T> {
        &mut self.weights
    }

    pub fn betas(&self) -> &Array2<T> {
        &self.betas
    }

    pub fn connectivity(&self) -> &Connectivity {
        &self.connectivity
    }

    pub(crate) fn connectivity_mut(&mut self) -> &mut Connectivity {
        &mut self.connectivity
    }

    /// Gathers each node's inputs from `(batch, C, P)` into `(batch, C, O, I)`.
    pub fn gather(&self, inputs: ArrayView3<'_, T>) -> Array4<T> {
        let batch = inputs.shape()[0];
        let s = self.shape;
        Array4::from_shape_fn((batch, s.channels, s.out_size, s.in_size), |(b, c, o, i)| {
            inputs[[b, c, self.connectivity.node(o)[i]]]
        })
    }

    pub fn forward(&self, inputs: ArrayView3<'_, T>) -> Result<Array3<T>> {
        let width = inputs.shape()[2];
        self.connectivity.validate(self.shape.out_size, self.shape.in_size, width)?;
        if inputs.shape()[1] != self.shape.channels {
            return Err(NrnError::DimensionMismatch {
                what: "input channels",
                expected: self.shape.channels,
                found: inputs.shape()[1],
            });
        }
        let gathered = self.gather(inputs);
        block_forward_gathered(self.shape, self.kind, self.weights.view(), self.betas.view(), gathered.view())
    }

    /// Pre-clamp activations `(batch, C, O)` for already gathered inputs.
    pub(crate) fn pre_activations(&self, gathered: &Array4<T>) -> Array3<T> {
        let batch = gathered.shape()[0];
        let s = self.shape;
        let mut pre = Array3::zeros((batch, s.channels, s.out_size));
        let mut w = vec![T::zero(); s.in_size];
        let mut x = vec![T::zero(); s.in_size];
        for b in 0..batch {
            for c in 0..s.channels {
                for o in 0..s.out_size {
                    for i in 0..s.in_size {
                        w[i] = self.weights[[c, o, i]];
                        x[i] = gathered[[b, c, o, i]];
                    }
                    pre[[b, c, o]] = pre_activation_unchecked(self.kind, self.betas[[c, o]], &w, &x);
                }
            }
        }
        pre
    }
}

/// Structure hyper-parameters for a freshly initialized network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub n_layers: usize,
    /// One size per hidden layer, or a single size shared by all of them.
    pub layer_sizes: Vec<usize>,
    pub n_selected_features_input: usize,
    pub n_selected_features_internal: usize,
    pub n_selected_features_output: usize,
    pub normal_form: NormalForm,
    pub weight_init: f64,
    pub add_negations: bool,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            n_layers: 2,
            layer_sizes: vec![16, 8],
            n_selected_features_input: 8,
            n_selected_features_internal: 4,
            n_selected_features_output: 4,
            normal_form: NormalForm::Dnf,
            weight_init: 0.2,
            add_negations: true,
        }
    }
}

impl ArchitectureConfig {
    /// Output sizes of every block, root included. A trailing hidden layer
    /// of size 1 doubles as the root.
    pub fn block_sizes(&self) -> Result<Vec<usize>> {
        if self.n_layers == 0 {
            return Err(NrnError::InvalidParameter("n_layers must be >= 1".into()));
        }
        let mut sizes = match self.layer_sizes.len() {
            1 => vec![self.layer_sizes[0]; self.n_layers],
            n if n == self.n_layers => self.layer_sizes.clone(),
            n => {
                return Err(NrnError::InvalidParameter(format!(
                    "layer_sizes has {n} entries for n_layers = {}",
                    self.n_layers
                )))
            }
        };
        if sizes.contains(&0) {
            return Err(NrnError::InvalidParameter("layer sizes must be >= 1".into()));
        }
        if *sizes.last().unwrap() != 1 {
            sizes.push(1);
        }
        Ok(sizes)
    }
}

/// Trained model state: predicates, blocks and the schema they were built on.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    feature_names: Vec<String>,
    predicates: Vec<Predicate>,
    blocks: Vec<LogicBlock<T>>,
    normal_form: NormalForm,
    channels: usize,
}

impl<T: Scalar> Network<T> {
    pub fn from_parts(
        feature_names: Vec<String>,
        predicates: Vec<Predicate>,
        blocks: Vec<LogicBlock<T>>,
        normal_form: NormalForm,
    ) -> Result<Self> {
        let channels = blocks.first().map(|b| b.shape().channels).ok_or(NrnError::EmptyNetwork)?;
        let net = Self { feature_names, predicates, blocks, normal_form, channels };
        net.validate()?;
        Ok(net)
    }

    /// Builds the alternating sparse structure with random connectivity and weights.
    pub fn init(
        feature_names: Vec<String>,
        predicates: Vec<Predicate>,
        config: &ArchitectureConfig,
        seed: u64,
    ) -> Result<Self> {
        let sizes = config.block_sizes()?;
        if predicates.is_empty() {
            return Err(NrnError::InvalidParameter("network needs at least one predicate".into()));
        }
        if !(config.weight_init > 0.0) {
            return Err(NrnError::InvalidParameter("weight_init must be > 0".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = sizes.len() - 1;
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut width = predicates.len();
        let mut kind = config.normal_form.first_kind();
        let hi = config.weight_init;
        let lo = 0.01 * hi;
        for (k, &out_size) in sizes.iter().enumerate() {
            let select = if k == 0 {
                config.n_selected_features_input
            } else if k == last {
                config.n_selected_features_output
            } else {
                config.n_selected_features_internal
            };
            if select == 0 || select > width {
                return Err(NrnError::InvalidParameter(format!(
                    "block {k} selects {select} inputs from a layer of width {width}"
                )));
            }
            let lists = (0..out_size)
                .map(|_| sample(&mut rng, width, select).into_vec())
                .collect();
            let weights = Array3::from_shape_simple_fn((1, out_size, select), || {
                let mag = rng.gen_range(lo..=hi);
                let negate = config.add_negations && rng.gen_bool(0.5);
                T::lit(if negate { -mag } else { mag })
            });
            let betas = Array2::from_elem((1, out_size), T::one());
            blocks.push(LogicBlock::new(kind, weights, betas, Connectivity::new(lists))?);
            width = out_size;
            kind = kind.dual();
        }
        Self::from_parts(feature_names, predicates, blocks, config.normal_form)
    }

    /// Structural audit: alternating kinds, single root, valid connectivity and
    /// predicate bindings.
    pub fn validate(&self) -> Result<()> {
        let root = self.blocks.last().ok_or(NrnError::EmptyNetwork)?;
        if root.shape().out_size != 1 {
            return Err(NrnError::Structure("root block must have a single output".into()));
        }
        if self.blocks[0].kind() != self.normal_form.first_kind() {
            return Err(NrnError::Structure("first block kind disagrees with normal form".into()));
        }
        let mut width = self.predicates.len();
        for (k, block) in self.blocks.iter().enumerate() {
            if k > 0 && block.kind() == self.blocks[k - 1].kind() {
                return Err(NrnError::Structure(format!("blocks {} and {k} share a kind", k - 1)));
            }
            if block.shape().channels != self.channels {
                return Err(NrnError::Structure(format!("block {k} has a different channel count")));
            }
            let s = block.shape();
            block.connectivity().validate(s.out_size, s.in_size, width)?;
            width = s.out_size;
        }
        for (p, pred) in self.predicates.iter().enumerate() {
            if pred.feature_index >= self.feature_names.len() {
                return Err(NrnError::Structure(format!(
                    "predicate {p} maps to feature {} of {}",
                    pred.feature_index,
                    self.feature_names.len()
                )));
            }
        }
        Ok(())
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn blocks(&self) -> &[LogicBlock<T>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [LogicBlock<T>] {
        &mut self.blocks
    }

    pub fn normal_form(&self) -> NormalForm {
        self.normal_form
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of stored weights; biases are fixed and not counted.
    pub fn parameter_count(&self) -> usize {
        self.blocks.iter().map(|b| b.shape().weight_count()).sum()
    }

    fn lift(&self, samples: ArrayView2<'_, T>) -> Result<Array3<T>> {
        let (batch, width) = samples.dim();
        if width != self.predicates.len() {
            return Err(NrnError::DimensionMismatch {
                what: "sample width",
                expected: self.predicates.len(),
                found: width,
            });
        }
        Ok(Array3::from_shape_fn((batch, self.channels, width), |(b, _, p)| samples[[b, p]]))
    }

    /// Outputs of every block, `(batch, C, O)` each, for predicate-space rows.
    pub fn layer_outputs(&self, samples: ArrayView2<'_, T>) -> Result<Vec<Array3<T>>> {
        let mut current = self.lift(samples)?;
        let mut outs = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let next = block.forward(current.view())?;
            outs.push(next.clone());
            current = next;
        }
        Ok(outs)
    }

    /// Root truth values, one per row (channel 0).
    pub fn predict(&self, samples: ArrayView2<'_, T>) -> Result<Vec<T>> {
        let outs = self.layer_outputs(samples)?;
        let root = outs.last().ok_or(NrnError::EmptyNetwork)?;
        Ok(root.outer_iter().map(|r| r[[0, 0]]).collect())
    }

    /// Forward pass keeping what the backward pass needs.
    pub fn forward_trace(&self, samples: ArrayView2<'_, T>) -> Result<ForwardTrace<T>> {
        let mut current = self.lift(samples)?;
        let mut gathered = Vec::with_capacity(self.blocks.len());
        let mut pre = Vec::with_capacity(self.blocks.len());
        let mut widths = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let s = block.shape();
            block.connectivity().validate(s.out_size, s.in_size, current.shape()[2])?;
            widths.push(current.shape()[2]);
            let g = block.gather(current.view());
            let p = block.pre_activations(&g);
            current = p.mapv(|v| v.unit_clamp());
            gathered.push(g);
            pre.push(p);
        }
        Ok(ForwardTrace { gathered, pre, input_widths: widths, output: current })
    }
}

/// Cached gathered inputs and pre-activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    pub gathered: Vec<Array4<T>>,
    pub pre: Vec<Array3<T>>,
    pub input_widths: Vec<usize>,
    pub output: Array3<T>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn root_outputs(&self) -> Vec<T> {
        self.output.outer_iter().map(|r| r[[0, 0]]).collect()
    }
}

pub mod persist {
    //! Versioned JSON document for networks. Weights are written as
    //! shortest round-trip decimal strings so a reload is bit-exact.

    use super::*;

    pub const FORMAT_VERSION: u32 = 1;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct BlockDocument {
        pub kind: LogicKind,
        pub shape: BlockShape,
        pub connectivity: Connectivity,
        pub weights: Vec<String>,
        pub betas: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct NetworkDocument {
        pub format_version: u32,
        pub normal_form: NormalForm,
        pub channels: usize,
        pub feature_names: Vec<String>,
        pub predicates: Vec<Predicate>,
        pub blocks: Vec<BlockDocument>,
    }

    #[derive(Deserialize)]
    struct VersionProbe {
        format_version: u32,
    }

    /// Rejects documents written by a newer format before decoding the rest.
    pub fn check_version(text: &str) -> Result<()> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.format_version > FORMAT_VERSION {
            return Err(NrnError::Version { found: probe.format_version, supported: FORMAT_VERSION });
        }
        Ok(())
    }

    fn parse_all<T: Scalar>(values: &[String], what: &str) -> Result<Vec<T>> {
        values
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.parse::<T>().map_err(|_| NrnError::Decode {
                    line: 0,
                    column: 0,
                    message: format!("{what}[{k}]: `{s}` is not a number"),
                })
            })
            .collect()
    }

    impl<T: Scalar> Network<T> {
        pub fn to_document(&self) -> NetworkDocument {
            NetworkDocument {
                format_version: FORMAT_VERSION,
                normal_form: self.normal_form,
                channels: self.channels,
                feature_names: self.feature_names.clone(),
                predicates: self.predicates.clone(),
                blocks: self
                    .blocks
                    .iter()
                    .map(|b| BlockDocument {
                        kind: b.kind,
                        shape: b.shape,
                        connectivity: b.connectivity.clone(),
                        weights: b.weights.iter().map(|w| w.to_string()).collect(),
                        betas: b.betas.iter().map(|w| w.to_string()).collect(),
                    })
                    .collect(),
            }
        }

        pub fn from_document(doc: NetworkDocument) -> Result<Self> {
            if doc.format_version > FORMAT_VERSION {
                return Err(NrnError::Version { found: doc.format_version, supported: FORMAT_VERSION });
            }
            let mut blocks = Vec::with_capacity(doc.blocks.len());
            for (k, b) in doc.blocks.into_iter().enumerate() {
                let s = b.shape;
                let weights = parse_all::<T>(&b.weights, &format!("blocks[{k}].weights"))?;
                let betas = parse_all::<T>(&b.betas, &format!("blocks[{k}].betas"))?;
                let weights = Array3::from_shape_vec((s.channels, s.out_size, s.in_size), weights)
                    .map_err(|e| NrnError::Structure(format!("blocks[{k}].weights: {e}")))?;
                let betas = Array2::from_shape_vec((s.channels, s.out_size), betas)
                    .map_err(|e| NrnError::Structure(format!("blocks[{k}].betas: {e}")))?;
                blocks.push(LogicBlock::new(b.kind, weights, betas, b.connectivity)?);
            }
            let net = Network::from_parts(doc.feature_names, doc.predicates, blocks, doc.normal_form)?;
            if net.channels != doc.channels {
                return Err(NrnError::Structure("channel count disagrees with blocks".into()));
            }
            Ok(net)
        }

        pub fn save(&self) -> String {
            serde_json::to_string_pretty(&self.to_document()).expect("network document serializes")
        }

        pub fn load(text: &str) -> Result<Self> {
            check_version(text)?;
            let doc: NetworkDocument = serde_json::from_str(text)?;
            Self::from_document(doc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{eval_node, NodeParams};

    fn passthrough(n: usize) -> (Vec<String>, Vec<Predicate>) {
        let names: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
        let preds = names
            .iter()
            .enumerate()
            .map(|(i, n)| Predicate { feature_index: i, name: n.clone(), condition: None })
            .collect();
        (names, preds)
    }

    fn config(n_layers: usize, sizes: Vec<usize>, sel: [usize; 3]) -> ArchitectureConfig {
        ArchitectureConfig {
            n_layers,
            layer_sizes: sizes,
            n_selected_features_input: sel[0],
            n_selected_features_internal: sel[1],
            n_selected_features_output: sel[2],
            ..ArchitectureConfig::default()
        }
    }

    #[test]
    fn minimal_network() {
        let (names, preds) = passthrough(2);
        let net = Network::<f64>::init(names, preds, &config(1, vec![1], [2, 2, 2]), 1).unwrap();
        assert_eq!(net.blocks().len(), 1);
        assert_eq!(net.blocks()[0].kind(), LogicKind::Conjunction);
        assert!(net.blocks()[0].shape().in_size <= 2);
    }

    #[test]
    fn same_seed_same_network() {
        let (names, preds) = passthrough(6);
        let cfg = config(2, vec![4, 2], [3, 2, 2]);
        let a = Network::<f64>::init(names.clone(), preds.clone(), &cfg, 9).unwrap();
        let b = Network::<f64>::init(names.clone(), preds.clone(), &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.save(), b.save());
        let c = Network::<f64>::init(names, preds, &cfg, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn structure_audit_and_parameter_count() {
        let (names, preds) = passthrough(6);
        let net = Network::<f64>::init(names, preds, &config(2, vec![4, 2], [3, 2, 2]), 4).unwrap();
        let b0 = &net.blocks()[0];
        assert_eq!(b0.shape().out_size, 4);
        for list in b0.connectivity().nodes() {
            assert_eq!(list.len(), 3);
            let mut sorted = list.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 3);
            assert!(list.iter().all(|&p| p < 6));
        }
        let kinds: Vec<_> = net.blocks().iter().map(|b| b.kind()).collect();
        assert_eq!(
            kinds,
            vec![LogicKind::Conjunction, LogicKind::Disjunction, LogicKind::Conjunction]
        );
        assert_eq!(net.parameter_count(), 4 * 3 + 2 * 2 + 2);
    }

    #[test]
    fn cnf_starts_with_disjunction() {
        let (names, preds) = passthrough(4);
        let mut cfg = config(2, vec![3], [2, 2, 2]);
        cfg.normal_form = NormalForm::Cnf;
        let net = Network::<f64>::init(names, preds, &cfg, 0).unwrap();
        assert_eq!(net.blocks()[0].kind(), LogicKind::Disjunction);
        assert_eq!(net.blocks().len(), 3);
    }

    #[test]
    fn too_many_selected_inputs() {
        let (names, preds) = passthrough(2);
        let err = Network::<f64>::init(names, preds, &config(1, vec![3], [3, 2, 2]), 0).unwrap_err();
        assert!(matches!(err, NrnError::InvalidParameter(_)));
    }

    #[test]
    fn weights_respect_init_range() {
        let (names, preds) = passthrough(8);
        let mut cfg = config(2, vec![6, 3], [4, 3, 3]);
        cfg.weight_init = 0.5;
        let net = Network::<f64>::init(names, preds, &cfg, 2).unwrap();
        let all: Vec<f64> = net.blocks().iter().flat_map(|b| b.weights().iter().copied()).collect();
        assert!(all.iter().all(|w| (0.005..=0.5).contains(&w.abs())));
        assert!(all.iter().any(|&w| w < 0.0));
        cfg.add_negations = false;
        let (names, preds) = passthrough(8);
        let net = Network::<f64>::init(names, preds, &cfg, 2).unwrap();
        assert!(net.blocks().iter().all(|b| b.weights().iter().all(|&w| w > 0.0)));
    }

    #[test]
    fn empty_batch_predicts_nothing() {
        let (names, preds) = passthrough(3);
        let net = Network::<f64>::init(names, preds, &config(1, vec![2], [2, 2, 2]), 0).unwrap();
        let out = net.predict(Array2::<f64>::zeros((0, 3)).view()).unwrap();
        assert!(out.is_empty());
        assert!(net.predict(Array2::<f64>::zeros((1, 2)).view()).is_err());
    }

    #[test]
    fn single_node_matches_scalar_eval() {
        let (names, preds) = passthrough(2);
        let block = LogicBlock::new(
            LogicKind::Conjunction,
            Array3::from_shape_vec((1, 1, 2), vec![0.5, -2.0]).unwrap(),
            Array2::from_elem((1, 1), 1.0),
            Connectivity::new(vec![vec![0, 1]]),
        )
        .unwrap();
        let net = Network::from_parts(names, preds, vec![block], NormalForm::Dnf).unwrap();
        let x = Array2::from_shape_vec((1, 2), vec![0.8, 0.1]).unwrap();
        let p = NodeParams::with_unit_bias(vec![0.5, -2.0]).unwrap();
        assert_eq!(net.predict(x.view()).unwrap()[0], eval_node(LogicKind::Conjunction, &p, &[0.8, 0.1]).unwrap());
        assert_eq!(net.parameter_count(), 2);
    }

    #[test]
    fn trace_agrees_with_predict() {
        let (names, preds) = passthrough(5);
        let net = Network::<f64>::init(names, preds, &config(2, vec![4, 3], [3, 2, 2]), 8).unwrap();
        let x = Array2::from_shape_fn((6, 5), |(b, p)| ((b * 7 + p * 3) % 10) as f64 / 9.0);
        let t = net.forward_trace(x.view()).unwrap();
        assert_eq!(t.root_outputs(), net.predict(x.view()).unwrap());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (names, preds) = passthrough(5);
        let net = Network::<f64>::init(names, preds, &config(2, vec![4, 3], [3, 2, 2]), 17).unwrap();
        let back = Network::<f64>::load(&net.save()).unwrap();
        assert_eq!(net, back);
        assert_eq!(back.parameter_count(), net.parameter_count());
        let x = Array2::from_shape_fn((4, 5), |(b, p)| ((b + p) % 3) as f64 / 2.0);
        let a = net.predict(x.view()).unwrap();
        let b = back.predict(x.view()).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn truncated_and_future_documents() {
        let (names, preds) = passthrough(3);
        let net = Network::<f64>::init(names, preds, &config(1, vec![2], [2, 2, 2]), 0).unwrap();
        let text = net.save();
        let err = Network::<f64>::load(&text[..text.len() / 2]).unwrap_err();
        assert!(matches!(err, NrnError::Decode { line, .. } if line > 0));
        let future = text.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        let err = Network::<f64>::load(&future).unwrap_err();
        assert!(matches!(err, NrnError::Version { found: 99, .. }));
    }
}
