//! Recursive extraction of the sub-formula responsible for a network output.
//!
//! Every visited node carries a claim about its own activation: in *true*
//! mode that it is at least `t`, in *false* mode that it is at most `u`.
//! Inverting the node's activation gives, per child, the masked value that
//! would just meet the claim with the other children fixed. A child is kept
//! when its actual masked value already meets that bound and the bound is
//! not vacuous. A negative weight flips the mode of the child and wraps its
//! sub-formula in NOT, so after negations are pushed to the leaves every
//! condition is true for the sample.

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::tree::Explanation;
use crate::condition::{CmpOp, ThresholdCondition};
use crate::error::{NrnError, Result};
use crate::logic::{masked_input, required_child_value, LogicKind, NodeParams};
use crate::network::Network;
use crate::preprocess::{ColumnSpec, FeaturePipeline};
use crate::stats::percentile;

/// How a child's value is compared against its required value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionTest {
    /// `value * |w| >= v` (or `<= v` in false mode), additionally guarded by
    /// the masked-value test so that no false rule is emitted.
    #[default]
    WeightedValue,
    /// `value >= v` (or `<= v`).
    MaskedValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    True,
    False,
}

impl Mode {
    fn flip(self) -> Self {
        match self {
            Mode::True => Mode::False,
            Mode::False => Mode::True,
        }
    }
}

/// Unsimplified explanation plus audit counters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationTrace {
    pub tree: Explanation,
    pub output: f64,
    /// Children where the weighted and the masked inclusion tests disagree.
    pub strictness_disagreements: usize,
}

struct Builder<'a> {
    net: &'a Network<f64>,
    pipeline: &'a FeaturePipeline,
    /// Predicate values, then one activation vector per block (channel 0).
    inputs: Vec<f64>,
    acts: Vec<Vec<f64>>,
    raw: Option<&'a [f64]>,
    test: InclusionTest,
    /// Per block `(O, I)` edge masses and the minimum mass kept.
    edge_filter: Option<(Vec<Vec<Vec<f64>>>, f64)>,
    disagreements: usize,
}

impl Builder<'_> {
    fn child_value(&self, block: usize, src: usize) -> f64 {
        if block == 0 {
            self.inputs[src]
        } else {
            self.acts[block - 1][src]
        }
    }

    fn child_key(&self, block: usize, src: usize) -> String {
        if block == 0 {
            self.net.predicates()[src].name.clone()
        } else {
            format!("~{}:{src:08}", block - 1)
        }
    }

    fn node(&mut self, block: usize, o: usize, mode: Mode, target: f64) -> Result<Option<Explanation>> {
        // At least 0 or at most 1 holds for every node: nothing to explain.
        let vacuous = match mode {
            Mode::True => target <= 0.0,
            Mode::False => target >= 1.0,
        };
        if vacuous {
            return Ok(None);
        }
        let b = &self.net.blocks()[block];
        let kind = b.kind();
        let sources = b.connectivity().node(o).to_vec();
        let weights: Vec<f64> = (0..b.shape().in_size).map(|i| b.weights()[[0, o, i]]).collect();
        let params = NodeParams::new(weights.clone(), b.betas()[[0, o]])?;
        let values: Vec<f64> = sources.iter().map(|&s| self.child_value(block, s)).collect();

        let mut children: Vec<(f64, String, Explanation)> = Vec::new();
        let mut candidates = Vec::new();
        for (i, (&w, &src)) in weights.iter().zip(&sources).enumerate() {
            if w == 0.0 {
                continue;
            }
            if let Some((masses, cut)) = &self.edge_filter {
                if masses[block][o][i] < *cut {
                    continue;
                }
            }
            let v = required_child_value(kind, &params, &values, target, i)?;
            let m = masked_input(values[i], w);
            candidates.push((w, src, v, m));
            let weighted = m * w.abs();
            let (guard, printed) = match mode {
                Mode::True => (v > 0.0 && m >= v, weighted >= v),
                Mode::False => (v < 1.0 && m <= v, weighted <= v),
            };
            let plain = match mode {
                Mode::True => m >= v,
                Mode::False => m <= v,
            };
            if printed != plain {
                self.disagreements += 1;
            }
            let include = match (self.raw, self.test) {
                // Without a sample there is no value to check; keep every
                // child whose required value actually constrains it.
                (None, _) => match mode {
                    Mode::True => v > 0.0,
                    Mode::False => v < 1.0,
                },
                (Some(_), InclusionTest::WeightedValue) => guard && printed,
                (Some(_), InclusionTest::MaskedValue) => guard,
            };
            if include {
                self.push_child(&mut children, block, w, src, mode, v)?;
            }
        }
        // No single child is needed when the others already settle the
        // claim. Each child that contributes then explains its own value.
        // Only meaningful for a real sample, not for mean activations.
        if children.is_empty() && self.raw.is_some() {
            for &(w, src, _, m) in &candidates {
                let contributes = match mode {
                    Mode::True => m > 0.0,
                    Mode::False => m < 1.0,
                };
                if contributes {
                    self.push_child(&mut children, block, w, src, mode, m)?;
                }
            }
        }
        if children.is_empty() {
            return Ok(None);
        }
        children.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let cs = children.into_iter().map(|c| c.2).collect();
        Ok(Some(match kind {
            LogicKind::Conjunction => Explanation::And(cs),
            LogicKind::Disjunction => Explanation::Or(cs),
        }))
    }

    fn push_child(
        &mut self,
        children: &mut Vec<(f64, String, Explanation)>,
        block: usize,
        w: f64,
        src: usize,
        mode: Mode,
        v: f64,
    ) -> Result<()> {
        let (child_mode, child_target) = if w < 0.0 { (mode.flip(), 1.0 - v) } else { (mode, v) };
        let expr = if block == 0 {
            Some(self.leaf(src, child_mode, child_target))
        } else {
            self.node(block - 1, src, child_mode, child_target)?
        };
        if let Some(expr) = expr {
            let expr = if w < 0.0 { Explanation::Not(Box::new(expr)) } else { expr };
            children.push((w.abs(), self.child_key(block, src), expr));
        }
        Ok(())
    }

    /// Condition stating that predicate `p` is at least `thr` (true mode) or
    /// above `thr` (false mode, the claim being that it is not).
    fn leaf(&self, p: usize, mode: Mode, thr: f64) -> Explanation {
        let pred = &self.net.predicates()[p];
        let spec = self.pipeline.columns.get(p).copied();
        let cond = match (spec, &pred.condition) {
            (Some(ColumnSpec::Threshold { .. }), Some(c)) | (None, Some(c)) => c.clone(),
            _ => {
                let f = pred.feature_index;
                let scaler = &self.pipeline.scalers[f];
                let name = &self.pipeline.feature_names[f];
                let op = match mode {
                    Mode::True => CmpOp::Ge,
                    Mode::False => CmpOp::Gt,
                };
                let mut c = ThresholdCondition::new(f, name, op, scaler.inverse(thr));
                if let Some(raw) = self.raw {
                    nudge(&mut c, raw[f], mode == Mode::True);
                }
                c
            }
        };
        Explanation::Leaf(cond)
    }
}

/// Moves a lower-bound threshold minimally so its truth on `value` is `want`,
/// absorbing rounding in the inverse scaling.
fn nudge(c: &mut ThresholdCondition, value: f64, want: bool) {
    if c.op.holds(value, c.threshold) == want {
        return;
    }
    c.threshold = match (c.op, want) {
        (CmpOp::Ge, true) | (CmpOp::Gt, false) => value,
        (CmpOp::Ge, false) => value.next_up(),
        (CmpOp::Gt, true) => value.next_down(),
        _ => c.threshold,
    };
}

fn check_pipeline(net: &Network<f64>, pipeline: &FeaturePipeline) -> Result<()> {
    if pipeline.n_columns() != net.predicates().len() {
        return Err(NrnError::DimensionMismatch {
            what: "pipeline columns",
            expected: net.predicates().len(),
            found: pipeline.n_columns(),
        });
    }
    Ok(())
}

/// Raw explanation tree for one sample, given in raw feature units. The
/// root claim is that the output is at least its value, so a prediction
/// near 0 usually yields an empty tree; see [`explain_prediction`].
pub fn explain_sample(
    net: &Network<f64>,
    pipeline: &FeaturePipeline,
    raw: ArrayView1<'_, f64>,
    test: InclusionTest,
) -> Result<ExplanationTrace> {
    trace(net, pipeline, raw, test, false)
}

/// Like [`explain_sample`] for outputs of at least 0.5. Lower outputs are
/// explained for the negative class: the tree is the negation of a claim
/// that the output is at most its value.
pub fn explain_prediction(
    net: &Network<f64>,
    pipeline: &FeaturePipeline,
    raw: ArrayView1<'_, f64>,
    test: InclusionTest,
) -> Result<ExplanationTrace> {
    trace(net, pipeline, raw, test, true)
}

fn trace(
    net: &Network<f64>,
    pipeline: &FeaturePipeline,
    raw: ArrayView1<'_, f64>,
    test: InclusionTest,
    by_class: bool,
) -> Result<ExplanationTrace> {
    check_pipeline(net, pipeline)?;
    let row = raw.to_owned().insert_axis(Axis(0));
    let x = pipeline.transform(row.view())?;
    let outs = net.layer_outputs(x.view())?;
    let acts: Vec<Vec<f64>> = outs.iter().map(|o| o.index_axis(Axis(0), 0).row(0).to_vec()).collect();
    let output = acts.last().ok_or(NrnError::EmptyNetwork)?[0];
    let raw_vec = raw.to_vec();
    let mut b = Builder {
        net,
        pipeline,
        inputs: x.row(0).to_vec(),
        acts,
        raw: Some(&raw_vec),
        test,
        edge_filter: None,
        disagreements: 0,
    };
    let root = net.blocks().len() - 1;
    let tree = if by_class && output < 0.5 {
        b.node(root, 0, Mode::False, output)?.map(|e| Explanation::Not(Box::new(e)))
    } else {
        b.node(root, 0, Mode::True, output)?
    };
    let tree = tree.unwrap_or(Explanation::And(Vec::new()));
    Ok(ExplanationTrace { tree, output, strictness_disagreements: b.disagreements })
}

/// Sum over root paths of the product of `|w|`, for every edge of every block.
fn edge_masses(net: &Network<f64>) -> Vec<Vec<Vec<f64>>> {
    let blocks = net.blocks();
    let mut masses = vec![Vec::new(); blocks.len()];
    let mut node_mass = vec![1.0];
    for (k, b) in blocks.iter().enumerate().rev() {
        let s = b.shape();
        let width = if k == 0 { net.predicates().len() } else { blocks[k - 1].shape().out_size };
        let mut below = vec![0.0; width];
        masses[k] = (0..s.out_size)
            .map(|o| {
                (0..s.in_size)
                    .map(|i| {
                        let m = node_mass[o] * b.weights()[[0, o, i]].abs();
                        below[b.connectivity().node(o)[i]] += m;
                        m
                    })
                    .collect()
            })
            .collect();
        node_mass = below;
    }
    masses
}

/// Importance per raw feature: the sum over root-to-predicate paths of the
/// product of absolute weights, accumulated by each predicate's feature.
pub fn feature_importance(net: &Network<f64>) -> Vec<f64> {
    let masses = edge_masses(net);
    let b0 = &net.blocks()[0];
    let mut imp = vec![0.0; net.feature_names().len()];
    for (o, row) in masses[0].iter().enumerate() {
        for (i, m) in row.iter().enumerate() {
            let p = b0.connectivity().node(o)[i];
            imp[net.predicates()[p].feature_index] += m;
        }
    }
    imp
}

/// Model-level explanations for the positive and negative class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalExplanation {
    pub positive: Explanation,
    pub negative: Explanation,
    pub positive_target: f64,
    pub negative_target: f64,
}

/// Explains what drives the output above the `confidence_percentile`
/// quantile of `predictions` (positive view) and below the complementary
/// quantile (negative view). Required values are computed with the other
/// children at their mean activation over `x`, and every child with a
/// non-vacuous requirement is kept. Only edges whose path mass lies in the
/// top `weight_quantile` fraction are followed. Both views go through [`super::simplify_tree`].
pub fn global_explanation(
    net: &Network<f64>,
    pipeline: &FeaturePipeline,
    x: ArrayView2<'_, f64>,
    predictions: &[f64],
    confidence_percentile: f64,
    weight_quantile: f64,
) -> Result<GlobalExplanation> {
    check_pipeline(net, pipeline)?;
    if !(weight_quantile > 0.0 && weight_quantile <= 1.0) {
        return Err(NrnError::InvalidParameter("weight_quantile must be in (0, 1]".into()));
    }
    if !(0.0..=100.0).contains(&confidence_percentile) {
        return Err(NrnError::InvalidParameter("confidence percentile must be in [0, 100]".into()));
    }
    if x.nrows() == 0 || predictions.is_empty() {
        return Err(NrnError::InvalidParameter("global explanation needs data".into()));
    }
    let outs = net.layer_outputs(x)?;
    let mean = |a: ArrayView2<'_, f64>| -> Vec<f64> { a.mean_axis(Axis(0)).map(|m| m.to_vec()).unwrap_or_default() };
    let acts: Vec<Vec<f64>> = outs.iter().map(|o| mean(o.index_axis(ndarray::Axis(1), 0))).collect();
    let masses = edge_masses(net);
    let all: Vec<f64> = masses.iter().flatten().flatten().copied().collect();
    let cut = percentile(&all, 1.0 - weight_quantile);
    let mut b = Builder {
        net,
        pipeline,
        inputs: mean(x),
        acts,
        raw: None,
        test: InclusionTest::MaskedValue,
        edge_filter: Some((masses, cut)),
        disagreements: 0,
    };
    let root = net.blocks().len() - 1;
    let positive_target = percentile(predictions, confidence_percentile / 100.0);
    let negative_target = percentile(predictions, 1.0 - confidence_percentile / 100.0);
    let empty = || Explanation::And(Vec::new());
    let positive = b.node(root, 0, Mode::True, positive_target)?.unwrap_or_else(empty);
    let negative = match b.node(root, 0, Mode::False, negative_target)? {
        Some(e) => Explanation::Not(Box::new(e)),
        None => empty(),
    };
    Ok(GlobalExplanation {
        positive: super::simplify_tree(&positive),
        negative: super::simplify_tree(&negative),
        positive_target,
        negative_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Connectivity, LogicBlock, NormalForm};
    use crate::preprocess::{BinarizeMode, MinMaxScaler};
    use ndarray::{array, Array2, Array3};

    /// Scaled pass-through pipeline over `m` features in [0, 1].
    fn identity_pipeline(m: usize) -> FeaturePipeline {
        FeaturePipeline::from_plan(
            (0..m).map(|i| format!("P{}", i + 1)).collect(),
            vec![MinMaxScaler { min: 0.0, max: 1.0 }; m],
            BinarizeMode::None,
            None,
        )
    }

    fn single(kind: LogicKind, w: Vec<f64>) -> Network<f64> {
        let m = w.len();
        let pipe = identity_pipeline(m);
        let block = LogicBlock::new(
            kind,
            Array3::from_shape_vec((1, 1, m), w).unwrap(),
            Array2::ones((1, 1)),
            Connectivity::new(vec![(0..m).collect()]),
        )
        .unwrap();
        let nf = if kind == LogicKind::Conjunction { NormalForm::Dnf } else { NormalForm::Cnf };
        Network::from_parts(pipe.feature_names.clone(), pipe.predicates(), vec![block], nf).unwrap()
    }

    #[test]
    fn conjunction_hand_trace() {
        let net = single(LogicKind::Conjunction, vec![1.0, 1.0]);
        let t = explain_sample(&net, &identity_pipeline(2), array![1.0, 1.0].view(), InclusionTest::default()).unwrap();
        assert_eq!(t.output, 1.0);
        assert_eq!(t.tree.to_string(), "AND(P1 >= 1, P2 >= 1)");
    }

    #[test]
    fn all_false_disjunction_is_empty() {
        let net = single(LogicKind::Disjunction, vec![1.0, 1.0]);
        let t = explain_sample(&net, &identity_pipeline(2), array![0.0, 0.0].view(), InclusionTest::default()).unwrap();
        assert_eq!(t.output, 0.0);
        assert!(t.tree.is_empty());
        assert_eq!(t.tree.to_string(), "");
    }

    #[test]
    fn negative_leaf_uses_strict_complement() {
        let net = single(LogicKind::Conjunction, vec![-1.0]);
        let t = explain_sample(&net, &identity_pipeline(1), array![0.0].view(), InclusionTest::default()).unwrap();
        assert_eq!(t.tree.to_string(), "AND(NOT(P1 > 0))");
        assert!(t.tree.eval(&[0.0]));
    }

    #[test]
    fn negative_prediction_is_explained_by_class() {
        let net = single(LogicKind::Conjunction, vec![1.0, 1.0]);
        let pipe = identity_pipeline(2);
        let row = array![0.0, 1.0];
        let literal = explain_sample(&net, &pipe, row.view(), InclusionTest::default()).unwrap();
        assert!(literal.tree.is_empty());
        // Only P1 is needed to keep the conjunction at 0.
        let t = explain_prediction(&net, &pipe, row.view(), InclusionTest::default()).unwrap();
        assert_eq!(t.tree.to_string(), "NOT(AND(P1 > 0))");
        let s = super::super::simplify(&t.tree, &[0.0, 1.0], t.output);
        assert_eq!(s.to_string(), "AND(P1 <= 0)");
    }

    #[test]
    fn redundant_children_explain_their_own_value() {
        // Each input alone saturates the disjunction, so neither is required.
        let net = single(LogicKind::Disjunction, vec![1.0, 1.0]);
        let t = explain_sample(&net, &identity_pipeline(2), array![1.0, 1.0].view(), InclusionTest::default()).unwrap();
        assert_eq!(t.tree.to_string(), "OR(P1 >= 1, P2 >= 1)");
    }

    #[test]
    fn global_views_by_hand() {
        let net = single(LogicKind::Conjunction, vec![1.0, 1.0]);
        let x = array![[1.0, 1.0], [0.0, 0.0]];
        let g = global_explanation(&net, &identity_pipeline(2), x.view(), &[1.0, 0.0], 75.0, 1.0).unwrap();
        assert_eq!((g.positive_target, g.negative_target), (0.75, 0.25));
        assert_eq!(g.positive.to_string(), "AND(P1 >= 1, P2 >= 1)");
        assert_eq!(g.negative.to_string(), "OR(P1 <= 0.75, P2 <= 0.75)");
        assert!(global_explanation(&net, &identity_pipeline(2), x.view(), &[1.0, 0.0], 75.0, 0.0).is_err());
    }

    #[test]
    fn importance_examples() {
        let net = single(LogicKind::Conjunction, vec![0.5, -2.0]);
        assert_eq!(feature_importance(&net), vec![0.5, 2.0]);

        // root And over two Or nodes that both read P(f0)
        let pipe = identity_pipeline(1);
        let b0 = LogicBlock::new(
            LogicKind::Disjunction,
            array![[[2.0], [4.0]]],
            Array2::ones((1, 2)),
            Connectivity::new(vec![vec![0], vec![0]]),
        )
        .unwrap();
        let b1 = LogicBlock::new(
            LogicKind::Conjunction,
            array![[[1.0, 0.5]]],
            Array2::ones((1, 1)),
            Connectivity::new(vec![vec![0, 1]]),
        )
        .unwrap();
        let net = Network::from_parts(pipe.feature_names.clone(), pipe.predicates(), vec![b0, b1], NormalForm::Cnf).unwrap();
        assert_eq!(feature_importance(&net), vec![4.0]);

        let zero = single(LogicKind::Conjunction, vec![0.0, 0.0]);
        assert_eq!(feature_importance(&zero), vec![0.0, 0.0]);
    }
}
