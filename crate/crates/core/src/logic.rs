//! Weighted Lukasiewicz conjunction and disjunction.
//!
//! A node of either kind reads a vector of truth values `x` through a sign
//! mask: inputs on positive weights are used as is, inputs on negative
//! weights are negated (`1 - x`). The clamped affine activations are
//!
//! ```text
//! and(x) = clamp(beta - sum_j |w_j| * (1 - masked_j))
//! or(x)  = clamp(1 - beta + sum_j |w_j| * masked_j)
//! ```
//!
//! Everything here is a pure function of its arguments.

use ndarray::{Array3, Array4, ArrayView2, ArrayView3, ArrayView4, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{NrnError, Result};
use crate::scalar::Scalar;

/// A confidence in `[0, 1]` that a statement holds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TruthValue<T>(T);

impl<T: Scalar> TruthValue<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(NrnError::InvalidParameter(format!(
                "truth value {value} outside [0, 1]"
            )))
        }
    }

    /// Saturating constructor; NaN maps to 0.
    pub fn clamped(value: T) -> Self {
        if value.is_nan() {
            Self(T::zero())
        } else {
            Self(value.unit_clamp())
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicKind {
    Conjunction,
    Disjunction,
}

impl LogicKind {
    pub fn dual(self) -> Self {
        match self {
            LogicKind::Conjunction => LogicKind::Disjunction,
            LogicKind::Disjunction => LogicKind::Conjunction,
        }
    }
}

/// Weights and bias of a single node. The sign mask is derived from the
/// weights and never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeParams<T> {
    weights: Vec<T>,
    beta: T,
}

impl<T: Scalar> NodeParams<T> {
    pub fn new(weights: Vec<T>, beta: T) -> Result<Self> {
        if weights.is_empty() {
            return Err(NrnError::InvalidParameter("node needs at least one weight".into()));
        }
        if !(beta >= T::zero()) {
            return Err(NrnError::InvalidParameter(format!("beta must be >= 0, got {beta}")));
        }
        Ok(Self { weights, beta })
    }

    /// Node with the conventional unit bias.
    pub fn with_unit_bias(weights: Vec<T>) -> Result<Self> {
        Self::new(weights, T::one())
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    fn check_arity(&self, x: &[T]) -> Result<()> {
        if x.len() != self.weights.len() {
            return Err(NrnError::DimensionMismatch {
                what: "node inputs",
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub channels: usize,
    pub out_size: usize,
    pub in_size: usize,
}

impl BlockShape {
    pub fn new(channels: usize, out_size: usize, in_size: usize) -> Result<Self> {
        if channels == 0 || out_size == 0 || in_size == 0 {
            return Err(NrnError::InvalidParameter(format!(
                "block dimensions must be >= 1, got ({channels}, {out_size}, {in_size})"
            )));
        }
        Ok(Self { channels, out_size, in_size })
    }

    pub fn weight_count(&self) -> usize {
        self.channels * self.out_size * self.in_size
    }
}

/// `x` on a positive weight, `1 - x` otherwise.
#[inline]
pub fn masked_input<T: Scalar>(x: T, w: T) -> T {
    if w > T::zero() {
        x
    } else {
        T::one() - x
    }
}

/// Affine pre-activation of a node before clamping.
#[inline]
pub(crate) fn pre_activation_unchecked<T: Scalar>(kind: LogicKind, beta: T, w: &[T], x: &[T]) -> T {
    match kind {
        LogicKind::Conjunction => {
            let mut acc = T::zero();
            for (&wj, &xj) in w.iter().zip(x) {
                acc = acc + wj.abs() * (T::one() - masked_input(xj, wj));
            }
            beta - acc
        }
        LogicKind::Disjunction => {
            let mut acc = T::zero();
            for (&wj, &xj) in w.iter().zip(x) {
                acc = acc + wj.abs() * masked_input(xj, wj);
            }
            T::one() - beta + acc
        }
    }
}

/// Subgradient of the clamp: 1 on the closed unit interval, 0 outside.
#[inline]
pub(crate) fn clamp_gate<T: Scalar>(pre: T) -> T {
    if pre >= T::zero() && pre <= T::one() {
        T::one()
    } else {
        T::zero()
    }
}

/// Partial derivative of the pre-activation with respect to `w_j`, mask held fixed.
#[inline]
pub(crate) fn d_pre_d_weight<T: Scalar>(kind: LogicKind, w: T, x: T) -> T {
    let m = masked_input(x, w);
    match kind {
        LogicKind::Conjunction => -w.sgn() * (T::one() - m),
        LogicKind::Disjunction => w.sgn() * m,
    }
}

pub fn pre_activation<T: Scalar>(kind: LogicKind, params: &NodeParams<T>, x: &[T]) -> Result<T> {
    params.check_arity(x)?;
    Ok(pre_activation_unchecked(kind, params.beta, &params.weights, x))
}

pub fn eval_node<T: Scalar>(kind: LogicKind, params: &NodeParams<T>, x: &[T]) -> Result<T> {
    Ok(pre_activation(kind, params, x)?.unit_clamp())
}

pub fn eval_conjunction<T: Scalar>(params: &NodeParams<T>, x: &[T]) -> Result<T> {
    eval_node(LogicKind::Conjunction, params, x)
}

pub fn eval_disjunction<T: Scalar>(params: &NodeParams<T>, x: &[T]) -> Result<T> {
    eval_node(LogicKind::Disjunction, params, x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeGradients<T> {
    pub d_inputs: Vec<T>,
    pub d_weights: Vec<T>,
}

/// Analytic gradients of a node's clamped output.
///
/// `d out / d x_j` is `w_j` in the linear region for both kinds (the mask
/// turns a negative weight into a negated input with slope `-|w_j|`).
/// At the exact clamp boundaries the interior derivative is reported.
pub fn node_gradients<T: Scalar>(
    kind: LogicKind,
    params: &NodeParams<T>,
    x: &[T],
) -> Result<NodeGradients<T>> {
    let pre = pre_activation(kind, params, x)?;
    let gate = clamp_gate(pre);
    let d_inputs = params.weights.iter().map(|&w| w * gate).collect();
    let d_weights = params
        .weights
        .iter()
        .zip(x)
        .map(|(&w, &xj)| d_pre_d_weight(kind, w, xj) * gate)
        .collect();
    Ok(NodeGradients { d_inputs, d_weights })
}

fn check_block_params<T>(
    shape: BlockShape,
    weights: &ArrayView3<'_, T>,
    betas: &ArrayView2<'_, T>,
) -> Result<()> {
    let expected_w = [shape.channels, shape.out_size, shape.in_size];
    if weights.shape() != expected_w {
        return Err(NrnError::DimensionMismatch {
            what: "block weights",
            expected: shape.weight_count(),
            found: weights.len(),
        });
    }
    if betas.shape() != [shape.channels, shape.out_size] {
        return Err(NrnError::DimensionMismatch {
            what: "block betas",
            expected: shape.channels * shape.out_size,
            found: betas.len(),
        });
    }
    Ok(())
}

/// Evaluates a block whose every node reads its own pre-gathered input
/// vector: `gathered` has shape `(batch, C, O, I)`, the output `(batch, C, O)`.
pub fn block_forward_gathered<T: Scalar>(
    shape: BlockShape,
    kind: LogicKind,
    weights: ArrayView3<'_, T>,
    betas: ArrayView2<'_, T>,
    gathered: ArrayView4<'_, T>,
) -> Result<Array3<T>> {
    check_block_params(shape, &weights, &betas)?;
    let dims = gathered.shape();
    if dims[1..] != [shape.channels, shape.out_size, shape.in_size] {
        return Err(NrnError::DimensionMismatch {
            what: "gathered block inputs",
            expected: shape.weight_count(),
            found: dims[1..].iter().product(),
        });
    }
    let batch = dims[0];
    let mut out = Array3::<T>::zeros((batch, shape.channels, shape.out_size));
    for (b, sample) in gathered.axis_iter(Axis(0)).enumerate() {
        for c in 0..shape.channels {
            for o in 0..shape.out_size {
                let mut acc = T::zero();
                for i in 0..shape.in_size {
                    let w = weights[[c, o, i]];
                    let m = masked_input(sample[[c, o, i]], w);
                    acc = acc
                        + match kind {
                            LogicKind::Conjunction => w.abs() * (T::one() - m),
                            LogicKind::Disjunction => w.abs() * m,
                        };
                }
                let beta = betas[[c, o]];
                let pre = match kind {
                    LogicKind::Conjunction => beta - acc,
                    LogicKind::Disjunction => T::one() - beta + acc,
                };
                out[[b, c, o]] = pre.unit_clamp();
            }
        }
    }
    Ok(out)
}

/// Dense block: every node of channel `c` reads the full `I`-vector of
/// that channel. `inputs` is `(batch, C, I)`, the output `(batch, C, O)`.
pub fn block_forward<T: Scalar>(
    shape: BlockShape,
    kind: LogicKind,
    weights: ArrayView3<'_, T>,
    betas: ArrayView2<'_, T>,
    inputs: ArrayView3<'_, T>,
) -> Result<Array3<T>> {
    let dims = inputs.shape();
    if dims[1..] != [shape.channels, shape.in_size] {
        return Err(NrnError::DimensionMismatch {
            what: "block inputs",
            expected: shape.channels * shape.in_size,
            found: dims[1..].iter().product(),
        });
    }
    let batch = dims[0];
    let tiled = Array4::from_shape_fn(
        (batch, shape.channels, shape.out_size, shape.in_size),
        |(b, c, _o, i)| inputs[[b, c, i]],
    );
    block_forward_gathered(shape, kind, weights, betas, tiled.view())
}

/// Smallest masked value input `j` must take for the node to reach `target`,
/// holding the other inputs at `child_values`.
///
/// The returned value is in masked units: for a negative weight the child
/// itself must be at most `1 - value`.
pub fn required_child_value<T: Scalar>(
    kind: LogicKind,
    params: &NodeParams<T>,
    child_values: &[T],
    target: T,
    j: usize,
) -> Result<T> {
    params.check_arity(child_values)?;
    let w = params.weights();
    if j >= w.len() {
        return Err(NrnError::InvalidParameter(format!(
            "input index {j} out of range for arity {}",
            w.len()
        )));
    }
    let wj = w[j].abs();
    if wj == T::zero() {
        return Err(NrnError::ZeroWeight { index: j });
    }
    let masked: Vec<T> = child_values
        .iter()
        .zip(w)
        .map(|(&c, &wk)| masked_input(c, wk))
        .collect();
    // beta enters as the offset of the affine form; with beta = 1 these are
    // exactly the textbook inversions.
    let beta = params.beta();
    match kind {
        LogicKind::Disjunction => {
            let own = masked[j] * wj;
            let others = masked.iter().zip(w).map(|(&i, &wk)| i * wk.abs()).sum::<T>() - own;
            Ok(((target - (T::one() - beta) - others) / wj).unit_clamp())
        }
        LogicKind::Conjunction => {
            let own = (T::one() - masked[j]) * wj;
            let others = masked
                .iter()
                .zip(w)
                .map(|(&i, &wk)| (T::one() - i) * wk.abs())
                .sum::<T>()
                - own;
            Ok(T::one() - ((beta - target - others) / wj).unit_clamp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, Array3};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn node(w: &[f64]) -> NodeParams<f64> {
        NodeParams::with_unit_bias(w.to_vec()).unwrap()
    }

    #[test]
    fn masked_input_examples() {
        assert_eq!(masked_input(1.0, 2.0), 1.0);
        assert_eq!(masked_input(1.0, -2.0), 0.0);
        assert_eq!(masked_input(0.25, -0.5), 0.75);
    }

    #[test]
    fn conjunction_examples() {
        assert_eq!(eval_conjunction(&node(&[1.0, 1.0]), &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(eval_conjunction(&node(&[1.0, 1.0]), &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(eval_conjunction(&node(&[-2.0]), &[0.25]).unwrap(), 0.5);
        let v = eval_conjunction(&node(&[0.5, 0.5]), &[0.9, 0.9]).unwrap();
        assert!((v - 0.9).abs() < 1e-12);
    }

    #[test]
    fn disjunction_examples() {
        assert_eq!(eval_disjunction(&node(&[1.0, 1.0]), &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(eval_disjunction(&node(&[1.0, 1.0]), &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(eval_disjunction(&node(&[-2.0]), &[0.25]).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = eval_conjunction(&node(&[1.0, 1.0]), &[1.0]).unwrap_err();
        assert!(matches!(err, NrnError::DimensionMismatch { expected: 2, found: 1, .. }));
        assert!(node_gradients(LogicKind::Disjunction, &node(&[1.0]), &[0.1, 0.2]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(NodeParams::<f64>::new(vec![], 1.0).is_err());
        assert!(NodeParams::new(vec![1.0], -0.1).is_err());
        assert!(BlockShape::new(1, 0, 2).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = node_gradients(LogicKind::Conjunction, &node(&[0.5, 0.5]), &[0.9, 0.9]).unwrap();
        assert_eq!(g.d_inputs, vec![0.5, 0.5]);
        // pre-activation exactly 0 sits on the boundary: interior derivative
        let g = node_gradients(LogicKind::Disjunction, &node(&[1.0, 1.0]), &[0.0, 0.0]).unwrap();
        assert_eq!(g.d_inputs, vec![1.0, 1.0]);
        let g = node_gradients(LogicKind::Conjunction, &node(&[-2.0]), &[0.25]).unwrap();
        assert_eq!(g.d_inputs, vec![-2.0]);
    }

    #[test]
    fn gradient_zero_when_saturated() {
        // pre = 1 - 3*(1 - 0) = -2, well outside the unit interval
        let g = node_gradients(LogicKind::Conjunction, &node(&[3.0]), &[0.0]).unwrap();
        assert_eq!(g.d_inputs, vec![0.0]);
        assert_eq!(g.d_weights, vec![0.0]);
    }

    #[test]
    fn weight_gradient_vanishes_at_zero_weight() {
        let g = node_gradients(LogicKind::Disjunction, &node(&[0.0, 0.5]), &[0.4, 0.4]).unwrap();
        assert_eq!(g.d_weights[0], 0.0);
    }

    #[test]
    fn required_child_value_examples() {
        let v = required_child_value(LogicKind::Disjunction, &node(&[1.0, 1.0]), &[0.2, 0.3], 0.6, 0)
            .unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        let v = required_child_value(LogicKind::Conjunction, &node(&[1.0]), &[1.0], 1.0, 0).unwrap();
        assert_eq!(v, 1.0);
        let v = required_child_value(LogicKind::Conjunction, &node(&[1.0, 1.0]), &[0.8, 0.9], 0.7, 0)
            .unwrap();
        assert!((v - 0.8).abs() < 1e-12);
    }

    #[test]
    fn required_child_value_rejects_zero_weight() {
        let err = required_child_value(LogicKind::Disjunction, &node(&[0.0, 1.0]), &[0.5, 0.5], 0.5, 0)
            .unwrap_err();
        assert!(matches!(err, NrnError::ZeroWeight { index: 0 }));
    }

    #[test]
    fn output_range_fuzz() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let n = rng.gen_range(1..6);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let beta = rng.gen_range(0.0..3.0);
            let p = NodeParams::new(w, beta).unwrap();
            for kind in [LogicKind::Conjunction, LogicKind::Disjunction] {
                let v = eval_node(kind, &p, &x).unwrap();
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    fn brute_force(kind: LogicKind, signs: &[bool], bits: &[bool]) -> bool {
        let lits = signs.iter().zip(bits).map(|(&pos, &b)| if pos { b } else { !b });
        match kind {
            LogicKind::Conjunction => lits.fold(true, |a, l| a && l),
            LogicKind::Disjunction => lits.fold(false, |a, l| a || l),
        }
    }

    #[test]
    fn boolean_fidelity_exhaustive() {
        for arity in 1..=10usize {
            // a few sign patterns per arity, every assignment
            for pattern in [0u32, u32::MAX, 0b1010_1010_10, 0b0110_0111_01] {
                let signs: Vec<bool> = (0..arity).map(|k| pattern >> k & 1 == 1).collect();
                let w: Vec<f64> = signs.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
                let p = node(&w);
                for assignment in 0u32..(1 << arity) {
                    let bits: Vec<bool> = (0..arity).map(|k| assignment >> k & 1 == 1).collect();
                    let x: Vec<f64> = bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                    for kind in [LogicKind::Conjunction, LogicKind::Disjunction] {
                        let v = eval_node(kind, &p, &x).unwrap();
                        let expected = if brute_force(kind, &signs, &bits) { 1.0 } else { 0.0 };
                        assert_eq!(v, expected, "{kind:?} w={w:?} x={x:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn inversion_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        for _ in 0..20_000 {
            let n = rng.gen_range(1..5);
            let w: Vec<f64> = (0..n)
                .map(|_| {
                    let m = rng.gen_range(0.1..2.0);
                    if rng.gen_bool(0.5) { m } else { -m }
                })
                .collect();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let t: f64 = rng.gen_range(0.0..=1.0);
            let j = rng.gen_range(0..n);
            let p = node(&w);
            for kind in [LogicKind::Conjunction, LogicKind::Disjunction] {
                let v = required_child_value(kind, &p, &x, t, j).unwrap();
                if v <= 0.0 || v >= 1.0 {
                    continue;
                }
                let mut x2 = x.clone();
                x2[j] = if w[j] > 0.0 { v } else { 1.0 - v };
                let out = eval_node(kind, &p, &x2).unwrap();
                assert!(out >= t - 1e-9, "{kind:?} w={w:?} x={x:?} t={t} j={j} v={v} out={out}");
                checked += 1;
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn block_matches_node_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = BlockShape::new(2, 4, 3).unwrap();
        let weights = Array3::from_shape_fn((2, 4, 3), |_| rng.gen_range(-2.0..2.0));
        let betas = Array2::from_elem((2, 4), 1.0);
        let inputs = Array3::from_shape_fn((7, 2, 3), |_| rng.gen_range(0.0..=1.0));
        for kind in [LogicKind::Conjunction, LogicKind::Disjunction] {
            let out = block_forward(shape, kind, weights.view(), betas.view(), inputs.view()).unwrap();
            for b in 0..7 {
                for c in 0..2 {
                    for o in 0..4 {
                        let p = node(&weights.slice(ndarray::s![c, o, ..]).to_vec());
                        let x = inputs.slice(ndarray::s![b, c, ..]).to_vec();
                        let v = eval_node(kind, &p, &x).unwrap();
                        assert!((out[[b, c, o]] - v).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_block_equals_single_node() {
        let shape = BlockShape::new(1, 1, 2).unwrap();
        let weights = Array3::from_shape_vec((1, 1, 2), vec![0.7, -0.4]).unwrap();
        let betas = Array2::from_elem((1, 1), 1.0);
        let rows = [[0.2, 0.9], [1.0, 0.0], [0.5, 0.5]];
        let inputs = Array3::from_shape_fn((3, 1, 2), |(b, _, i)| rows[b][i]);
        let out = block_forward(shape, LogicKind::Conjunction, weights.view(), betas.view(), inputs.view())
            .unwrap();
        for (b, row) in rows.iter().enumerate() {
            let v = eval_conjunction(&node(&[0.7, -0.4]), row).unwrap();
            assert_eq!(out[[b, 0, 0]], v);
        }
        let same = Array3::from_shape_fn((3, 1, 2), |(_, _, i)| rows[0][i]);
        let out = block_forward(shape, LogicKind::Disjunction, weights.view(), betas.view(), same.view())
            .unwrap();
        assert_eq!(out[[0, 0, 0]], out[[1, 0, 0]]);
        assert_eq!(out[[1, 0, 0]], out[[2, 0, 0]]);
    }

    #[test]
    fn block_shape_mismatch() {
        let shape = BlockShape::new(1, 2, 2).unwrap();
        let weights = Array3::<f64>::zeros((1, 2, 3));
        let betas = Array2::from_elem((1, 2), 1.0);
        let inputs = Array3::<f64>::zeros((1, 1, 2));
        assert!(block_forward(shape, LogicKind::Conjunction, weights.view(), betas.view(), inputs.view())
            .is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = NodeParams::<f32>::with_unit_bias(vec![0.5, 0.5]).unwrap();
        let v = eval_conjunction(&p, &[0.9, 0.9]).unwrap();
        assert!((v - 0.9).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn monotone_in_each_input(
            w in proptest::collection::vec(-3.0f64..3.0, 1..6),
            seed in any::<u64>(),
            delta in 0.0f64..0.5,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = w.iter().map(|_| rng.gen_range(0.0..=1.0)).collect();
            let j = rng.gen_range(0..w.len());
            let mut up = x.clone();
            up[j] = (up[j] + delta).min(1.0);
            let p = node(&w);
            for kind in [LogicKind::Conjunction, LogicKind::Disjunction] {
                let base = eval_node(kind, &p, &x).unwrap();
                let moved = eval_node(kind, &p, &up).unwrap();
                if w[j] > 0.0 {
                    prop_assert!(moved >= base);
                } else if w[j] < 0.0 {
                    prop_assert!(moved <= base);
                }
            }
        }

        #[test]
        fn truth_value_constructor(v in -2.0f64..2.0) {
            let ok = TruthValue::new(v).is_ok();
            prop_assert_eq!(ok, (0.0..=1.0).contains(&v));
            let c = TruthValue::clamped(v).value();
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }
}
