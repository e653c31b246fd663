use ndarray::{Array3, ArrayView2};

use crate::error::{NrnError, Result};
use crate::logic::{clamp_gate, d_pre_d_weight};
use crate::network::Network;

pub const BCE_EPS: f64 = 1e-7;

fn clip(p: f64) -> f64 {
    p.clamp(BCE_EPS, 1.0 - BCE_EPS)
}

/// Mean binary cross-entropy with predictions clipped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(yhat: &[f64], y: &[u8]) -> Result<f64> {
    if yhat.len() != y.len() {
        return Err(NrnError::DimensionMismatch { what: "labels", expected: yhat.len(), found: y.len() });
    }
    if yhat.is_empty() {
        return Err(NrnError::InvalidParameter("empty batch".into()));
    }
    let total: f64 = yhat
        .iter()
        .zip(y)
        .map(|(&p, &t)| {
            let p = clip(p);
            if t == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / yhat.len() as f64)
}

/// Loss and per-block weight gradients `(C, O, I)` for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradients {
    pub loss: f64,
    pub weights: Vec<Array3<f64>>,
}

/// Backward pass of the mean BCE through every block.
///
/// The clip on the prediction is treated as identity for the gradient
/// (evaluated at the clipped value), so saturated outputs still receive a
/// learning signal. The clamp of each node uses the closed-interval gate.
pub fn compute_gradients(net: &Network<f64>, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<BatchGradients> {
    let trace = net.forward_trace(x)?;
    let yhat = trace.root_outputs();
    let loss = bce_loss(&yhat, y)?;
    let batch = yhat.len();
    let n = batch as f64;

    let root = net.blocks().last().ok_or(NrnError::EmptyNetwork)?;
    let mut d_out = Array3::<f64>::zeros((batch, net.channels(), root.shape().out_size));
    for (b, (&p, &t)) in yhat.iter().zip(y).enumerate() {
        let p = clip(p);
        let t = f64::from(t);
        d_out[[b, 0, 0]] = (p - t) / (p * (1.0 - p)) / n;
    }

    let mut grads: Vec<Array3<f64>> = Vec::with_capacity(net.blocks().len());
    for (k, block) in net.blocks().iter().enumerate().rev() {
        let s = block.shape();
        let w = block.weights();
        let gathered = &trace.gathered[k];
        let pre = &trace.pre[k];
        let conn = block.connectivity();
        let mut g = Array3::<f64>::zeros((s.channels, s.out_size, s.in_size));
        let mut d_in = Array3::<f64>::zeros((batch, s.channels, trace.input_widths[k]));
        for b in 0..batch {
            for c in 0..s.channels {
                for o in 0..s.out_size {
                    let dp = d_out[[b, c, o]] * clamp_gate(pre[[b, c, o]]);
                    if dp == 0.0 {
                        continue;
                    }
                    let sources = conn.node(o);
                    for i in 0..s.in_size {
                        let wj = w[[c, o, i]];
                        g[[c, o, i]] += dp * d_pre_d_weight(block.kind(), wj, gathered[[b, c, o, i]]);
                        d_in[[b, c, sources[i]]] += dp * wj;
                    }
                }
            }
        }
        grads.push(g);
        d_out = d_in;
    }
    grads.reverse();
    Ok(BatchGradients { loss, weights: grads })
}
