use std::f64::consts::PI;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

/// Adam with optional L1 penalty and decoupled weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub l1_lambda: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Array3<f64>>,
    v: Vec<Array3<f64>>,
}

impl Adam {
    pub fn new(shapes: impl IntoIterator<Item = [usize; 3]>, l1_lambda: f64, weight_decay: f64) -> Self {
        let zeros: Vec<Array3<f64>> = shapes.into_iter().map(Array3::zeros).collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            l1_lambda,
            weight_decay,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update in place. `grads[k]` matches `params[k]`.
    pub fn update<'a>(&mut self, params: impl Iterator<Item = &'a mut Array3<f64>>, grads: &[Array3<f64>], lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (k, w) in params.enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (((wi, &gi), mi), vi) in w.iter_mut().zip(&grads[k]).zip(m.iter_mut()).zip(v.iter_mut()) {
                let g = gi + self.l1_lambda * sgn(*wi);
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let mhat = *mi / bc1;
                let vhat = *vi / bc2;
                *wi -= lr * self.weight_decay * *wi;
                *wi -= lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }

    /// Forgets the moment estimates of one weight, e.g. after it is re-initialized.
    pub fn reset_slot(&mut self, block: usize, idx: [usize; 3]) {
        self.m[block][idx] = 0.0;
        self.v[block][idx] = 0.0;
    }
}

fn sgn(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Cosine annealing with warm restarts, stepped once per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineWarmRestarts {
    pub base_lr: f64,
    pub eta_min: f64,
    pub t_0: usize,
    pub t_mult: usize,
    t_cur: usize,
    t_i: usize,
}

impl CosineWarmRestarts {
    pub fn new(base_lr: f64, t_0: usize, t_mult: usize) -> Self {
        let t_0 = t_0.max(1);
        Self { base_lr, eta_min: 0.0, t_0, t_mult: t_mult.max(1), t_cur: 0, t_i: t_0 }
    }

    pub fn lr(&self) -> f64 {
        self.eta_min + (self.base_lr - self.eta_min) * (1.0 + (PI * self.t_cur as f64 / self.t_i as f64).cos()) / 2.0
    }

    pub fn step(&mut self) {
        self.t_cur += 1;
        if self.t_cur >= self.t_i {
            self.t_cur = 0;
            self.t_i *= self.t_mult;
        }
    }
}
