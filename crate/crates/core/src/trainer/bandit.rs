//! Bayesian-UCB bandit over predicate columns, the three reward strategies,
//! and the prune/regrow step on the first layer.

use ndarray::ArrayView2;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NrnError, Result};
use crate::eval::roc_auc;
use crate::network::Network;
use crate::stats::percentile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub prior_mean: f64,
    pub reward_sum: f64,
    pub reward_sq_sum: f64,
    pub pull_count: u64,
}

impl Arm {
    pub fn new(prior_mean: f64) -> Self {
        Self { prior_mean, reward_sum: 0.0, reward_sq_sum: 0.0, pull_count: 0 }
    }

    /// Normal shortcut: the prior acts as one pseudo-observation.
    pub fn posterior_mean(&self) -> f64 {
        (self.prior_mean + self.reward_sum) / (1.0 + self.pull_count as f64)
    }

    /// Sample standard deviation over the prior and observed rewards, or half
    /// the prior before any reward arrives.
    pub fn posterior_std(&self) -> f64 {
        if self.pull_count == 0 {
            return self.prior_mean / 2.0;
        }
        let n = 1.0 + self.pull_count as f64;
        let sum = self.prior_mean + self.reward_sum;
        let sq = self.prior_mean * self.prior_mean + self.reward_sq_sum;
        ((sq - sum * sum / n) / (n - 1.0)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditPolicy {
    pub arms: Vec<Arm>,
    pub ucb_scale: f64,
}

impl BanditPolicy {
    pub fn new(priors: impl IntoIterator<Item = f64>, ucb_scale: f64) -> Self {
        Self { arms: priors.into_iter().map(Arm::new).collect(), ucb_scale }
    }
}

pub fn bmab_update(policy: &mut BanditPolicy, rewards: &[f64]) -> Result<()> {
    if rewards.len() != policy.arms.len() {
        return Err(NrnError::DimensionMismatch { what: "reward vector", expected: policy.arms.len(), found: rewards.len() });
    }
    for (arm, &r) in policy.arms.iter_mut().zip(rewards) {
        if r > 0.0 {
            arm.pull_count += 1;
            arm.reward_sum += r;
            arm.reward_sq_sum += r * r;
        }
    }
    Ok(())
}

pub fn bmab_scores(policy: &BanditPolicy) -> Vec<f64> {
    policy
        .arms
        .iter()
        .map(|a| {
            let bonus = policy.ucb_scale * a.posterior_std() / (1.0 + a.pull_count as f64).sqrt();
            (a.posterior_mean() + bonus).max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneStrategy {
    Class,
    Logic,
    LogicClass,
}

/// `(channel, node, slot)` address of a first-layer weight.
pub type Slot = [usize; 3];

fn first_layer_slots(net: &Network<f64>) -> Vec<(Slot, usize, f64)> {
    let b0 = &net.blocks()[0];
    let s = b0.shape();
    let mut out = Vec::with_capacity(s.weight_count());
    for c in 0..s.channels {
        for o in 0..s.out_size {
            for i in 0..s.in_size {
                out.push(([c, o, i], b0.connectivity().node(o)[i], b0.weights()[[c, o, i]]));
            }
        }
    }
    out
}

/// Rewards each predicate column by the magnitude of first-layer weights
/// reading it, for weights strictly above the `rho` quantile of magnitudes.
pub fn reward_class(net: &Network<f64>, rho: f64) -> Vec<f64> {
    let slots = first_layer_slots(net);
    let mags: Vec<f64> = slots.iter().map(|s| s.2.abs()).collect();
    let cut = percentile(&mags, rho);
    let mut r = vec![0.0; net.predicates().len()];
    for (_, col, w) in slots {
        if w.abs() > cut {
            r[col] += w.abs();
        }
    }
    r
}

/// Rewards the inputs of first-layer nodes whose AUC on `(x, y)` is strictly
/// above the `rho` quantile of node AUCs.
pub fn reward_logic(net: &Network<f64>, rho: f64, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<Vec<f64>> {
    let out = net.blocks()[0].forward(lift(net, x)?.view())?;
    let b0 = &net.blocks()[0];
    let s = b0.shape();
    let mut aucs = Vec::with_capacity(s.channels * s.out_size);
    for c in 0..s.channels {
        for o in 0..s.out_size {
            let col: Vec<f64> = (0..x.nrows()).map(|b| out[[b, c, o]]).collect();
            aucs.push(((c, o), roc_auc(&col, y)?));
        }
    }
    let values: Vec<f64> = aucs.iter().map(|a| a.1).collect();
    let cut = percentile(&values, rho);
    let mut r = vec![0.0; net.predicates().len()];
    for ((_, o), a) in aucs {
        if a > cut {
            for &col in b0.connectivity().node(o) {
                r[col] += a;
            }
        }
    }
    Ok(r)
}

/// Rewards the inputs of first-layer nodes through the second-layer weights
/// reading them.
pub fn reward_logic_class(net: &Network<f64>, rho: f64) -> Result<Vec<f64>> {
    if net.blocks().len() < 2 {
        return Err(NrnError::Structure("logic_class rewards need at least two layers".into()));
    }
    let (b0, b1) = (&net.blocks()[0], &net.blocks()[1]);
    let mags: Vec<f64> = b1.weights().iter().map(|w| w.abs()).collect();
    let cut = percentile(&mags, rho);
    let s = b1.shape();
    let mut r = vec![0.0; net.predicates().len()];
    for c in 0..s.channels {
        for o in 0..s.out_size {
            for i in 0..s.in_size {
                let w = b1.weights()[[c, o, i]].abs();
                if w > cut {
                    for &col in b0.connectivity().node(b1.connectivity().node(o)[i]) {
                        r[col] += w;
                    }
                }
            }
        }
    }
    Ok(r)
}

fn lift(net: &Network<f64>, x: ArrayView2<'_, f64>) -> Result<ndarray::Array3<f64>> {
    if x.ncols() != net.predicates().len() {
        return Err(NrnError::DimensionMismatch { what: "sample width", expected: net.predicates().len(), found: x.ncols() });
    }
    Ok(ndarray::Array3::from_shape_fn((x.nrows(), net.channels(), x.ncols()), |(b, _, p)| x[[b, p]]))
}

pub fn compute_reward(
    strategy: PruneStrategy,
    net: &Network<f64>,
    rho: f64,
    x: ArrayView2<'_, f64>,
    y: &[u8],
) -> Result<Vec<f64>> {
    match strategy {
        PruneStrategy::Class => Ok(reward_class(net, rho)),
        PruneStrategy::Logic => reward_logic(net, rho, x, y),
        PruneStrategy::LogicClass => reward_logic_class(net, rho),
    }
}

/// Prunes first-layer slots whose weight magnitude is not strictly above the
/// `rho` quantile and rebinds each to a predicate drawn from the bandit.
///
/// Scores of predicates still read by a kept slot are divided by `delta`. A
/// node never reads the same predicate twice, so its other inputs are
/// excluded from each draw. A slot landing on a kept predicate gets the sign
/// opposite to the sum of the kept weights on it; otherwise the sign is
/// random. Magnitudes are uniform in `bounds`. Returns the rewritten slots.
pub fn prune_and_sample<R: Rng>(
    net: &mut Network<f64>,
    policy: &BanditPolicy,
    rho: f64,
    delta: f64,
    bounds: (f64, f64),
    rng: &mut R,
) -> Result<Vec<Slot>> {
    let width = net.predicates().len();
    if policy.arms.is_empty() {
        return Err(NrnError::InvalidParameter("bandit policy has no arms".into()));
    }
    if policy.arms.len() != width {
        return Err(NrnError::DimensionMismatch { what: "bandit arms", expected: width, found: policy.arms.len() });
    }
    if !(delta > 0.0) {
        return Err(NrnError::InvalidParameter("delta must be > 0".into()));
    }
    let (a, b) = bounds;
    if !(a < b) {
        return Err(NrnError::InvalidParameter("re-init bounds need a < b".into()));
    }

    let slots = first_layer_slots(net);
    let mags: Vec<f64> = slots.iter().map(|s| s.2.abs()).collect();
    let cut = percentile(&mags, rho);
    let mut kept_sum = vec![0.0; width];
    let mut kept = vec![false; width];
    let mut pruned = Vec::new();
    for &(slot, col, w) in &slots {
        if w.abs() > cut {
            kept[col] = true;
            kept_sum[col] += w;
        } else {
            pruned.push(slot);
        }
    }
    let scores: Vec<f64> = bmab_scores(policy)
        .into_iter()
        .enumerate()
        .map(|(p, s)| if kept[p] { s / delta } else { s })
        .collect();

    let block = &mut net.blocks_mut()[0];
    for &[c, o, i] in &pruned {
        let node = block.connectivity().node(o).to_vec();
        let mut weights = scores.clone();
        for (j, &src) in node.iter().enumerate() {
            if j != i {
                weights[src] = 0.0;
            }
        }
        let pick = match WeightedIndex::new(&weights) {
            Ok(dist) => dist.sample(rng),
            Err(_) => {
                let allowed: Vec<usize> =
                    (0..width).filter(|p| *p == node[i] || !node.contains(p)).collect();
                allowed[rng.gen_range(0..allowed.len())]
            }
        };
        block.connectivity_mut().set(o, i, pick);
        let mag = rng.gen_range(a..=b);
        let sign = if kept[pick] && kept_sum[pick] != 0.0 {
            -kept_sum[pick].signum()
        } else if rng.gen_bool(0.5) {
            1.0
        } else {
            -1.0
        };
        block.weights_mut()[[c, o, i]] = sign * mag;
    }
    Ok(pruned)
}
