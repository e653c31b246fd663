//! Gradient training interleaved with bandit-guided structure search.
//!
//! Each epoch runs shuffled minibatch Adam steps. The epoch training loss
//! drives a plateau state machine: improvements feed rewards to the bandit,
//! long plateaus prune weak first-layer slots and rebind them to predicates
//! drawn from the bandit.

mod backprop;
mod bandit;
mod optim;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NrnError, Result};
use crate::eval::roc_auc;
use crate::network::Network;
use crate::preprocess::association_score;

pub use backprop::{bce_loss, compute_gradients, BatchGradients, BCE_EPS};
pub use bandit::{
    bmab_scores, bmab_update, compute_reward, prune_and_sample, reward_class, reward_logic, reward_logic_class,
    Arm, BanditPolicy, PruneStrategy, Slot,
};
pub use optim::{Adam, CosineWarmRestarts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Quantile in `[0, 1]` separating kept from pruned weights.
    pub prune_quantile: f64,
    pub delta: f64,
    /// Plateau length that triggers pruning; `usize::MAX` disables it.
    pub kappa: usize,
    pub tau: usize,
    pub iota: usize,
    pub prune_strategy: PruneStrategy,
    pub ucb_scale: f64,
    /// Magnitude range for re-initialized weights.
    pub reinit_bounds: (f64, f64),
    pub l1_lambda: Option<f64>,
    pub weight_decay: Option<f64>,
    pub t_0: usize,
    pub t_mult: usize,
    pub early_stopping_plateau_count: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            batch_size: 64,
            prune_quantile: 0.5,
            delta: 4.0,
            kappa: 4,
            tau: 15,
            iota: 5,
            prune_strategy: PruneStrategy::Class,
            ucb_scale: 1.5,
            reinit_bounds: (0.002, 0.2),
            l1_lambda: None,
            weight_decay: None,
            t_0: 5,
            t_mult: 2,
            early_stopping_plateau_count: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NrnError::InvalidParameter(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be > 0");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be > 0");
        }
        if !(0.0..=1.0).contains(&self.prune_quantile) {
            return bad("prune quantile must be in [0, 1]");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be > 0");
        }
        if !(self.reinit_bounds.0 < self.reinit_bounds.1) {
            return bad("re-init bounds need a < b");
        }
        if self.t_0 == 0 || self.t_mult == 0 {
            return bad("t_0 and t_mult must be >= 1");
        }
        for v in [self.l1_lambda, self.weight_decay].into_iter().flatten() {
            if !(v >= 0.0) {
                return bad("penalties must be >= 0");
            }
        }
        Ok(())
    }
}

/// What the plateau rule decided for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlateauEvent {
    pub improved: bool,
    pub prune: bool,
    pub kappa_grew: bool,
}

/// Plateau counter with its growing patience `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauSchedule {
    pub l_min: f64,
    pub pc: usize,
    pub kappa: usize,
    pub tau: usize,
    pub iota: usize,
}

impl PlateauSchedule {
    pub fn new(kappa: usize, tau: usize, iota: usize) -> Self {
        Self { l_min: f64::INFINITY, pc: 0, kappa, tau, iota }
    }

    pub fn observe(&mut self, loss: f64) -> PlateauEvent {
        let mut ev = PlateauEvent::default();
        if loss < self.l_min {
            self.l_min = loss;
            self.pc = 0;
            ev.improved = true;
        } else {
            self.pc += 1;
            if self.pc > self.kappa {
                self.pc = 0;
                ev.prune = true;
            } else if self.pc > self.tau {
                self.kappa = self.kappa.saturating_add(self.iota);
                ev.kappa_grew = true;
            }
        }
        ev
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: Option<f64>,
    pub pc: usize,
    pub kappa: usize,
    pub improved: bool,
    pub pruned: bool,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network<f64>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Best validation AUC, or `None` without a usable validation split.
    pub best_val_auc: Option<f64>,
    pub policy: BanditPolicy,
}

/// Training data in predicate space.
#[derive(Debug, Clone, Copy)]
pub struct Split<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [u8],
}

/// Hook that may replace the measured epoch loss before the plateau rule sees it.
pub type LossHook<'a> = dyn FnMut(usize, f64) -> f64 + 'a;

pub fn train(net: Network<f64>, train: Split<'_>, val: Option<Split<'_>>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_hook(net, train, val, cfg, &mut |_, l| l)
}

/// Same as [`train`], with `hook(epoch, loss)` supplying the loss used by the
/// plateau rule. Gradient steps are unaffected.
pub fn train_with_hook(
    mut net: Network<f64>,
    train: Split<'_>,
    val: Option<Split<'_>>,
    cfg: &TrainConfig,
    hook: &mut LossHook<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = train.x.nrows();
    if n == 0 {
        return Err(NrnError::InvalidParameter("empty training split".into()));
    }
    if train.y.len() != n {
        return Err(NrnError::DimensionMismatch { what: "labels", expected: n, found: train.y.len() });
    }
    let width = net.predicates().len();
    if train.x.ncols() != width {
        return Err(NrnError::DimensionMismatch { what: "sample width", expected: width, found: train.x.ncols() });
    }

    let priors: Vec<f64> = (0..width).map(|p| association_score(train.x.column(p), train.y)).collect();
    let mut policy = BanditPolicy::new(priors, cfg.ucb_scale);
    let mut adam = Adam::new(
        net.blocks().iter().map(|b| {
            let s = b.shape();
            [s.channels, s.out_size, s.in_size]
        }),
        cfg.l1_lambda.unwrap_or(0.0),
        cfg.weight_decay.unwrap_or(0.0),
    );
    let mut sched = CosineWarmRestarts::new(cfg.learning_rate, cfg.t_0, cfg.t_mult);
    let mut plateau = PlateauSchedule::new(cfg.kappa, cfg.tau, cfg.iota);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sample_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let val = val.filter(|v| v.x.nrows() > 0);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Network<f64>, usize)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.epochs {
        let lr = sched.lr();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xb = train.x.select(Axis(0), chunk);
            let yb: Vec<u8> = chunk.iter().map(|&r| train.y[r]).collect();
            let g = compute_gradients(&net, xb.view(), &yb)?;
            if !g.loss.is_finite() {
                return Err(NrnError::NonFiniteLoss { loss: g.loss, epoch, step });
            }
            loss_sum += g.loss * chunk.len() as f64;
            adam.update(net.blocks_mut().iter_mut().map(|b| b.weights_mut()), &g.weights, lr);
        }
        sched.step();
        let loss = hook(epoch, loss_sum / n as f64);

        let ev = plateau.observe(loss);
        if ev.improved {
            let r = compute_reward(cfg.prune_strategy, &net, cfg.prune_quantile, train.x, train.y)?;
            bmab_update(&mut policy, &r)?;
        } else if ev.prune {
            let changed =
                prune_and_sample(&mut net, &policy, cfg.prune_quantile, cfg.delta, cfg.reinit_bounds, &mut sample_rng)?;
            for slot in changed {
                adam.reset_slot(0, slot);
            }
        }

        let score = match val {
            Some(v) => Some(validation_score(&net, v)?),
            None => None,
        };
        let val_auc = score.filter(|s| s.1).map(|s| s.0);
        history.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_auc,
            pc: plateau.pc,
            kappa: plateau.kappa,
            improved: ev.improved,
            pruned: ev.prune,
            lr,
        });
        log::debug!("epoch {epoch}: loss {loss:.6} val {val_auc:?} pc {} kappa {}", plateau.pc, plateau.kappa);

        if let Some((s, _)) = score {
            if best.as_ref().is_none_or(|b| s > b.0) {
                best = Some((s, net.clone(), epoch));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.early_stopping_plateau_count {
                    log::info!("early stop at epoch {epoch}");
                    break;
                }
            }
        }
    }

    let (network, best_epoch, best_score) = match best {
        Some((s, net, e)) => (net, e, Some(s)),
        None => {
            let last = history.len() - 1;
            (net, last, None)
        }
    };
    let best_val_auc = best_score.and_then(|_| history[best_epoch].val_auc);
    Ok(TrainOutcome { network, history, best_epoch, best_val_auc, policy })
}

/// Validation AUC, or negative BCE when the split holds a single class.
/// The flag reports whether the value is an AUC.
fn validation_score(net: &Network<f64>, val: Split<'_>) -> Result<(f64, bool)> {
    let p = net.predict(val.x)?;
    match roc_auc(&p, val.y) {
        Ok(a) => Ok((a, true)),
        Err(NrnError::SingleClass) => Ok((-bce_loss(&p, val.y)?, false)),
        Err(e) => Err(e),
    }
}
