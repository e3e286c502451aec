//! Supervised training on episode datasets.
//!
//! The loss is half the mean squared error over all predicted channels,
//! normalized by the "natural skip": the same quantity measured between
//! consecutive ground-truth states. A predictor that copies the last state
//! scores exactly 1 under this normalization, so values below 1 mean the
//! model beats standing still.
//!
//! Multi-step training unrolls the model autoregressively: each prediction
//! is appended to the window (with the oldest step dropped) and the next
//! step is predicted from it, with gradients flowing through the whole
//! chain. The prediction horizon follows a linear curriculum from 1 up to
//! `max_horizon`.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::diffcore::{adam_step, AdamConfig, AdamState, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::{
    forward_window_stack, DropoutCtx, SwarmNetConfig, SwarmNetParams, TapedParams,
};
use crate::swarmgen::EpisodeTensor;

// ── Losses ───────────────────────────────────────────────────────────

/// Half the mean squared difference, accumulated in f64. With `D` channels,
/// `N` agents and `W` rows this is the `1/(2DNW)`-weighted squared error.
pub fn half_mse(pred: &[f32], truth: &[f32]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "loss operands must match");
    let mut acc = 0.0f64;
    for (p, t) in pred.iter().zip(truth) {
        let d = (*p - *t) as f64;
        acc += d * d;
    }
    0.5 * acc / pred.len().max(1) as f64
}

/// Natural-skip loss over transitions `from..from + count` of a state
/// series: half the mean squared difference between consecutive states.
pub fn natural_skip_over(
    states: &[f32],
    t: usize,
    n: usize,
    d: usize,
    from: usize,
    count: usize,
) -> Result<f64> {
    if t < 2 || count == 0 || from + count >= t {
        return Err(Error::InvalidParameter(format!(
            "transitions {from}..{} do not fit a series of {t} steps",
            from + count
        )));
    }
    let step = n * d;
    let mut acc = 0.0f64;
    for k in from..from + count {
        let (a, b) = (&states[k * step..(k + 1) * step], &states[(k + 1) * step..(k + 2) * step]);
        for (x, y) in a.iter().zip(b) {
            let diff = (*y - *x) as f64;
            acc += diff * diff;
        }
    }
    Ok(0.5 * acc / (count * step) as f64)
}

/// Natural-skip loss of a whole episode (all `T - 1` transitions).
/// A stationary episode has no motion to normalize against.
pub fn natural_skip(ep: &EpisodeTensor) -> Result<f64> {
    let l_bar = natural_skip_over(ep.states(), ep.t(), ep.n(), ep.d(), 0, ep.t() - 1)?;
    if l_bar <= 0.0 {
        return Err(Error::NormalizationUndefined);
    }
    Ok(l_bar)
}

/// Raw loss, its normalizer and their ratio for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub l: f64,
    pub l_bar: f64,
    /// `l / l_bar`; absent when the episode is stationary.
    pub l_norm: Option<f64>,
    pub horizon: usize,
    /// Predicted transitions contributing to `l`.
    pub steps: usize,
}

impl LossReport {
    pub fn new(l: f64, l_bar: f64, horizon: usize, steps: usize) -> Self {
        LossReport {
            l,
            l_bar,
            l_norm: (l_bar > 0.0).then_some(l / l_bar),
            horizon,
            steps,
        }
    }
}

// ── Curriculum ───────────────────────────────────────────────────────

/// Linear horizon ramp: `+1` every `epochs_per_increment` epochs, from
/// `start` up to (and held at) `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurriculumSchedule {
    pub start: usize,
    pub max: usize,
    pub epochs_per_increment: usize,
}

impl CurriculumSchedule {
    pub fn new(start: usize, max: usize, epochs_per_increment: usize) -> Result<Self> {
        if start < 1 || max < start || epochs_per_increment < 1 {
            return Err(Error::Config(format!(
                "bad curriculum: start {start}, max {max}, every {epochs_per_increment} epochs"
            )));
        }
        Ok(CurriculumSchedule {
            start,
            max,
            epochs_per_increment,
        })
    }

    /// Default ramp for a run: one increment every `⌈epochs/10⌉` epochs, so
    /// 30 epochs ramp 1,1,1,2,2,2,…,10.
    pub fn for_run(run: &TrainRunConfig) -> Result<Self> {
        Self::new(1, run.max_horizon, run.epochs.div_ceil(10).max(1))
    }

    /// Horizon for a zero-based epoch index; non-decreasing in `epoch`.
    pub fn horizon_at(&self, epoch: usize) -> usize {
        (self.start + epoch / self.epochs_per_increment).min(self.max)
    }
}

// ── Run configuration ────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub epochs: usize,
    /// Episodes per gradient step.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Fraction of episodes held out for validation.
    pub val_fraction: f32,
    /// When false the horizon stays at `fixed_horizon` for the whole run.
    pub curriculum: bool,
    pub fixed_horizon: usize,
    pub max_horizon: usize,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            epochs: 30,
            batch_size: 8,
            adam: AdamConfig::default(),
            seed: 0,
            val_fraction: 0.1,
            curriculum: true,
            fixed_horizon: 1,
            max_horizon: 10,
        }
    }
}

impl TrainRunConfig {
    /// Largest horizon the run will ever unroll.
    pub fn peak_horizon(&self) -> usize {
        if self.curriculum {
            self.max_horizon
        } else {
            self.fixed_horizon
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::Config(
                "epochs and batch size must be at least 1".into(),
            ));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation fraction must be in (0, 1), got {}",
                self.val_fraction
            )));
        }
        if self.fixed_horizon < 1 || self.max_horizon < 1 {
            return Err(Error::Config("horizons must be at least 1".into()));
        }
        Ok(())
    }
}

// ── Window stacking ──────────────────────────────────────────────────

/// One episode restructured for batched window prediction: all `W` length-
/// `T_w` windows stacked side by side, plus the `h` per-step target states.
#[derive(Debug, Clone)]
pub struct WindowBatch {
    /// `[T_w, W*N, Din]`; window `k` occupies agent block `k` and covers
    /// episode steps `k..k+T_w-1`.
    pub stack: Tensor,
    /// `[W*N, d_c]` context rows appended to every predicted state when the
    /// window shifts (zeros when the model ignores context).
    pub ctx_rows: Tensor,
    /// `targets[s]` is `[W*N, D]`: window `k`'s step-`s+1` target is episode
    /// state `k + T_w + s`.
    pub targets: Vec<Tensor>,
    pub windows: usize,
    pub n: usize,
}

/// Restructure an episode into every trainable window for horizon `h`.
pub fn stack_windows(
    ep: &EpisodeTensor,
    cfg: &SwarmNetConfig,
    h: usize,
) -> Result<WindowBatch> {
    if h < 1 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if ep.d() != cfg.state_dim {
        return Err(Error::Config(format!(
            "episode has {} state channels, model expects {}",
            ep.d(),
            cfg.state_dim
        )));
    }
    if ep.context_dim() != cfg.context_dim {
        return Err(Error::Config(format!(
            "episode context has {} channels, model expects {}",
            ep.context_dim(),
            cfg.context_dim
        )));
    }
    let (t, n, d) = (ep.t(), ep.n(), ep.d());
    let t_w = cfg.window_len();
    if t < t_w + h {
        return Err(Error::HorizonTooLong {
            requested: h,
            max: t.saturating_sub(t_w),
        });
    }
    let w = t - t_w - h + 1;
    let din = cfg.input_dim();

    let ctx: Vec<f32> = if cfg.use_context {
        ep.context.encoded().to_vec()
    } else {
        vec![0.0; cfg.context_dim]
    };

    let mut stack = Vec::with_capacity(t_w * w * n * din);
    for k in 0..t_w {
        for win in 0..w {
            for row in ep.state_at(win + k).chunks_exact(d) {
                stack.extend_from_slice(row);
                stack.extend_from_slice(&ctx);
            }
        }
    }

    let mut ctx_rows = Vec::with_capacity(w * n * cfg.context_dim);
    for _ in 0..w * n {
        ctx_rows.extend_from_slice(&ctx);
    }

    let targets = (0..h)
        .map(|s| {
            let mut data = Vec::with_capacity(w * n * d);
            for win in 0..w {
                data.extend_from_slice(ep.state_at(win + t_w + s));
            }
            Tensor::new(vec![w * n, d], data)
        })
        .collect();

    Ok(WindowBatch {
        stack: Tensor::new(vec![t_w, w * n, din], stack),
        ctx_rows: Tensor::new(vec![w * n, cfg.context_dim], ctx_rows),
        targets,
        windows: w,
        n,
    })
}

// ── Multi-step unroll ────────────────────────────────────────────────

/// Inference-time input perturbation: fresh zero-mean Gaussian noise on the
/// state channels of each forward pass. The noise never enters the shifted
/// window, so it cannot accumulate across steps.
pub struct InputNoise<'r> {
    pub sigma: f32,
    pub rng: &'r mut ChaCha8Rng,
}

/// Autoregressive unroll of `h` steps over a window stack.
///
/// Each step predicts `[W*N, D]` from the current windows, then shifts every
/// window by one: the oldest step is dropped and the prediction (with its
/// context columns) is appended. Gradients flow through the entire chain.
/// The same code path serves training, prediction and stochastic sampling.
#[allow(clippy::too_many_arguments)]
pub fn multistep_unroll(
    tape: &mut Tape,
    stack: Var,
    ctx_rows: Var,
    w: usize,
    n: usize,
    params: &TapedParams,
    cfg: &SwarmNetConfig,
    h: usize,
    mut dropout: Option<&mut DropoutCtx>,
    mut noise: Option<&mut InputNoise>,
) -> Result<Vec<Var>> {
    if h < 1 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let t_w = cfg.window_len();
    let din = cfg.input_dim();
    let rows = w * n;
    let mut current = stack;
    let mut preds = Vec::with_capacity(h);
    for _ in 0..h {
        let net_in = match noise.as_deref_mut() {
            Some(nz) if nz.sigma > 0.0 => {
                let dist = Normal::new(0.0f32, nz.sigma)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let mut jitter = Tensor::zeros(vec![t_w, rows, din]);
                for r in 0..t_w * rows {
                    for c in 0..cfg.state_dim {
                        jitter.data_mut()[r * din + c] = dist.sample(nz.rng);
                    }
                }
                let jv = tape.leaf(jitter);
                tape.add(current, jv)?
            }
            _ => current,
        };
        let pred =
            forward_window_stack(tape, net_in, w, n, params, cfg, dropout.as_deref_mut())?;
        preds.push(pred);

        let flat = tape.reshape(current, vec![t_w * rows, din])?;
        let tail_rows: Vec<usize> = (rows..t_w * rows).collect();
        let tail = tape.select_rows(flat, Arc::new(tail_rows))?;
        let appended = tape.concat_last(pred, ctx_rows)?;
        let shifted = tape.concat_rows(tail, appended)?;
        current = tape.reshape(shifted, vec![t_w, rows, din])?;
    }
    Ok(preds)
}

/// Tape loss for an unroll: the per-step half-MSE losses averaged over `h`.
pub fn unroll_loss(tape: &mut Tape, preds: &[Var], targets: &[Tensor]) -> Result<Var> {
    assert_eq!(preds.len(), targets.len(), "one target per predicted step");
    let mut acc: Option<Var> = None;
    for (pred, target) in preds.iter().zip(targets) {
        let l = tape.mse(*pred, target)?;
        acc = Some(match acc {
            Some(prev) => tape.add(prev, l)?,
            None => l,
        });
    }
    let sum = acc.expect("h >= 1");
    tape.scale(sum, 0.5 / preds.len() as f32)
}

// ── Training loop ────────────────────────────────────────────────────

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub horizon: usize,
    pub train_l: f64,
    pub train_lnorm: f64,
    pub val_l: f64,
    pub val_lnorm: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best-validation epoch.
    pub params: SwarmNetParams,
    pub best_epoch: usize,
    pub best_val_lnorm: f64,
    pub log: Vec<EpochRow>,
}

/// Train a fresh model on a set of episodes.
///
/// Episodes are split once into train/validation (seeded). Every epoch
/// shuffles the training episodes, accumulates gradients through full
/// `h`-step unrolls batch by batch, and applies one Adam step per batch.
/// Validation always runs at the run's peak horizon so epochs stay
/// comparable; the best-validation parameters are returned.
pub fn train(
    episodes: &[EpisodeTensor],
    cfg: &SwarmNetConfig,
    run: &TrainRunConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    run.validate()?;
    if episodes.len() < 2 {
        return Err(Error::Config(
            "training needs at least two episodes (one is held out)".into(),
        ));
    }
    let t_w = cfg.window_len();
    let peak_h = run.peak_horizon();
    for ep in episodes {
        if ep.t() < t_w + peak_h {
            return Err(Error::HorizonTooLong {
                requested: peak_h,
                max: ep.t().saturating_sub(t_w),
            });
        }
    }

    // one normalizer per episode, reused every epoch
    let skips: Vec<f64> = episodes.iter().map(natural_skip).collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut order: Vec<usize> = (0..episodes.len()).collect();
    order.shuffle(&mut rng);
    let val_count = ((episodes.len() as f32 * run.val_fraction).round() as usize)
        .clamp(1, episodes.len() - 1);
    let (val_idx, train_idx) = order.split_at(val_count);
    let mut train_idx = train_idx.to_vec();
    let val_idx = val_idx.to_vec();

    let mut params = SwarmNetParams::init(cfg, &mut rng);
    params.zero_output_layer(); // start as the copy predictor: L_norm == 1
    let mut adam: Vec<AdamState> = params
        .named()
        .iter()
        .map(|(_, t)| AdamState::new(t.len(), run.adam))
        .collect();

    let schedule = CurriculumSchedule::for_run(run)?;
    let mut log = Vec::with_capacity(run.epochs);
    let mut best: Option<(usize, f64, SwarmNetParams)> = None;

    for epoch in 0..run.epochs {
        let started = Instant::now();
        let h = if run.curriculum {
            schedule.horizon_at(epoch)
        } else {
            run.fixed_horizon
        };

        train_idx.shuffle(&mut rng);
        let mut train_l_sum = 0.0f64;
        let mut train_skip_sum = 0.0f64;
        for (batch_no, batch) in train_idx.chunks(run.batch_size).enumerate() {
            let mut grad_acc: Vec<Tensor> = params
                .named()
                .iter()
                .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
                .collect();
            for &ep_idx in batch {
                let ep = &episodes[ep_idx];
                let wb = stack_windows(ep, cfg, h)?;
                let mut tape = Tape::new();
                let staged = params.stage(&mut tape)?;
                let stack = tape.leaf(wb.stack.clone());
                let ctx = tape.leaf(wb.ctx_rows.clone());
                let preds = multistep_unroll(
                    &mut tape, stack, ctx, wb.windows, wb.n, &staged, cfg, h, None, None,
                )?;
                let loss = unroll_loss(&mut tape, &preds, &wb.targets)?;
                let loss_val = tape.value(loss).data()[0] as f64;
                if !loss_val.is_finite() {
                    return Err(Error::NanLoss {
                        epoch,
                        batch: batch_no,
                    });
                }
                train_l_sum += loss_val;
                train_skip_sum += skips[ep_idx];
                tape.backward(loss)?;
                for (acc, var) in grad_acc.iter_mut().zip(staged.vars()) {
                    if let Some(g) = tape.grad(var) {
                        for (dst, src) in acc.data_mut().iter_mut().zip(g) {
                            *dst += src;
                        }
                    }
                }
            }
            let scale = 1.0 / batch.len() as f32;
            for (tensor, (state, grads)) in params
                .tensors_mut()
                .into_iter()
                .zip(adam.iter_mut().zip(&mut grad_acc))
            {
                grads.data_mut().iter_mut().for_each(|g| *g *= scale);
                adam_step(state, tensor.data_mut(), grads.data())?;
            }
        }
        let train_l = train_l_sum / train_idx.len() as f64;
        let train_lnorm = train_l_sum / train_skip_sum;

        let mut val_l_sum = 0.0f64;
        let mut val_skip_sum = 0.0f64;
        for &ep_idx in &val_idx {
            let report = evaluate_episode(&episodes[ep_idx], &params, cfg, peak_h)?;
            val_l_sum += report.l;
            val_skip_sum += skips[ep_idx];
        }
        let val_l = val_l_sum / val_idx.len() as f64;
        let val_lnorm = val_l_sum / val_skip_sum;

        if best.as_ref().is_none_or(|(_, b, _)| val_lnorm < *b) {
            best = Some((epoch, val_lnorm, params.clone()));
        }
        log.push(EpochRow {
            epoch,
            horizon: h,
            train_l,
            train_lnorm,
            val_l,
            val_lnorm,
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    let (best_epoch, best_val_lnorm, best_params) = best.expect("epochs >= 1");
    Ok(TrainOutcome {
        params: best_params,
        best_epoch,
        best_val_lnorm,
        log,
    })
}

/// Deterministic loss of one episode at horizon `h`: every window unrolled
/// `h` steps, per-step losses averaged, normalized by the episode's full
/// natural skip.
pub fn evaluate_episode(
    ep: &EpisodeTensor,
    params: &SwarmNetParams,
    cfg: &SwarmNetConfig,
    h: usize,
) -> Result<LossReport> {
    let wb = stack_windows(ep, cfg, h)?;
    let mut tape = Tape::new();
    let staged = params.stage(&mut tape)?;
    let stack = tape.leaf(wb.stack.clone());
    let ctx = tape.leaf(wb.ctx_rows.clone());
    let preds = multistep_unroll(
        &mut tape, stack, ctx, wb.windows, wb.n, &staged, cfg, h, None, None,
    )?;
    let mut l = 0.0f64;
    for (pred, target) in preds.iter().zip(&wb.targets) {
        l += half_mse(tape.value(*pred).data(), target.data());
    }
    l /= h as f64;
    let l_bar = natural_skip(ep).unwrap_or(0.0);
    Ok(LossReport::new(l, l_bar, h, wb.windows * h))
}

/// Write a training log as CSV.
pub fn write_train_log(path: &Path, rows: &[EpochRow]) -> Result<()> {
    let mut out = String::from("epoch,horizon,train_L,train_Lnorm,val_L,val_Lnorm,seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.9},{:.9},{:.9},{:.9},{:.3}\n",
            r.epoch, r.horizon, r.train_l, r.train_lnorm, r.val_l, r.val_lnorm, r.seconds
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
