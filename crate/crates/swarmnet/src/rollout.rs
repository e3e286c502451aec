//! Inference-time model use: long-horizon prediction, stochastic sampling,
//! and closed-loop swarm control.
//!
//! Prediction unrolls the model autoregressively from a seed window.
//! Stochastic sampling (`sample_plus`) repeats the rollout `S` times with
//! inference-time dropout and fresh Gaussian input noise per forward pass,
//! treating each pass as one sample of the predictive distribution.
//! `clone_swarm` closes the loop: predicted velocities become control
//! commands for a point-mass plant, and the realized states, not the
//! model's imagined ones, feed the next prediction.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::model::{DropoutCtx, SwarmNetConfig, SwarmNetParams};
use crate::swarmgen::{AgentState, ContextSpec, EpisodeTensor, SimConfig, SimModel, Vec2};
use crate::trainer::{multistep_unroll, InputNoise};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RolloutMode {
    Deterministic,
    Stochastic,
}

/// An `h`-step rollout for one swarm.
#[derive(Debug, Clone)]
pub struct RolloutResult {
    /// `[h, N, D]`: the deterministic prediction, or the sample mean.
    pub predicted: Tensor,
    pub mode: RolloutMode,
    /// `[S, h, N, D]`; stochastic mode only.
    pub samples: Option<Tensor>,
    /// `[h, N, D]` per-channel standard deviation across samples;
    /// stochastic mode only.
    pub dispersion: Option<Tensor>,
    pub horizon: usize,
    pub agents: usize,
    pub state_dim: usize,
}

impl RolloutResult {
    /// Predicted (or mean) state block at one step: `N * D` floats.
    pub fn step(&self, t: usize) -> &[f32] {
        let w = self.agents * self.state_dim;
        &self.predicted.data()[t * w..(t + 1) * w]
    }

    pub fn num_samples(&self) -> usize {
        self.samples
            .as_ref()
            .map_or(0, |s| s.shape()[0])
    }

    /// Sample `s`'s state block at step `t`.
    pub fn sample_step(&self, s: usize, t: usize) -> &[f32] {
        let samples = self.samples.as_ref().expect("stochastic result");
        let w = self.agents * self.state_dim;
        let per_sample = self.horizon * w;
        &samples.data()[s * per_sample + t * w..s * per_sample + (t + 1) * w]
    }

    /// Mean over agents of the positional standard deviation magnitude
    /// `sqrt(sd_x^2 + sd_y^2)` at one step.
    pub fn mean_position_spread(&self, t: usize) -> Option<f64> {
        let disp = self.dispersion.as_ref()?;
        let w = self.agents * self.state_dim;
        let row = &disp.data()[t * w..(t + 1) * w];
        let mut acc = 0.0f64;
        for a in 0..self.agents {
            let (sx, sy) = (
                row[a * self.state_dim] as f64,
                row[a * self.state_dim + 1] as f64,
            );
            acc += (sx * sx + sy * sy).sqrt();
        }
        Some(acc / self.agents as f64)
    }
}

/// Inference-time stochasticity: dropout probability, input noise scale,
/// and how many samples to draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub dropout: f32,
    pub sigma: f32,
    pub samples: usize,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            dropout: 0.1,
            sigma: 0.0,
            samples: 30,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "input noise sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.samples < 1 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        Ok(())
    }

    /// True when sampling cannot produce any spread (all samples identical).
    pub fn is_degenerate(&self) -> bool {
        self.dropout == 0.0 && self.sigma == 0.0
    }
}

/// The first `T_w` states of an episode as a `[T_w, N, D]` seed window.
pub fn seed_window(ep: &EpisodeTensor, t_w: usize) -> Result<Tensor> {
    if ep.t() < t_w {
        return Err(Error::SeriesTooShort {
            len: ep.t(),
            kernel: t_w,
        });
    }
    let mut data = Vec::with_capacity(t_w * ep.n() * ep.d());
    for t in 0..t_w {
        data.extend_from_slice(ep.state_at(t));
    }
    Ok(Tensor::new(vec![t_w, ep.n(), ep.d()], data))
}

fn check_window(window: &Tensor, cfg: &SwarmNetConfig) -> Result<usize> {
    let shape = window.shape();
    if shape.len() != 3 || shape[0] != cfg.window_len() || shape[2] != cfg.state_dim {
        return Err(Error::Config(format!(
            "seed window must be [{}, N, {}], got {shape:?}",
            cfg.window_len(),
            cfg.state_dim
        )));
    }
    Ok(shape[1])
}

/// Window states plus per-row context as the `[T_w, N, Din]` model input,
/// and the `[N, d_c]` context rows appended when the window shifts.
fn window_inputs(
    window: &Tensor,
    ctx: &[f32],
    cfg: &SwarmNetConfig,
) -> Result<(Tensor, Tensor)> {
    let n = check_window(window, cfg)?;
    if ctx.len() != cfg.context_dim {
        return Err(Error::Config(format!(
            "context has {} channels, model expects {}",
            ctx.len(),
            cfg.context_dim
        )));
    }
    let used: Vec<f32> = if cfg.use_context {
        ctx.to_vec()
    } else {
        vec![0.0; cfg.context_dim]
    };
    let t_w = cfg.window_len();
    let din = cfg.input_dim();
    let mut data = Vec::with_capacity(t_w * n * din);
    for row in window.data().chunks_exact(cfg.state_dim) {
        data.extend_from_slice(row);
        data.extend_from_slice(&used);
    }
    let mut ctx_rows = Vec::with_capacity(n * cfg.context_dim);
    for _ in 0..n {
        ctx_rows.extend_from_slice(&used);
    }
    Ok((
        Tensor::new(vec![t_w, n, din], data),
        Tensor::new(vec![n, cfg.context_dim], ctx_rows),
    ))
}

fn rollout_once(
    params: &SwarmNetParams,
    cfg: &SwarmNetConfig,
    stack: &Tensor,
    ctx_rows: &Tensor,
    n: usize,
    h: usize,
    dropout: Option<&mut DropoutCtx>,
    noise: Option<&mut InputNoise>,
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let staged = params.stage(&mut tape)?;
    let sv = tape.leaf(stack.clone());
    let cv = tape.leaf(ctx_rows.clone());
    let preds = multistep_unroll(&mut tape, sv, cv, 1, n, &staged, cfg, h, dropout, noise)?;
    let mut data = Vec::with_capacity(h * n * cfg.state_dim);
    for p in preds {
        data.extend_from_slice(tape.value(p).data());
    }
    Ok(Tensor::new(vec![h, n, cfg.state_dim], data))
}

/// Deterministic `h`-step rollout from a `[T_w, N, D]` seed window.
/// No dropout, no noise: bitwise reproducible.
pub fn predict(
    params: &SwarmNetParams,
    cfg: &SwarmNetConfig,
    window: &Tensor,
    ctx: &[f32],
    h: usize,
) -> Result<RolloutResult> {
    let (stack, ctx_rows) = window_inputs(window, ctx, cfg)?;
    let n = window.shape()[1];
    let predicted = rollout_once(params, cfg, &stack, &ctx_rows, n, h, None, None)?;
    Ok(RolloutResult {
        predicted,
        mode: RolloutMode::Deterministic,
        samples: None,
        dispersion: None,
        horizon: h,
        agents: n,
        state_dim: cfg.state_dim,
    })
}

/// Stochastic sampling: `S` independent rollouts, each with fresh dropout
/// masks and fresh input noise at every forward pass. Sample `s` draws from
/// its own seeded streams, so results are reproducible and independent of
/// evaluation order.
pub fn sample_plus(
    params: &SwarmNetParams,
    cfg: &SwarmNetConfig,
    window: &Tensor,
    ctx: &[f32],
    h: usize,
    noise: &NoiseConfig,
) -> Result<RolloutResult> {
    noise.validate()?;
    let (stack, ctx_rows) = window_inputs(window, ctx, cfg)?;
    let n = window.shape()[1];
    let s_count = noise.samples;
    let per_sample = h * n * cfg.state_dim;

    let mut samples = Vec::with_capacity(s_count * per_sample);
    for s in 0..s_count {
        let mut mask_rng = ChaCha8Rng::seed_from_u64(noise.seed);
        mask_rng.set_stream(2 * s as u64);
        let mut jitter_rng = ChaCha8Rng::seed_from_u64(noise.seed);
        jitter_rng.set_stream(2 * s as u64 + 1);
        let mut dropout = DropoutCtx {
            rng: &mut mask_rng,
            p: noise.dropout,
        };
        let mut jitter = InputNoise {
            sigma: noise.sigma,
            rng: &mut jitter_rng,
        };
        let one = rollout_once(
            params,
            cfg,
            &stack,
            &ctx_rows,
            n,
            h,
            Some(&mut dropout),
            Some(&mut jitter),
        )?;
        samples.extend_from_slice(one.data());
    }

    let mut mean = vec![0.0f64; per_sample];
    for s in 0..s_count {
        for (m, v) in mean.iter_mut().zip(&samples[s * per_sample..(s + 1) * per_sample]) {
            *m += *v as f64;
        }
    }
    for m in &mut mean {
        *m /= s_count as f64;
    }
    let mut var = vec![0.0f64; per_sample];
    for s in 0..s_count {
        for (i, v) in samples[s * per_sample..(s + 1) * per_sample].iter().enumerate() {
            let d = *v as f64 - mean[i];
            var[i] += d * d;
        }
    }
    let dispersion: Vec<f32> = var
        .iter()
        .map(|v| ((v / s_count as f64).sqrt()) as f32)
        .collect();

    let shape = vec![h, n, cfg.state_dim];
    Ok(RolloutResult {
        predicted: Tensor::new(shape.clone(), mean.iter().map(|m| *m as f32).collect()),
        mode: RolloutMode::Stochastic,
        samples: Some(Tensor::new(
            vec![s_count, h, n, cfg.state_dim],
            samples,
        )),
        dispersion: Some(Tensor::new(shape, dispersion)),
        horizon: h,
        agents: n,
        state_dim: cfg.state_dim,
    })
}

// ── Marginal histograms ──────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub agent: usize,
    pub axis: char,
    pub bin_lo: f32,
    pub bin_hi: f32,
    pub mass: f64,
}

/// Per-agent, per-axis position distributions across samples at one step.
#[derive(Debug, Clone)]
pub struct HistogramSet {
    pub step: usize,
    pub bins: usize,
    pub rows: Vec<HistogramRow>,
}

impl HistogramSet {
    /// Bin masses of one agent/axis, in bin order.
    pub fn masses(&self, agent: usize, axis: char) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.agent == agent && r.axis == axis)
            .map(|r| r.mass)
            .collect()
    }
}

/// Histogram the sampled x and y positions of every agent at step `t`.
pub fn marginal_histograms(
    result: &RolloutResult,
    t: usize,
    bins: usize,
) -> Result<HistogramSet> {
    let s_count = result.num_samples();
    if s_count < 30 {
        return Err(Error::InvalidParameter(format!(
            "distribution estimates need at least 30 samples, got {s_count}"
        )));
    }
    if t >= result.horizon {
        return Err(Error::InvalidParameter(format!(
            "step {t} out of range for a {}-step rollout",
            result.horizon
        )));
    }
    if bins < 1 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }

    let mut rows = Vec::with_capacity(result.agents * 2 * bins);
    for agent in 0..result.agents {
        for (axis, chan) in [('x', 0usize), ('y', 1usize)] {
            let values: Vec<f32> = (0..s_count)
                .map(|s| result.sample_step(s, t)[agent * result.state_dim + chan])
                .collect();
            let lo = values.iter().copied().fold(f32::INFINITY, f32::min);
            let hi = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let mut counts = vec![0usize; bins];
            if hi > lo {
                let width = (hi - lo) / bins as f32;
                for v in &values {
                    let idx = (((v - lo) / width) as usize).min(bins - 1);
                    counts[idx] += 1;
                }
                for (b, &c) in counts.iter().enumerate() {
                    rows.push(HistogramRow {
                        agent,
                        axis,
                        bin_lo: lo + b as f32 * width,
                        bin_hi: lo + (b + 1) as f32 * width,
                        mass: c as f64 / s_count as f64,
                    });
                }
            } else {
                // all samples put this coordinate in one spot
                rows.push(HistogramRow {
                    agent,
                    axis,
                    bin_lo: lo,
                    bin_hi: hi,
                    mass: 1.0,
                });
            }
        }
    }
    Ok(HistogramSet { step: t, bins, rows })
}

pub fn write_histograms(path: &Path, set: &HistogramSet) -> Result<()> {
    let mut out = String::from("agent,axis,bin_lo,bin_hi,mass\n");
    for r in &set.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.agent, r.axis, r.bin_lo, r.bin_hi, r.mass
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

// ── Closed-loop clone swarm ──────────────────────────────────────────

/// Point-mass plant executing commanded velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub dt: f32,
    /// Commanded speeds are clipped to this magnitude.
    pub speed_cap: f32,
    /// Positions beyond 5x this half-width count as divergence.
    pub arena_half_width: f32,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            dt: 0.1,
            speed_cap: 2.0,
            arena_half_width: 10.0,
        }
    }
}

impl PlantConfig {
    /// Plant matching a simulator's step size and speed conventions.
    pub fn from_sim(sim: &SimConfig, model: SimModel) -> Self {
        let speed_cap = match model {
            SimModel::Boids => sim.boids.max_speed,
            SimModel::Helbing => 2.0 * sim.helbing.desired_speed,
            SimModel::Chaser => sim.chaser.speed,
        };
        PlantConfig {
            dt: sim.dt,
            speed_cap,
            arena_half_width: sim.arena_half_width,
        }
    }
}

/// A closed-loop run: realized states and the exact windows the model saw.
#[derive(Debug, Clone)]
pub struct CloneResult {
    /// `[steps + 1, N, D]` realized trajectory; row 0 is the initial state.
    pub states: Tensor,
    /// The `[T_w, N, D]` state window fed to the model at each control step.
    pub model_inputs: Vec<Tensor>,
    pub agents: usize,
}

impl CloneResult {
    pub fn state_at(&self, t: usize) -> &[f32] {
        let w = self.agents * 4;
        &self.states.data()[t * w..(t + 1) * w]
    }
}

/// Drive a fresh swarm with the model's predicted velocities.
///
/// The temporal window is bootstrapped by holding the initial states for
/// `T_w` steps. Each control step predicts the next state, takes its
/// velocity channels as the command (clipped to the plant's speed cap),
/// integrates positions, and feeds the realized state (not the predicted
/// one) into the next window.
pub fn clone_swarm(
    params: &SwarmNetParams,
    cfg: &SwarmNetConfig,
    initial: &[AgentState],
    ctx: &ContextSpec,
    steps: usize,
    plant: &PlantConfig,
) -> Result<CloneResult> {
    if initial.is_empty() {
        return Err(Error::Config("clone swarm needs at least one agent".into()));
    }
    if plant.dt <= 0.0 || plant.speed_cap <= 0.0 || plant.arena_half_width <= 0.0 {
        return Err(Error::Config(format!("bad plant parameters {plant:?}")));
    }
    let n = initial.len();
    let d = cfg.state_dim;
    let t_w = cfg.window_len();
    let bound = 5.0 * plant.arena_half_width;

    let initial_row: Vec<f32> = initial.iter().flat_map(|s| s.channels()).collect();
    // stationary-history bootstrap: the window starts as T_w copies of the
    // initial state
    let mut window: Vec<Vec<f32>> = vec![initial_row.clone(); t_w];

    let mut states = Vec::with_capacity((steps + 1) * n * d);
    states.extend_from_slice(&initial_row);
    let mut model_inputs = Vec::with_capacity(steps);
    let mut positions: Vec<Vec2> = initial.iter().map(|s| s.pos).collect();

    for step in 0..steps {
        let mut win_data = Vec::with_capacity(t_w * n * d);
        for row in &window {
            win_data.extend_from_slice(row);
        }
        let win = Tensor::new(vec![t_w, n, d], win_data);
        model_inputs.push(win.clone());

        let rollout = predict(params, cfg, &win, ctx.encoded(), 1)?;
        let pred = rollout.step(0);

        let mut realized = Vec::with_capacity(n * d);
        for (a, pos) in positions.iter_mut().enumerate() {
            let v_cmd = Vec2::new(pred[a * d + 2], pred[a * d + 3]).clamp_norm(plant.speed_cap);
            *pos += v_cmd * plant.dt;
            if !pos.x.is_finite()
                || !pos.y.is_finite()
                || pos.x.abs() > bound
                || pos.y.abs() > bound
            {
                return Err(Error::RolloutDiverged { step });
            }
            realized.extend_from_slice(&[pos.x, pos.y, v_cmd.x, v_cmd.y]);
        }
        states.extend_from_slice(&realized);
        window.remove(0);
        window.push(realized);
    }

    Ok(CloneResult {
        states: Tensor::new(vec![steps + 1, n, d], states),
        model_inputs,
        agents: n,
    })
}

// ── CSV output ───────────────────────────────────────────────────────

/// Rollout CSV: `sample,step,agent,px,py,vx,vy`. Deterministic results
/// write their single trajectory as sample 0; stochastic results write
/// every sample.
pub fn write_rollout_csv(path: &Path, result: &RolloutResult) -> Result<()> {
    let mut out = String::from("sample,step,agent,px,py,vx,vy\n");
    let mut write_block = |sample: usize, t: usize, block: &[f32]| {
        for a in 0..result.agents {
            let s = &block[a * result.state_dim..(a + 1) * result.state_dim];
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sample, t, a, s[0], s[1], s[2], s[3]
            ));
        }
    };
    match &result.samples {
        Some(_) => {
            for s in 0..result.num_samples() {
                for t in 0..result.horizon {
                    write_block(s, t, result.sample_step(s, t));
                }
            }
        }
        None => {
            for t in 0..result.horizon {
                write_block(0, t, result.step(t));
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Clone-swarm trajectory in the same CSV shape (all rows sample 0).
pub fn write_clone_csv(path: &Path, result: &CloneResult) -> Result<()> {
    let mut out = String::from("sample,step,agent,px,py,vx,vy\n");
    let steps = result.states.shape()[0];
    for t in 0..steps {
        let block = result.state_at(t);
        for a in 0..result.agents {
            let s = &block[a * 4..(a + 1) * 4];
            out.push_str(&format!("0,{},{},{},{},{},{}\n", t, a, s[0], s[1], s[2], s[3]));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
