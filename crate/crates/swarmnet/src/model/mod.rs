//! The swarm predictor: a temporal Conv1D encoder per agent, one graph
//! convolution over the complete directed agent graph, and a decoding MLP.
//!
//! The encoder condenses a window of `T_w = L(K-1) + 1` consecutive states
//! (plus the broadcast context vector) into one latent per agent. The graph
//! convolution pushes node states onto all `N(N-1)` directed edges, sums the
//! edges targeting each node, and updates the node from that aggregate. The
//! decoder maps the updated node state back to `D` channels; in residual
//! mode that output is added to the window's last observed state.
//!
//! All functions are shared across agents and edges, which makes the whole
//! network permutation equivariant.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::{conv1d_valid, dropout_mask, Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalEncoder {
    /// Stacked valid 1-D convolutions over the window (the default).
    Conv1d,
    /// An MLP on the last state only; no temporal history.
    Markov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmNetConfig {
    /// Channels per agent state (4: px, py, vx, vy).
    pub state_dim: usize,
    /// Length of the encoded context vector appended to every state.
    pub context_dim: usize,
    pub conv_layers: usize,
    pub kernel_size: usize,
    pub conv_channels: usize,
    /// Width of the per-agent latent produced by the encoder.
    pub encoded_dim: usize,
    /// Hidden widths shared by the edge, aggregation, node and decoder MLPs.
    pub mlp_hidden: Vec<usize>,
    pub edge_dim: usize,
    pub dropout: f32,
    pub temporal_encoder: TemporalEncoder,
    /// When false the context channels are still present but zero-filled.
    pub use_context: bool,
    /// Decode a delta added to the last observed state instead of an
    /// absolute next state.
    pub predict_delta: bool,
}

impl Default for SwarmNetConfig {
    fn default() -> Self {
        SwarmNetConfig {
            state_dim: 4,
            context_dim: 5,
            conv_layers: 3,
            kernel_size: 3,
            conv_channels: 32,
            encoded_dim: 32,
            mlp_hidden: vec![64, 64],
            edge_dim: 64,
            dropout: 0.0,
            temporal_encoder: TemporalEncoder::Conv1d,
            use_context: true,
            predict_delta: true,
        }
    }
}

impl SwarmNetConfig {
    /// States consumed per prediction: `L(K-1) + 1` for the conv encoder,
    /// one for the markov encoder.
    pub fn window_len(&self) -> usize {
        match self.temporal_encoder {
            TemporalEncoder::Conv1d => self.conv_layers * (self.kernel_size - 1) + 1,
            TemporalEncoder::Markov => 1,
        }
    }

    /// Channels per input row; context channels are always present.
    pub fn input_dim(&self) -> usize {
        self.state_dim + self.context_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0
            || self.conv_layers == 0
            || self.kernel_size == 0
            || self.conv_channels == 0
            || self.encoded_dim == 0
            || self.edge_dim == 0
        {
            return Err(Error::Config(
                "model dimensions must all be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

// ── Parameters ───────────────────────────────────────────────────────

/// Weights and biases of one MLP: `weights[l]` is `[in_l, out_l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub weights: Vec<Tensor>,
    pub biases: Vec<Tensor>,
}

impl Mlp {
    fn init(dims: &[usize], rng: &mut impl Rng) -> Self {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in dims.windows(2) {
            weights.push(glorot(vec![pair[0], pair[1]], pair[0], pair[1], rng));
            biases.push(Tensor::zeros(vec![pair[1]]));
        }
        Mlp { weights, biases }
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }
}

/// Glorot-uniform initialization keeps activations and gradients at a
/// uniform scale, so no subnetwork starts dead.
fn glorot(shape: Vec<usize>, fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f32).sqrt();
    Tensor::rand_uniform(shape, -limit, limit, rng)
}

/// All learnable tensors. Shared across agents and edges: nothing in here
/// is indexed by agent identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmNetParams {
    /// Conv encoder stack; kernels are `[K, Cin, Cout]`. Empty for markov.
    pub conv_kernels: Vec<Tensor>,
    pub conv_biases: Vec<Tensor>,
    /// Markov encoder MLP; `None` for the conv encoder.
    pub markov: Option<Mlp>,
    /// Edge function: `[2H, hidden.., d_e]`.
    pub edge: Mlp,
    /// Aggregate function applied to summed incoming edges: `[d_e, hidden.., d_e]`.
    pub agg: Mlp,
    /// Node update: `[H + d_e, hidden.., H]`.
    pub node: Mlp,
    /// Decoder back to state channels: `[H, hidden.., D]`.
    pub decoder: Mlp,
}

impl SwarmNetParams {
    pub fn init(cfg: &SwarmNetConfig, rng: &mut impl Rng) -> Self {
        let din = cfg.input_dim();
        let h = cfg.encoded_dim;

        let (mut conv_kernels, mut conv_biases, mut markov) = (Vec::new(), Vec::new(), None);
        match cfg.temporal_encoder {
            TemporalEncoder::Conv1d => {
                for l in 0..cfg.conv_layers {
                    let cin = if l == 0 { din } else { cfg.conv_channels };
                    let cout = if l + 1 == cfg.conv_layers {
                        h
                    } else {
                        cfg.conv_channels
                    };
                    conv_kernels.push(glorot(
                        vec![cfg.kernel_size, cin, cout],
                        cfg.kernel_size * cin,
                        cfg.kernel_size * cout,
                        rng,
                    ));
                    conv_biases.push(Tensor::zeros(vec![cout]));
                }
            }
            TemporalEncoder::Markov => {
                markov = Some(Mlp::init(&dims(din, &cfg.mlp_hidden, h), rng));
            }
        }

        SwarmNetParams {
            conv_kernels,
            conv_biases,
            markov,
            edge: Mlp::init(&dims(2 * h, &cfg.mlp_hidden, cfg.edge_dim), rng),
            agg: Mlp::init(&dims(cfg.edge_dim, &cfg.mlp_hidden, cfg.edge_dim), rng),
            node: Mlp::init(&dims(h + cfg.edge_dim, &cfg.mlp_hidden, h), rng),
            decoder: Mlp::init(&dims(h, &cfg.mlp_hidden, cfg.state_dim), rng),
        }
    }

    /// Zero the decoder's output layer. In residual mode the untrained
    /// model then predicts exactly the last observed state.
    pub fn zero_output_layer(&mut self) {
        if let Some(w) = self.decoder.weights.last_mut() {
            w.fill(0.0);
        }
        if let Some(b) = self.decoder.biases.last_mut() {
            b.fill(0.0);
        }
    }

    /// Named tensors in the canonical (checkpoint and optimizer) order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (l, (k, b)) in self.conv_kernels.iter().zip(&self.conv_biases).enumerate() {
            out.push((format!("conv{l}.kernel"), k));
            out.push((format!("conv{l}.bias"), b));
        }
        if let Some(m) = &self.markov {
            named_mlp(&mut out, "markov", m);
        }
        named_mlp(&mut out, "edge", &self.edge);
        named_mlp(&mut out, "agg", &self.agg);
        named_mlp(&mut out, "node", &self.node);
        named_mlp(&mut out, "decoder", &self.decoder);
        out
    }

    /// Mutable tensors in the same canonical order as [`Self::named`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        for (k, b) in self.conv_kernels.iter_mut().zip(&mut self.conv_biases) {
            out.push(k);
            out.push(b);
        }
        if let Some(m) = &mut self.markov {
            mlp_tensors_mut(&mut out, m);
        }
        mlp_tensors_mut(&mut out, &mut self.edge);
        mlp_tensors_mut(&mut out, &mut self.agg);
        mlp_tensors_mut(&mut out, &mut self.node);
        mlp_tensors_mut(&mut out, &mut self.decoder);
        out
    }

    pub fn num_params(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.is_finite())
    }

    /// Rebuild from named tensors, validating shapes against a config.
    pub fn from_named(cfg: &SwarmNetConfig, tensors: &[(String, Tensor)]) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = SwarmNetParams::init(cfg, &mut rng);
        let expected = params.named();
        if expected.len() != tensors.len() {
            return Err(Error::PoisonedModel(format!(
                "checkpoint has {} tensors, config implies {}",
                tensors.len(),
                expected.len()
            )));
        }
        for ((want_name, want), (name, tensor)) in expected.iter().zip(tensors) {
            if want_name != name {
                return Err(Error::PoisonedModel(format!(
                    "checkpoint tensor '{name}' where '{want_name}' was expected"
                )));
            }
            if want.shape() != tensor.shape() {
                return Err(Error::PoisonedModel(format!(
                    "tensor '{name}' has shape {:?}, config implies {:?}",
                    tensor.shape(),
                    want.shape()
                )));
            }
        }
        for (dst, (_, src)) in params.tensors_mut().into_iter().zip(tensors) {
            *dst = src.clone();
        }
        Ok(params)
    }

    /// Register every parameter on a tape for one forward/backward pass.
    pub fn stage(&self, tape: &mut Tape) -> Result<TapedParams> {
        if !self.is_finite() {
            return Err(Error::PoisonedModel(
                "parameters contain non-finite values".into(),
            ));
        }
        let stage_mlp = |tape: &mut Tape, m: &Mlp| TapedMlp {
            layers: m
                .weights
                .iter()
                .zip(&m.biases)
                .map(|(w, b)| (tape.leaf(w.clone()), tape.leaf(b.clone())))
                .collect(),
        };
        Ok(TapedParams {
            conv: self
                .conv_kernels
                .iter()
                .zip(&self.conv_biases)
                .map(|(k, b)| (tape.leaf(k.clone()), tape.leaf(b.clone())))
                .collect(),
            markov: self.markov.as_ref().map(|m| stage_mlp(tape, m)),
            edge: stage_mlp(tape, &self.edge),
            agg: stage_mlp(tape, &self.agg),
            node: stage_mlp(tape, &self.node),
            decoder: stage_mlp(tape, &self.decoder),
        })
    }
}

fn dims(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut d = vec![input];
    d.extend_from_slice(hidden);
    d.push(output);
    d
}

fn named_mlp<'a>(out: &mut Vec<(String, &'a Tensor)>, prefix: &str, m: &'a Mlp) {
    for (l, (w, b)) in m.weights.iter().zip(&m.biases).enumerate() {
        out.push((format!("{prefix}.{l}.weight"), w));
        out.push((format!("{prefix}.{l}.bias"), b));
    }
}

fn mlp_tensors_mut<'a>(out: &mut Vec<&'a mut Tensor>, m: &'a mut Mlp) {
    for (w, b) in m.weights.iter_mut().zip(&mut m.biases) {
        out.push(w);
        out.push(b);
    }
}

/// Tape handles for one staged parameter set, in canonical order.
#[derive(Debug)]
pub struct TapedParams {
    pub conv: Vec<(Var, Var)>,
    pub markov: Option<TapedMlp>,
    pub edge: TapedMlp,
    pub agg: TapedMlp,
    pub node: TapedMlp,
    pub decoder: TapedMlp,
}

#[derive(Debug)]
pub struct TapedMlp {
    pub layers: Vec<(Var, Var)>,
}

impl TapedParams {
    /// Vars in the same order as [`SwarmNetParams::named`].
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for (k, b) in &self.conv {
            out.push(*k);
            out.push(*b);
        }
        let push_mlp = |out: &mut Vec<Var>, m: &TapedMlp| {
            for (w, b) in &m.layers {
                out.push(*w);
                out.push(*b);
            }
        };
        if let Some(m) = &self.markov {
            push_mlp(&mut out, m);
        }
        push_mlp(&mut out, &self.edge);
        push_mlp(&mut out, &self.agg);
        push_mlp(&mut out, &self.node);
        push_mlp(&mut out, &self.decoder);
        out
    }
}

/// Inference-time dropout source; masks are drawn fresh at every layer.
pub struct DropoutCtx<'r> {
    pub rng: &'r mut ChaCha8Rng,
    pub p: f32,
}

// ── Forward pieces ───────────────────────────────────────────────────

fn mlp_forward(
    tape: &mut Tape,
    mut x: Var,
    mlp: &TapedMlp,
    mut dropout: Option<&mut DropoutCtx>,
) -> Result<Var> {
    let last = mlp.layers.len() - 1;
    for (l, (w, b)) in mlp.layers.iter().enumerate() {
        let z = tape.matmul(x, *w)?;
        x = tape.add(z, *b)?;
        if l < last {
            x = tape.relu(x)?;
            if let Some(ctx) = dropout.as_deref_mut() {
                if ctx.p > 0.0 {
                    let mask =
                        dropout_mask(tape.value(x).shape().to_vec(), ctx.p, ctx.rng)?;
                    let m = tape.leaf(mask);
                    x = tape.mul(x, m)?;
                }
            }
        }
    }
    Ok(x)
}

/// Condense a `[T_w, B, Din]` window into one `[B, H]` latent per series.
///
/// Conv encoder: `L` stacked valid convolutions with ReLU between layers
/// (none after the last) collapse the time axis to length 1. Markov
/// encoder: an MLP on the single (last) step.
pub fn encode_temporal(
    tape: &mut Tape,
    window: Var,
    params: &TapedParams,
    cfg: &SwarmNetConfig,
) -> Result<Var> {
    let shape = tape.value(window).shape().to_vec();
    if shape.len() != 3 {
        return Err(Error::Config(format!(
            "encoder window must be [T_w, B, Din], got {shape:?}"
        )));
    }
    let (t_w, b, din) = (shape[0], shape[1], shape[2]);
    if t_w != cfg.window_len() {
        return Err(Error::Config(format!(
            "window length {t_w} does not match the encoder's T_w = {}",
            cfg.window_len()
        )));
    }
    if din != cfg.input_dim() {
        return Err(Error::Config(format!(
            "window has {din} channels, model expects {}",
            cfg.input_dim()
        )));
    }
    match cfg.temporal_encoder {
        TemporalEncoder::Conv1d => {
            let mut x = window;
            let last = params.conv.len() - 1;
            for (l, (k, bias)) in params.conv.iter().enumerate() {
                x = conv1d_valid(tape, x, *k, *bias)?;
                if l < last {
                    x = tape.relu(x)?;
                }
            }
            tape.reshape(x, vec![b, cfg.encoded_dim])
        }
        TemporalEncoder::Markov => {
            let rows = tape.reshape(window, vec![b, din])?;
            let mlp = params
                .markov
                .as_ref()
                .ok_or_else(|| Error::PoisonedModel("markov encoder has no MLP".into()))?;
            mlp_forward(tape, rows, mlp, None)
        }
    }
}

/// Encode a whole `[T, B, Din]` series at once: every valid window position
/// becomes one latent, giving `[T_s * B, H]` with `T_s = T - L(K-1)`.
pub fn encode_series(
    tape: &mut Tape,
    series: Var,
    params: &TapedParams,
    cfg: &SwarmNetConfig,
) -> Result<Var> {
    let shape = tape.value(series).shape().to_vec();
    if shape.len() != 3 || shape[2] != cfg.input_dim() {
        return Err(Error::Config(format!(
            "series must be [T, B, {}], got {shape:?}",
            cfg.input_dim()
        )));
    }
    let (t, b) = (shape[0], shape[1]);
    if t < cfg.window_len() {
        return Err(Error::SeriesTooShort {
            len: t,
            kernel: cfg.window_len(),
        });
    }
    match cfg.temporal_encoder {
        TemporalEncoder::Conv1d => {
            let mut x = series;
            let last = params.conv.len() - 1;
            for (l, (k, bias)) in params.conv.iter().enumerate() {
                x = conv1d_valid(tape, x, *k, *bias)?;
                if l < last {
                    x = tape.relu(x)?;
                }
            }
            let t_s = t - cfg.conv_layers * (cfg.kernel_size - 1);
            tape.reshape(x, vec![t_s * b, cfg.encoded_dim])
        }
        TemporalEncoder::Markov => {
            let rows = tape.reshape(series, vec![t * b, cfg.input_dim()])?;
            let mlp = params
                .markov
                .as_ref()
                .ok_or_else(|| Error::PoisonedModel("markov encoder has no MLP".into()))?;
            mlp_forward(tape, rows, mlp, None)
        }
    }
}

/// Tape handles of the intermediate graph quantities of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct GraphState {
    /// `[B*N*(N-1), d_e]` edge states, ordered (batch, source, target).
    pub edges: Var,
    /// `[B*N, d_e]` aggregated incoming-edge states after the aggregation MLP.
    pub aggregated: Var,
    /// `[B*N, H]` updated node states.
    pub updated: Var,
}

/// Edge states for every ordered pair: `e_ij = edge_mlp(concat(v_i, v_j))`,
/// with `i` the source and `j` the target. Row order is (batch, i, j).
pub fn edge_update(
    tape: &mut Tape,
    v: Var,
    batch: usize,
    n: usize,
    mlp: &TapedMlp,
    dropout: Option<&mut DropoutCtx>,
) -> Result<Var> {
    let mut src = Vec::with_capacity(batch * n * n.saturating_sub(1));
    let mut dst = Vec::with_capacity(src.capacity());
    for w in 0..batch {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    src.push(w * n + i);
                    dst.push(w * n + j);
                }
            }
        }
    }
    let vi = tape.select_rows(v, Arc::new(src))?;
    let vj = tape.select_rows(v, Arc::new(dst))?;
    let pairs = tape.concat_last(vi, vj)?;
    mlp_forward(tape, pairs, mlp, dropout)
}

/// Aggregate edges *targeting* each node: `agg_mlp(sum_{j != i} e_ji)`.
/// Nodes with no incoming edges (N = 1) aggregate the zero vector.
pub fn aggregate_edges(
    tape: &mut Tape,
    edges: Var,
    batch: usize,
    n: usize,
    mlp: &TapedMlp,
) -> Result<Var> {
    let mut groups = Vec::with_capacity(batch * n * n.saturating_sub(1));
    for w in 0..batch {
        for i in 0..n {
            for j in 0..n {
                // the edge (i -> j) lands in target j's bucket
                if i != j {
                    groups.push(w * n + j);
                }
            }
        }
    }
    let summed = tape.sum_groups(edges, Arc::new(groups), batch * n)?;
    mlp_forward(tape, summed, mlp, None)
}

/// Node update from the node's own state and its aggregated incoming edges.
pub fn node_update(
    tape: &mut Tape,
    v: Var,
    aggregated: Var,
    mlp: &TapedMlp,
    dropout: Option<&mut DropoutCtx>,
) -> Result<Var> {
    let x = tape.concat_last(v, aggregated)?;
    mlp_forward(tape, x, mlp, dropout)
}

/// One full graph convolution over `batch` independent windows of `n` nodes.
pub fn graph_conv(
    tape: &mut Tape,
    v: Var,
    batch: usize,
    n: usize,
    params: &TapedParams,
    mut dropout: Option<&mut DropoutCtx>,
) -> Result<GraphState> {
    if n == 0 {
        return Err(Error::Config("graph needs at least one node".into()));
    }
    let edges = edge_update(tape, v, batch, n, &params.edge, dropout.as_deref_mut())?;
    let aggregated = aggregate_edges(tape, edges, batch, n, &params.agg)?;
    let updated = node_update(tape, v, aggregated, &params.node, dropout)?;
    Ok(GraphState {
        edges,
        aggregated,
        updated,
    })
}

/// Predictions for every window position of a `[T, N, Din]` input series:
/// encode, graph-convolve, decode, producing `[T_s * N, D]` rows.
pub fn forward_series(
    tape: &mut Tape,
    series: Var,
    n: usize,
    params: &TapedParams,
    cfg: &SwarmNetConfig,
    mut dropout: Option<&mut DropoutCtx>,
) -> Result<Var> {
    let t = tape.value(series).shape()[0];
    let encoded = encode_series(tape, series, params, cfg)?;
    let t_s = tape.value(encoded).rows() / n;
    let graph = graph_conv(tape, encoded, t_s, n, params, dropout.as_deref_mut())?;
    let decoded = mlp_forward(tape, graph.updated, &params.decoder, dropout)?;
    if cfg.predict_delta {
        // each window's last observed step: contiguous rows of the series
        let rows = tape.reshape(series, vec![t * n, cfg.input_dim()])?;
        let base_rows: Vec<usize> = ((t - t_s) * n..t * n).collect();
        let base = tape.select_rows(rows, Arc::new(base_rows))?;
        let base_states = tape.slice_cols(base, 0, cfg.state_dim)?;
        tape.add(decoded, base_states)
    } else {
        Ok(decoded)
    }
}

/// Predictions for a stack of `w` independent windows `[T_w, w, N, Din]`
/// (flattened to `[T_w, w*N, Din]`), producing `[w*N, D]` rows.
pub fn forward_window_stack(
    tape: &mut Tape,
    stack: Var,
    w: usize,
    n: usize,
    params: &TapedParams,
    cfg: &SwarmNetConfig,
    mut dropout: Option<&mut DropoutCtx>,
) -> Result<Var> {
    let t_w = cfg.window_len();
    let shape = tape.value(stack).shape().to_vec();
    if shape != [t_w, w * n, cfg.input_dim()] {
        return Err(Error::Config(format!(
            "window stack must be [{t_w}, {}, {}], got {shape:?}",
            w * n,
            cfg.input_dim()
        )));
    }
    let encoded = encode_temporal(tape, stack, params, cfg)?;
    let graph = graph_conv(tape, encoded, w, n, params, dropout.as_deref_mut())?;
    let decoded = mlp_forward(tape, graph.updated, &params.decoder, dropout)?;
    if cfg.predict_delta {
        let rows = tape.reshape(stack, vec![t_w * w * n, cfg.input_dim()])?;
        let base_rows: Vec<usize> = ((t_w - 1) * w * n..t_w * w * n).collect();
        let base = tape.select_rows(rows, Arc::new(base_rows))?;
        let base_states = tape.slice_cols(base, 0, cfg.state_dim)?;
        tape.add(decoded, base_states)
    } else {
        Ok(decoded)
    }
}

/// Build the `[T * N, D + d_c]` input rows for a state series: each state
/// row gets the context vector appended (zeros when context is disabled).
pub fn series_input(
    states: &[f32],
    t: usize,
    n: usize,
    context: &[f32],
    cfg: &SwarmNetConfig,
) -> Result<Tensor> {
    if states.len() != t * n * cfg.state_dim {
        return Err(Error::Config(format!(
            "state buffer length {} does not match T={t}, N={n}, D={}",
            states.len(),
            cfg.state_dim
        )));
    }
    if context.len() != cfg.context_dim {
        return Err(Error::Config(format!(
            "context length {} does not match model context_dim {}",
            context.len(),
            cfg.context_dim
        )));
    }
    let din = cfg.input_dim();
    let mut data = Vec::with_capacity(t * n * din);
    for row in states.chunks_exact(cfg.state_dim) {
        data.extend_from_slice(row);
        if cfg.use_context {
            data.extend_from_slice(context);
        } else {
            data.extend(std::iter::repeat(0.0).take(cfg.context_dim));
        }
    }
    Ok(Tensor::new(vec![t, n, din], data))
}
