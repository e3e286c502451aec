//! Dense-tensor computation core with reverse-mode automatic differentiation.
//!
//! Tensors are flat row-major `f32` buffers with a shape vector. A [`Tape`]
//! records every tracked operation during the forward pass (define-by-run;
//! the tape is rebuilt per pass) and replays them in reverse to accumulate
//! gradients. The design is sized for small MLP / Conv1D / graph networks:
//! no views, no graph compilation, broadcasting over leading axes only.
//!
//! Matrix products are the only hot spot and are dispatched to
//! `matrixmultiply::sgemm`; every other kernel is a plain loop. Reductions
//! accumulate in `f64` on top of `f32` storage.

mod adam;
pub mod fdcheck;

pub use adam::{adam_step, AdamConfig, AdamState};

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

/// Dense row-major f32 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![value; n],
        }
    }

    pub fn scalar(value: f32) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    /// Uniform samples in `[lo, hi)`.
    pub fn rand_uniform(shape: Vec<usize>, lo: f32, hi: f32, rng: &mut impl Rng) -> Self {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Size of the last axis; 1 for rank-0.
    pub fn width(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }

    /// Product of all leading axes, i.e. the tensor viewed as `[rows, width]`.
    pub fn rows(&self) -> usize {
        if self.shape.is_empty() {
            1
        } else {
            self.data.len() / self.width().max(1)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f32) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    /// Reinterpret with a new shape of identical element count.
    pub fn reshaped(mut self, shape: Vec<usize>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), self.data.len());
        self.shape = shape;
        self
    }
}

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Recorded operation; parents always precede the output node.
#[derive(Clone)]
enum Op {
    Leaf,
    Matmul { a: Var, b: Var },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { a: Var, factor: f32 },
    Relu { a: Var },
    Tanh { a: Var },
    ConcatLast { a: Var, b: Var },
    ConcatRows { a: Var, b: Var },
    SelectRows { a: Var, indices: Arc<Vec<usize>> },
    SumGroups { a: Var, groups: Arc<Vec<usize>> },
    SliceCols { a: Var, start: usize },
    Reshape { a: Var },
    Mse { pred: Var, target: Arc<Tensor> },
}

/// Wengert tape: one node per tracked tensor, ops in forward order.
///
/// Leaf gradients accumulate across [`Tape::backward`] calls (two calls
/// double them); intermediate gradients are working storage consumed by the
/// sweep.
pub struct Tape {
    vals: Vec<Tensor>,
    grads: Vec<Option<Vec<f32>>>,
    ops: Vec<Op>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            vals: Vec::new(),
            grads: Vec::new(),
            ops: Vec::new(),
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let id = self.vals.len();
        self.vals.push(value);
        self.grads.push(None);
        self.ops.push(op);
        Var(id)
    }

    /// Register an input or parameter tensor.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.vals[v.0]
    }

    pub fn grad(&self, v: Var) -> Option<&[f32]> {
        self.grads[v.0].as_deref()
    }

    /// Gradient of `v`, zeros if nothing flowed to it.
    pub fn grad_or_zeros(&self, v: Var) -> Tensor {
        let shape = self.vals[v.0].shape().to_vec();
        match &self.grads[v.0] {
            Some(g) => Tensor::new(shape, g.clone()),
            None => Tensor::zeros(shape),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.vals.len()
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            *g = None;
        }
    }

    // ── Arithmetic ops ───────────────────────────────────────────────

    /// Matrix product of the `[rows, width]` views: `[m,k] · [k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = (self.vals[a.0].rows(), self.vals[a.0].width());
        let (kb, n) = (self.vals[b.0].rows(), self.vals[b.0].width());
        if k != kb {
            return Err(self.shape_err("matmul", a, b));
        }
        let mut out = Tensor::zeros(vec![m, n]);
        // empty operands (e.g. an empty edge set) produce an all-zero result
        if m * n > 0 && k > 0 {
            sgemm_rm(
                m,
                k,
                n,
                1.0,
                self.vals[a.0].data(),
                self.vals[b.0].data(),
                0.0,
                out.data_mut(),
            );
        }
        Ok(self.push(out, Op::Matmul { a, b }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_broadcast("add", a, b, |x, y| x + y, Op::Add { a, b })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_broadcast("sub", a, b, |x, y| x - y, Op::Sub { a, b })
    }

    /// Elementwise product; `b` may broadcast over leading axes of `a`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_broadcast("mul", a, b, |x, y| x * y, Op::Mul { a, b })
    }

    pub fn scale(&mut self, a: Var, factor: f32) -> Result<Var> {
        let out = Tensor::new(
            self.vals[a.0].shape().to_vec(),
            self.vals[a.0].data().iter().map(|v| v * factor).collect(),
        );
        Ok(self.push(out, Op::Scale { a, factor }))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::new(
            self.vals[a.0].shape().to_vec(),
            self.vals[a.0].data().iter().map(|v| v.max(0.0)).collect(),
        );
        Ok(self.push(out, Op::Relu { a }))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::new(
            self.vals[a.0].shape().to_vec(),
            self.vals[a.0].data().iter().map(|v| v.tanh()).collect(),
        );
        Ok(self.push(out, Op::Tanh { a }))
    }

    // ── Structural ops ───────────────────────────────────────────────

    /// Concatenate along the last axis; all leading axes must agree.
    pub fn concat_last(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.vals[a.0].shape(), self.vals[b.0].shape());
        if sa.is_empty()
            || sb.is_empty()
            || sa.len() != sb.len()
            || sa[..sa.len() - 1] != sb[..sb.len() - 1]
        {
            return Err(self.shape_err("concat_last", a, b));
        }
        let (wa, wb) = (self.vals[a.0].width(), self.vals[b.0].width());
        let rows = self.vals[a.0].rows();
        let mut shape = sa.to_vec();
        *shape.last_mut().unwrap() = wa + wb;
        let mut data = Vec::with_capacity(rows * (wa + wb));
        let (da, db) = (self.vals[a.0].data(), self.vals[b.0].data());
        for r in 0..rows {
            data.extend_from_slice(&da[r * wa..(r + 1) * wa]);
            data.extend_from_slice(&db[r * wb..(r + 1) * wb]);
        }
        Ok(self.push(Tensor::new(shape, data), Op::ConcatLast { a, b }))
    }

    /// Stack the rows of `b` below the rows of `a`; widths must agree.
    /// The output is the flat `[rows_a + rows_b, width]` view; either input
    /// may have zero rows.
    pub fn concat_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (wa, wb) = (self.vals[a.0].width(), self.vals[b.0].width());
        if wa != wb || self.vals[a.0].shape().is_empty() || self.vals[b.0].shape().is_empty() {
            return Err(self.shape_err("concat_rows", a, b));
        }
        let rows = self.vals[a.0].rows() + self.vals[b.0].rows();
        let mut data = Vec::with_capacity(rows * wa);
        data.extend_from_slice(self.vals[a.0].data());
        data.extend_from_slice(self.vals[b.0].data());
        Ok(self.push(Tensor::new(vec![rows, wa], data), Op::ConcatRows { a, b }))
    }

    /// Gather rows of the `[rows, width]` view; duplicate indices allowed
    /// (their gradients accumulate).
    pub fn select_rows(&mut self, a: Var, indices: Arc<Vec<usize>>) -> Result<Var> {
        let rows = self.vals[a.0].rows();
        let w = self.vals[a.0].width();
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(Error::Config(format!(
                "select_rows index {bad} out of range for {rows} rows"
            )));
        }
        let da = self.vals[a.0].data();
        let mut data = Vec::with_capacity(indices.len() * w);
        for &i in indices.iter() {
            data.extend_from_slice(&da[i * w..(i + 1) * w]);
        }
        let out = Tensor::new(vec![indices.len(), w], data);
        Ok(self.push(out, Op::SelectRows { a, indices }))
    }

    /// Sum rows into `num_groups` buckets: `out[groups[r]] += a[r]`.
    pub fn sum_groups(&mut self, a: Var, groups: Arc<Vec<usize>>, num_groups: usize) -> Result<Var> {
        let rows = self.vals[a.0].rows();
        let w = self.vals[a.0].width();
        if groups.len() != rows {
            return Err(Error::Config(format!(
                "sum_groups: {} group labels for {} rows",
                groups.len(),
                rows
            )));
        }
        if let Some(&bad) = groups.iter().find(|&&g| g >= num_groups) {
            return Err(Error::Config(format!(
                "sum_groups group {bad} out of range for {num_groups} groups"
            )));
        }
        let da = self.vals[a.0].data();
        let mut data = vec![0.0f32; num_groups * w];
        for (r, &g) in groups.iter().enumerate() {
            let src = &da[r * w..(r + 1) * w];
            let dst = &mut data[g * w..(g + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        let out = Tensor::new(vec![num_groups, w], data);
        Ok(self.push(out, Op::SumGroups { a, groups }))
    }

    /// Narrow the last axis to `[start, start+len)`.
    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let w = self.vals[a.0].width();
        if start + len > w || self.vals[a.0].shape().is_empty() {
            return Err(Error::Config(format!(
                "slice_cols [{start}, {}) out of range for width {w}",
                start + len
            )));
        }
        let rows = self.vals[a.0].rows();
        let da = self.vals[a.0].data();
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&da[r * w + start..r * w + start + len]);
        }
        let mut shape = self.vals[a.0].shape().to_vec();
        *shape.last_mut().unwrap() = len;
        Ok(self.push(Tensor::new(shape, data), Op::SliceCols { a, start }))
    }

    /// Same data, new shape (element count must match).
    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        if shape.iter().product::<usize>() != self.vals[a.0].len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: self.vals[a.0].shape().to_vec(),
                rhs: shape,
            });
        }
        let out = Tensor::new(shape, self.vals[a.0].data().to_vec());
        Ok(self.push(out, Op::Reshape { a }))
    }

    /// Mean of squared differences over all elements (f64 accumulation).
    /// The target is not gradient-tracked.
    pub fn mse(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        if self.vals[pred.0].shape() != target.shape() {
            return Err(Error::ShapeMismatch {
                op: "mse",
                lhs: self.vals[pred.0].shape().to_vec(),
                rhs: target.shape().to_vec(),
            });
        }
        let mut acc = 0.0f64;
        for (p, t) in self.vals[pred.0].data().iter().zip(target.data()) {
            let d = (*p - *t) as f64;
            acc += d * d;
        }
        let mean = acc / target.len().max(1) as f64;
        let out = Tensor::scalar(mean as f32);
        Ok(self.push(
            out,
            Op::Mse {
                pred,
                target: Arc::new(target.clone()),
            },
        ))
    }

    // ── Backward ─────────────────────────────────────────────────────

    /// Reverse-topological gradient accumulation from a scalar loss.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.vals[loss.0].len() != 1 {
            return Err(Error::NotScalar {
                shape: self.vals[loss.0].shape().to_vec(),
            });
        }
        match &mut self.grads[loss.0] {
            Some(g) => g[0] += 1.0,
            None => self.grads[loss.0] = Some(vec![1.0]),
        }
        for i in (0..self.ops.len()).rev() {
            if matches!(self.ops[i], Op::Leaf) {
                continue;
            }
            // Each node is the output of exactly one op, and all consumers sit
            // later on the tape, so its grad is final when we reach it here.
            // Taking it keeps repeated backward calls additive at the leaves.
            let Some(g_out) = self.grads[i].take() else {
                continue;
            };
            let op = self.ops[i].clone();
            self.propagate(&op, &g_out);
        }
        Ok(())
    }

    fn propagate(&mut self, op: &Op, g: &[f32]) {
        match op {
            Op::Leaf => {}
            Op::Matmul { a, b } => {
                let (m, k) = (self.vals[a.0].rows(), self.vals[a.0].width());
                let n = self.vals[b.0].width();
                if m * k == 0 || n == 0 {
                    return;
                }
                // dA += G · Bᵀ
                {
                    let b_data = &self.vals[b.0].data;
                    let ga = self.grads[a.0].get_or_insert_with(|| vec![0.0; m * k]);
                    unsafe {
                        matrixmultiply::sgemm(
                            m,
                            n,
                            k,
                            1.0,
                            g.as_ptr(),
                            n as isize,
                            1,
                            b_data.as_ptr(),
                            1,
                            n as isize,
                            1.0,
                            ga.as_mut_ptr(),
                            k as isize,
                            1,
                        );
                    }
                }
                // dB += Aᵀ · G
                {
                    let a_ptr = self.vals[a.0].data.as_ptr();
                    let gb = self.grads[b.0].get_or_insert_with(|| vec![0.0; k * n]);
                    unsafe {
                        matrixmultiply::sgemm(
                            k,
                            m,
                            n,
                            1.0,
                            a_ptr,
                            1,
                            k as isize,
                            g.as_ptr(),
                            n as isize,
                            1,
                            1.0,
                            gb.as_mut_ptr(),
                            n as isize,
                            1,
                        );
                    }
                }
            }
            Op::Add { a, b } => {
                self.accum_full(*a, g, 1.0);
                self.accum_broadcast(*b, g, 1.0);
            }
            Op::Sub { a, b } => {
                self.accum_full(*a, g, 1.0);
                self.accum_broadcast(*b, g, -1.0);
            }
            Op::Mul { a, b } => {
                let bl = self.vals[b.0].len();
                let al = self.vals[a.0].len();
                // d a[i] += g[i] * b[i mod |b|]; d b accumulates over the tiling
                {
                    let b_data = self.vals[b.0].data.clone();
                    let ga = self.grads[a.0].get_or_insert_with(|| vec![0.0; al]);
                    for i in 0..al {
                        ga[i] += g[i] * b_data[i % bl];
                    }
                }
                {
                    let a_data = self.vals[a.0].data.clone();
                    let gb = self.grads[b.0].get_or_insert_with(|| vec![0.0; bl]);
                    for i in 0..al {
                        gb[i % bl] += g[i] * a_data[i];
                    }
                }
            }
            Op::Scale { a, factor } => self.accum_full(*a, g, *factor),
            Op::Relu { a } => {
                let ga_new: Vec<f32> = self.vals[a.0]
                    .data
                    .iter()
                    .zip(g)
                    .map(|(&x, &gi)| if x > 0.0 { gi } else { 0.0 })
                    .collect();
                self.accum_vec(*a, &ga_new);
            }
            Op::Tanh { a } => {
                let ga_new: Vec<f32> = self.vals[a.0]
                    .data
                    .iter()
                    .zip(g)
                    .map(|(&x, &gi)| {
                        let y = x.tanh();
                        gi * (1.0 - y * y)
                    })
                    .collect();
                self.accum_vec(*a, &ga_new);
            }
            Op::ConcatLast { a, b } => {
                let (wa, wb) = (self.vals[a.0].width(), self.vals[b.0].width());
                let rows = self.vals[a.0].rows();
                let w = wa + wb;
                {
                    let ga = self.grads[a.0].get_or_insert_with(|| vec![0.0; rows * wa]);
                    for r in 0..rows {
                        for c in 0..wa {
                            ga[r * wa + c] += g[r * w + c];
                        }
                    }
                }
                {
                    let gb = self.grads[b.0].get_or_insert_with(|| vec![0.0; rows * wb]);
                    for r in 0..rows {
                        for c in 0..wb {
                            gb[r * wb + c] += g[r * w + wa + c];
                        }
                    }
                }
            }
            Op::ConcatRows { a, b } => {
                let na = self.vals[a.0].len();
                self.accum_vec(*a, &g[..na]);
                self.accum_vec(*b, &g[na..]);
            }
            Op::SelectRows { a, indices } => {
                let w = self.vals[a.0].width();
                let n = self.vals[a.0].len();
                let ga = self.grads[a.0].get_or_insert_with(|| vec![0.0; n]);
                for (r, &i) in indices.iter().enumerate() {
                    for c in 0..w {
                        ga[i * w + c] += g[r * w + c];
                    }
                }
            }
            Op::SumGroups { a, groups } => {
                let w = self.vals[a.0].width();
                let n = self.vals[a.0].len();
                let ga = self.grads[a.0].get_or_insert_with(|| vec![0.0; n]);
                for (r, &grp) in groups.iter().enumerate() {
                    for c in 0..w {
                        ga[r * w + c] += g[grp * w + c];
                    }
                }
            }
            Op::SliceCols { a, start } => {
                let w = self.vals[a.0].width();
                let rows = self.vals[a.0].rows();
                let n = self.vals[a.0].len();
                let len = g.len() / rows;
                let ga = self.grads[a.0].get_or_insert_with(|| vec![0.0; n]);
                for r in 0..rows {
                    for c in 0..len {
                        ga[r * w + start + c] += g[r * len + c];
                    }
                }
            }
            Op::Reshape { a } => self.accum_full(*a, g, 1.0),
            Op::Mse { pred, target } => {
                let n = target.len().max(1) as f32;
                let scale = 2.0 * g[0] / n;
                let ga_new: Vec<f32> = self.vals[pred.0]
                    .data
                    .iter()
                    .zip(target.data())
                    .map(|(&p, &t)| scale * (p - t))
                    .collect();
                self.accum_vec(*pred, &ga_new);
            }
        }
    }

    fn accum_full(&mut self, v: Var, g: &[f32], factor: f32) {
        let n = self.vals[v.0].len();
        let gv = self.grads[v.0].get_or_insert_with(|| vec![0.0; n]);
        for (dst, src) in gv.iter_mut().zip(g) {
            *dst += factor * src;
        }
    }

    /// Accumulate into `v`, summing `g` over the leading tiling if `v` is
    /// smaller than `g`.
    fn accum_broadcast(&mut self, v: Var, g: &[f32], factor: f32) {
        let n = self.vals[v.0].len();
        let gv = self.grads[v.0].get_or_insert_with(|| vec![0.0; n]);
        for (i, src) in g.iter().enumerate() {
            gv[i % n] += factor * src;
        }
    }

    fn accum_vec(&mut self, v: Var, g: &[f32]) {
        let n = self.vals[v.0].len();
        let gv = self.grads[v.0].get_or_insert_with(|| vec![0.0; n]);
        for (dst, src) in gv.iter_mut().zip(g) {
            *dst += src;
        }
    }

    fn binary_broadcast(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f32, f32) -> f32,
        op: Op,
    ) -> Result<Var> {
        let (sa, sb) = (self.vals[a.0].shape(), self.vals[b.0].shape());
        // b must equal a's shape or be a suffix of it (tiled over leading axes)
        let suffix_ok = sb.len() <= sa.len() && sa[sa.len() - sb.len()..] == *sb;
        if !suffix_ok {
            return Err(self.shape_err(name, a, b));
        }
        let bl = self.vals[b.0].len().max(1);
        let data: Vec<f32> = self.vals[a.0]
            .data
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, self.vals[b.0].data[i % bl]))
            .collect();
        let out = Tensor::new(sa.to_vec(), data);
        Ok(self.push(out, op))
    }

    fn shape_err(&self, op: &'static str, a: Var, b: Var) -> Error {
        Error::ShapeMismatch {
            op,
            lhs: self.vals[a.0].shape().to_vec(),
            rhs: self.vals[b.0].shape().to_vec(),
        }
    }
}

/// Row-major sgemm helper: `c = alpha·a·b + beta·c` with `a [m×k]`, `b [k×n]`.
fn sgemm_rm(m: usize, k: usize, n: usize, alpha: f32, a: &[f32], b: &[f32], beta: f32, c: &mut [f32]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Valid-mode 1D convolution along the time axis.
///
/// `series` is `[T, Cin]` or `[T, B, Cin]` (time outermost), `kernel` is
/// `[K, Cin, Cout]`, `bias` is `[Cout]`. The output keeps the series rank
/// with time length `T − K + 1`: each convolution layer with `K = 3` removes
/// exactly two leading steps.
///
/// Composed from `select_rows` / `matmul` / `add`, so the backward rule is
/// inherited from the primitives.
pub fn conv1d_valid(tape: &mut Tape, series: Var, kernel: Var, bias: Var) -> Result<Var> {
    let sshape = tape.value(series).shape().to_vec();
    let kshape = tape.value(kernel).shape().to_vec();
    if kshape.len() != 3 {
        return Err(Error::Config(format!(
            "conv1d kernel must be [K, Cin, Cout], got {kshape:?}"
        )));
    }
    let (kk, kcin, cout) = (kshape[0], kshape[1], kshape[2]);
    let (t, b, cin) = match sshape.len() {
        2 => (sshape[0], 1, sshape[1]),
        3 => (sshape[0], sshape[1], sshape[2]),
        _ => {
            return Err(Error::Config(format!(
                "conv1d series must be rank 2 or 3, got {sshape:?}"
            )))
        }
    };
    if cin != kcin {
        return Err(Error::ShapeMismatch {
            op: "conv1d_valid",
            lhs: sshape,
            rhs: kshape,
        });
    }
    if t < kk {
        return Err(Error::SeriesTooShort { len: t, kernel: kk });
    }
    let t_out = t - kk + 1;

    // out[t, b] = Σ_τ series[t+τ, b] · kernel[τ]; each τ-slice of the
    // time-major series is one contiguous row range, so each term is a
    // single matmul over [t_out·b, cin].
    let mut acc: Option<Var> = None;
    for tau in 0..kk {
        let rows: Vec<usize> = (tau * b..(tau + t_out) * b).collect();
        let xs = tape.select_rows(series, Arc::new(rows))?;
        let krows: Vec<usize> = (tau * cin..(tau + 1) * cin).collect();
        let ks = tape.select_rows(kernel, Arc::new(krows))?;
        let term = tape.matmul(xs, ks)?;
        acc = Some(match acc {
            Some(prev) => tape.add(prev, term)?,
            None => term,
        });
    }
    let summed = tape.add(acc.expect("K >= 1"), bias)?;
    let out_shape = if sshape.len() == 2 {
        vec![t_out, cout]
    } else {
        vec![t_out, b, cout]
    };
    tape.reshape(summed, out_shape)
}

/// Inverted dropout mask: each element is `0` with probability `p`, else
/// `1/(1−p)`, so the mask has unit expectation.
pub fn dropout_mask(shape: Vec<usize>, p: f32, rng: &mut impl Rng) -> Result<Tensor> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "dropout probability must be in [0, 1), got {p}"
        )));
    }
    let n: usize = shape.iter().product();
    if p == 0.0 {
        return Ok(Tensor::filled(shape, 1.0));
    }
    let keep = 1.0 / (1.0 - p);
    let data = (0..n)
        .map(|_| if rng.gen::<f32>() < p { 0.0 } else { keep })
        .collect();
    Ok(Tensor::new(shape, data))
}
