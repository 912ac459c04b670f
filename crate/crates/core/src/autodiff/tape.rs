//! Tape-based reverse-mode differentiation over the handful of ops the
//! segmentation network needs.
//!
//! Every forward op appends a node holding its output value. [`Tape::backward`]
//! walks the nodes in exact reverse order, accumulating adjoints additively so
//! that fan-out is handled by linearity. Parameter adjoints are added into the
//! owning [`ParamStore`].

use crate::error::{Error, Result};

use super::conv::{self, ConvGeom};
use super::{ParamId, ParamStore, Scalar, Tensor};

/// Clamp applied to probabilities before taking the log in the loss.
pub const LOG_CLAMP: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Per-channel statistics of one train-mode batch-norm call.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

enum Op<T> {
    Leaf,
    Param(ParamId),
    Conv3d {
        x: Var,
        w: Var,
        b: Var,
        geom: ConvGeom,
    },
    Prelu {
        x: Var,
        a: Var,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        mean: Vec<T>,
        inv_std: Vec<T>,
        train: bool,
    },
    Crop {
        x: Var,
        offset: [usize; 3],
    },
    Concat {
        xs: Vec<Var>,
    },
    Softmax {
        x: Var,
    },
    CrossEntropy {
        probs: Var,
        labels: Vec<u8>,
    },
    Sum {
        x: Var,
    },
    Dot {
        x: Var,
        weights: Vec<T>,
    },
    Add {
        a: Var,
        b: Var,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn spatial(dims: &[usize; 5]) -> usize {
    dims[2] * dims[3] * dims[4]
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Adjoint of a node after [`Tape::backward`]; `None` if it was not reached.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Constant input; no gradient is propagated into it.
    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Leaf whose gradient is recorded and readable through [`Tape::grad`].
    pub fn variable(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        let p = store.get(id);
        self.push(p.value.clone(), Op::Param(id), p.trainable)
    }

    /// Valid cross-correlation with per-output-channel bias, unit stride.
    pub fn conv3d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xd = self.value(x).dims5("conv3d input")?;
        let wd = self.value(w).dims5("conv3d filters")?;
        let bshape = self.value(b).shape().to_vec();
        let [batch, cin, d, h, wi] = xd;
        let [cout, wcin, kd, kh, kw] = wd;
        if wcin != cin {
            return Err(Error::shape(
                "conv3d",
                format!("input has {cin} channels but filters expect {wcin}"),
            ));
        }
        if bshape != [cout] {
            return Err(Error::shape(
                "conv3d",
                format!("bias shape {bshape:?} does not match {cout} output channels"),
            ));
        }
        for (name, k, n) in [("depth", kd, d), ("height", kh, h), ("width", kw, wi)] {
            if k == 0 || k > n {
                return Err(Error::shape(
                    "conv3d",
                    format!("kernel {name} {k} exceeds input {name} {n}"),
                ));
            }
        }
        let geom = ConvGeom {
            batch,
            cin,
            cout,
            input: [d, h, wi],
            kernel: [kd, kh, kw],
        };
        let out = conv::forward(
            &geom,
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
        );
        let [od, oh, ow] = geom.output();
        let value = Tensor::new(vec![batch, cout, od, oh, ow], out)?;
        let rg = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(value, Op::Conv3d { x, w, b, geom }, rg))
    }

    /// `max(0, x) + a·min(0, x)` with one coefficient per channel.
    pub fn prelu(&mut self, x: Var, a: Var) -> Result<Var> {
        let shape = self.value(x).shape().to_vec();
        let channels = self.value(a).len();
        if shape.len() < 2 || shape[1] != channels {
            return Err(Error::shape(
                "prelu",
                format!("{channels} coefficients for input shape {shape:?}"),
            ));
        }
        let inner: usize = shape[2..].iter().product();
        let av = self.value(a).data();
        let xv = self.value(x).data();
        let mut out = Vec::with_capacity(xv.len());
        for (i, chunk) in xv.chunks_exact(inner.max(1)).enumerate() {
            let slope = av[i % channels];
            out.extend(chunk.iter().map(|&v| if v >= T::zero() { v } else { slope * v }));
        }
        let value = Tensor::new(shape, out)?;
        let rg = self.needs(x) || self.needs(a);
        Ok(self.push(value, Op::Prelu { x, a }, rg))
    }

    fn check_affine(&self, op: &'static str, x: Var, gamma: Var, beta: Var) -> Result<[usize; 5]> {
        let dims = self.value(x).dims5(op)?;
        let c = dims[1];
        if self.value(gamma).shape() != [c] || self.value(beta).shape() != [c] {
            return Err(Error::shape(
                op,
                format!(
                    "scale {:?} / shift {:?} do not match {c} channels",
                    self.value(gamma).shape(),
                    self.value(beta).shape()
                ),
            ));
        }
        Ok(dims)
    }

    fn normalize(&self, dims: [usize; 5], x: Var, gamma: Var, beta: Var, mean: &[T], inv_std: &[T]) -> Tensor<T> {
        let [_, c, ..] = dims;
        let n = spatial(&dims);
        let g = self.value(gamma).data();
        let bt = self.value(beta).data();
        let xv = self.value(x).data();
        let mut out = Vec::with_capacity(xv.len());
        for (i, chunk) in xv.chunks_exact(n).enumerate() {
            let ch = i % c;
            let (m, s, gg, bb) = (mean[ch], inv_std[ch], g[ch], bt[ch]);
            out.extend(chunk.iter().map(|&v| gg * (v - m) * s + bb));
        }
        Tensor::new(dims.to_vec(), out).expect("shape preserved")
    }

    /// Batch normalization with statistics over batch and spatial axes.
    pub fn batch_norm_train(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<(Var, BatchStats)> {
        let dims = self.check_affine("batch_norm", x, gamma, beta)?;
        let [b, c, ..] = dims;
        let n = spatial(&dims);
        let count = (b * n) as f64;
        let xv = self.value(x).data();
        let mut mean = vec![0.0f64; c];
        for (i, chunk) in xv.chunks_exact(n).enumerate() {
            mean[i % c] += chunk.iter().map(|v| v.as_f64()).sum::<f64>();
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0f64; c];
        for (i, chunk) in xv.chunks_exact(n).enumerate() {
            let m = mean[i % c];
            var[i % c] += chunk.iter().map(|v| (v.as_f64() - m).powi(2)).sum::<f64>();
        }
        var.iter_mut().for_each(|v| *v /= count);
        let mean_t: Vec<T> = mean.iter().map(|&m| T::from_f64(m)).collect();
        let inv_std: Vec<T> = var.iter().map(|&v| T::from_f64(1.0 / (v + eps).sqrt())).collect();
        let value = self.normalize(dims, x, gamma, beta, &mean_t, &inv_std);
        let rg = self.needs(x) || self.needs(gamma) || self.needs(beta);
        let out = self.push(
            value,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                mean: mean_t,
                inv_std,
                train: true,
            },
            rg,
        );
        Ok((out, BatchStats { mean, var }))
    }

    /// Batch normalization with fixed (running) statistics.
    pub fn batch_norm_infer(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: &[f64],
        var: &[f64],
        eps: f64,
    ) -> Result<Var> {
        let dims = self.check_affine("batch_norm", x, gamma, beta)?;
        if mean.len() != dims[1] || var.len() != dims[1] {
            return Err(Error::shape("batch_norm", "running statistics length mismatch"));
        }
        let mean_t: Vec<T> = mean.iter().map(|&m| T::from_f64(m)).collect();
        let inv_std: Vec<T> = var.iter().map(|&v| T::from_f64(1.0 / (v + eps).sqrt())).collect();
        let value = self.normalize(dims, x, gamma, beta, &mean_t, &inv_std);
        let rg = self.needs(x) || self.needs(gamma) || self.needs(beta);
        Ok(self.push(
            value,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                mean: mean_t,
                inv_std,
                train: false,
            },
            rg,
        ))
    }

    /// Symmetric center crop of the spatial axes to `target`.
    pub fn crop_center(&mut self, x: Var, target: [usize; 3]) -> Result<Var> {
        let [b, c, d, h, w] = self.value(x).dims5("crop")?;
        let mut offset = [0usize; 3];
        for (axis, (&s, &t)) in [d, h, w].iter().zip(&target).enumerate() {
            if t > s || (s - t) % 2 != 0 {
                return Err(Error::shape(
                    "crop",
                    format!("cannot center side {t} inside side {s} on axis {axis}"),
                ));
            }
            offset[axis] = (s - t) / 2;
        }
        let [td, th, tw] = target;
        let xv = self.value(x).data();
        let mut out = Vec::with_capacity(b * c * td * th * tw);
        for plane in xv.chunks_exact(d * h * w) {
            for z in 0..td {
                for y in 0..th {
                    let start = ((z + offset[0]) * h + y + offset[1]) * w + offset[2];
                    out.extend_from_slice(&plane[start..start + tw]);
                }
            }
        }
        let value = Tensor::new(vec![b, c, td, th, tw], out)?;
        let rg = self.needs(x);
        Ok(self.push(value, Op::Crop { x, offset }, rg))
    }

    /// Concatenate along the channel axis, in the given order.
    pub fn concat_channels(&mut self, xs: &[Var]) -> Result<Var> {
        let first = *xs
            .first()
            .ok_or_else(|| Error::shape("concat", "no inputs"))?;
        let [b, _, d, h, w] = self.value(first).dims5("concat")?;
        let mut total = 0;
        for &v in xs {
            let [vb, vc, vd, vh, vw] = self.value(v).dims5("concat")?;
            if (vb, vd, vh, vw) != (b, d, h, w) {
                return Err(Error::shape(
                    "concat",
                    format!("input {:?} does not match {:?}", self.value(v).shape(), [b, 0, d, h, w]),
                ));
            }
            total += vc;
        }
        let n = d * h * w;
        let mut out = Vec::with_capacity(b * total * n);
        for bi in 0..b {
            for &v in xs {
                let t = self.value(v);
                let per = t.shape()[1] * n;
                out.extend_from_slice(&t.data()[bi * per..(bi + 1) * per]);
            }
        }
        let value = Tensor::new(vec![b, total, d, h, w], out)?;
        let rg = xs.iter().any(|&v| self.needs(v));
        Ok(self.push(value, Op::Concat { xs: xs.to_vec() }, rg))
    }

    /// Softmax across the channel axis at every voxel.
    pub fn softmax_channels(&mut self, x: Var) -> Result<Var> {
        let dims = self.value(x).dims5("softmax")?;
        let [b, c, ..] = dims;
        if c < 2 {
            return Err(Error::shape("softmax", format!("need at least 2 channels, got {c}")));
        }
        let n = spatial(&dims);
        let xv = self.value(x).data();
        let mut out = vec![T::zero(); xv.len()];
        for bi in 0..b {
            let base = bi * c * n;
            for v in 0..n {
                let mut max = T::neg_infinity();
                for ch in 0..c {
                    max = max.max(xv[base + ch * n + v]);
                }
                let mut sum = T::zero();
                for ch in 0..c {
                    let e = (xv[base + ch * n + v] - max).exp();
                    out[base + ch * n + v] = e;
                    sum = sum + e;
                }
                for ch in 0..c {
                    out[base + ch * n + v] = out[base + ch * n + v] / sum;
                }
            }
        }
        let value = Tensor::new(dims.to_vec(), out)?;
        let rg = self.needs(x);
        Ok(self.push(value, Op::Softmax { x }, rg))
    }

    /// Mean negative log-likelihood over all segments and voxels.
    ///
    /// `labels` holds one class index per `(batch, voxel)` in row-major order.
    pub fn cross_entropy(&mut self, probs: Var, labels: &[u8]) -> Result<Var> {
        let dims = self.value(probs).dims5("cross_entropy")?;
        let [b, c, ..] = dims;
        let n = spatial(&dims);
        if labels.len() != b * n {
            return Err(Error::shape(
                "cross_entropy",
                format!("{} labels for {} voxels", labels.len(), b * n),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= c) {
            return Err(Error::shape(
                "cross_entropy",
                format!("label {bad} out of range for {c} classes"),
            ));
        }
        let pv = self.value(probs).data();
        let clamp = T::from_f64(LOG_CLAMP);
        let mut total = T::zero();
        for bi in 0..b {
            for v in 0..n {
                let l = labels[bi * n + v] as usize;
                total = total - pv[(bi * c + l) * n + v].max(clamp).ln();
            }
        }
        let loss = total / T::from_f64((b * n) as f64);
        let rg = self.needs(probs);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                probs,
                labels: labels.to_vec(),
            },
            rg,
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).sum();
        let rg = self.needs(x);
        self.push(Tensor::scalar(s), Op::Sum { x }, rg)
    }

    /// `Σ x·weights` with constant weights; handy for probing full Jacobians.
    pub fn dot(&mut self, x: Var, weights: Vec<T>) -> Result<Var> {
        if weights.len() != self.value(x).len() {
            return Err(Error::shape("dot", "weight length mismatch"));
        }
        let s = self
            .value(x)
            .data()
            .iter()
            .zip(&weights)
            .fold(T::zero(), |acc, (&a, &w)| acc + a * w);
        let rg = self.needs(x);
        Ok(self.push(Tensor::scalar(s), Op::Dot { x, weights }, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::shape(
                "add",
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x + y)
            .collect();
        let value = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Add { a, b }, rg))
    }

    /// Populate adjoints of every node reachable from `loss` and add
    /// parameter gradients into `store`.
    pub fn backward(&mut self, loss: Var, store: &mut ParamStore<T>) -> Result<()> {
        let loss_value = self.value(loss);
        if !loss_value.is_scalar() {
            return Err(Error::NonScalarLoss(loss_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(i, &g, &mut grads, store)?;
            grads[i] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    fn accumulate(&self, grads: &mut [Option<Vec<T>>], v: Var, contrib: impl FnOnce(&mut [T])) {
        if !self.needs(v) {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| vec![T::zero(); self.nodes[v.0].value.len()]);
        contrib(slot);
    }

    fn propagate(
        &self,
        i: usize,
        g: &[T],
        grads: &mut [Option<Vec<T>>],
        store: &mut ParamStore<T>,
    ) -> Result<()> {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => {}
            Op::Param(id) => {
                let p = store.get_mut(*id);
                if p.trainable {
                    for (a, &b) in p.grad.data_mut().iter_mut().zip(g) {
                        *a = *a + b;
                    }
                }
            }
            Op::Conv3d { x, w, b, geom } => {
                let mut dw = vec![T::zero(); self.value(*w).len()];
                let mut db = vec![T::zero(); self.value(*b).len()];
                let dx = conv::backward(
                    geom,
                    self.value(*x).data(),
                    self.value(*w).data(),
                    g,
                    &mut dw,
                    &mut db,
                    self.needs(*x),
                );
                self.accumulate(grads, *w, |s| add_into(s, &dw));
                self.accumulate(grads, *b, |s| add_into(s, &db));
                if let Some(dx) = dx {
                    self.accumulate(grads, *x, |s| add_into(s, &dx));
                }
            }
            Op::Prelu { x, a } => {
                let shape = self.value(*x).shape();
                let c = shape[1];
                let inner: usize = shape[2..].iter().product::<usize>().max(1);
                let xv = self.value(*x).data();
                let av = self.value(*a).data();
                let mut da = vec![T::zero(); c];
                let mut dx = vec![T::zero(); xv.len()];
                for (blk, (xc, gc)) in xv.chunks_exact(inner).zip(g.chunks_exact(inner)).enumerate() {
                    let ch = blk % c;
                    let dxc = &mut dx[blk * inner..(blk + 1) * inner];
                    for ((d, &xi), &gi) in dxc.iter_mut().zip(xc).zip(gc) {
                        if xi >= T::zero() {
                            *d = gi;
                        } else {
                            *d = gi * av[ch];
                            da[ch] = da[ch] + gi * xi;
                        }
                    }
                }
                self.accumulate(grads, *x, |s| add_into(s, &dx));
                self.accumulate(grads, *a, |s| add_into(s, &da));
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                mean,
                inv_std,
                train,
            } => {
                let dims = self.value(*x).dims5("batch_norm")?;
                let c = dims[1];
                let n = spatial(&dims);
                let count = T::from_f64((dims[0] * n) as f64);
                let xv = self.value(*x).data();
                let gm = self.value(*gamma).data();
                let mut dgamma = vec![T::zero(); c];
                let mut dbeta = vec![T::zero(); c];
                for (blk, (xc, gc)) in xv.chunks_exact(n).zip(g.chunks_exact(n)).enumerate() {
                    let ch = blk % c;
                    for (&xi, &gi) in xc.iter().zip(gc) {
                        let xhat = (xi - mean[ch]) * inv_std[ch];
                        dbeta[ch] = dbeta[ch] + gi;
                        dgamma[ch] = dgamma[ch] + gi * xhat;
                    }
                }
                if self.needs(*x) {
                    let mut dx = vec![T::zero(); xv.len()];
                    for (blk, (xc, gc)) in xv.chunks_exact(n).zip(g.chunks_exact(n)).enumerate() {
                        let ch = blk % c;
                        let scale = gm[ch] * inv_std[ch];
                        let dxc = &mut dx[blk * n..(blk + 1) * n];
                        if *train {
                            let mean_g = dbeta[ch] / count;
                            let mean_gx = dgamma[ch] / count;
                            for ((d, &xi), &gi) in dxc.iter_mut().zip(xc).zip(gc) {
                                let xhat = (xi - mean[ch]) * inv_std[ch];
                                *d = scale * (gi - mean_g - xhat * mean_gx);
                            }
                        } else {
                            for (d, &gi) in dxc.iter_mut().zip(gc) {
                                *d = scale * gi;
                            }
                        }
                    }
                    self.accumulate(grads, *x, |s| add_into(s, &dx));
                }
                self.accumulate(grads, *gamma, |s| add_into(s, &dgamma));
                self.accumulate(grads, *beta, |s| add_into(s, &dbeta));
            }
            Op::Crop { x, offset } => {
                let [_, _, d, h, w] = self.value(*x).dims5("crop")?;
                let [_, _, td, th, tw] = node.value.dims5("crop")?;
                self.accumulate(grads, *x, |s| {
                    for (plane, gp) in s.chunks_exact_mut(d * h * w).zip(g.chunks_exact(td * th * tw)) {
                        for z in 0..td {
                            for y in 0..th {
                                let start = ((z + offset[0]) * h + y + offset[1]) * w + offset[2];
                                let src = (z * th + y) * tw;
                                add_into(&mut plane[start..start + tw], &gp[src..src + tw]);
                            }
                        }
                    }
                });
            }
            Op::Concat { xs } => {
                let [b, total, d, h, w] = node.value.dims5("concat")?;
                let n = d * h * w;
                let mut ch_offset = 0;
                for &v in xs {
                    let vc = self.value(v).shape()[1];
                    self.accumulate(grads, v, |s| {
                        for bi in 0..b {
                            let src = (bi * total + ch_offset) * n;
                            add_into(&mut s[bi * vc * n..(bi + 1) * vc * n], &g[src..src + vc * n]);
                        }
                    });
                    ch_offset += vc;
                }
            }
            Op::Softmax { x } => {
                let dims = node.value.dims5("softmax")?;
                let [b, c, ..] = dims;
                let n = spatial(&dims);
                let p = node.value.data();
                self.accumulate(grads, *x, |s| {
                    for bi in 0..b {
                        let base = bi * c * n;
                        for v in 0..n {
                            let mut inner = T::zero();
                            for ch in 0..c {
                                let k = base + ch * n + v;
                                inner = inner + g[k] * p[k];
                            }
                            for ch in 0..c {
                                let k = base + ch * n + v;
                                s[k] = s[k] + p[k] * (g[k] - inner);
                            }
                        }
                    }
                });
            }
            Op::CrossEntropy { probs, labels } => {
                let dims = self.value(*probs).dims5("cross_entropy")?;
                let [b, c, ..] = dims;
                let n = spatial(&dims);
                let pv = self.value(*probs).data();
                let clamp = T::from_f64(LOG_CLAMP);
                let scale = g[0] / T::from_f64((b * n) as f64);
                self.accumulate(grads, *probs, |s| {
                    for bi in 0..b {
                        for v in 0..n {
                            let k = (bi * c + labels[bi * n + v] as usize) * n + v;
                            if pv[k] > clamp {
                                s[k] = s[k] - scale / pv[k];
                            }
                        }
                    }
                });
            }
            Op::Sum { x } => {
                self.accumulate(grads, *x, |s| s.iter_mut().for_each(|v| *v = *v + g[0]));
            }
            Op::Dot { x, weights } => {
                self.accumulate(grads, *x, |s| {
                    for (v, &w) in s.iter_mut().zip(weights) {
                        *v = *v + g[0] * w;
                    }
                });
            }
            Op::Add { a, b } => {
                self.accumulate(grads, *a, |s| add_into(s, g));
                self.accumulate(grads, *b, |s| add_into(s, g));
            }
        }
        Ok(())
    }
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}
