//! Valid (unpadded) unit-stride 3D cross-correlation via im2col + GEMM.

use super::kernels::{axpy_rows, dot_rows};
use super::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub batch: usize,
    pub cin: usize,
    pub cout: usize,
    pub input: [usize; 3],
    pub kernel: [usize; 3],
}

impl ConvGeom {
    pub fn output(&self) -> [usize; 3] {
        [
            self.input[0] - self.kernel[0] + 1,
            self.input[1] - self.kernel[1] + 1,
            self.input[2] - self.kernel[2] + 1,
        ]
    }

    fn in_volume(&self) -> usize {
        self.input.iter().product()
    }

    fn out_volume(&self) -> usize {
        self.output().iter().product()
    }

    fn patch(&self) -> usize {
        self.cin * self.kernel.iter().product::<usize>()
    }

    fn pointwise(&self) -> bool {
        self.kernel == [1, 1, 1]
    }
}

/// Floats per unfolded chunk; keeps the patch matrix resident in L2.
const CHUNK_FLOATS: usize = 1 << 16;

impl ConvGeom {
    /// Output depth slices unfolded per chunk.
    fn slices_per_chunk(&self) -> usize {
        let [_, oh, ow] = self.output();
        (CHUNK_FLOATS / (self.patch() * oh * ow)).max(1)
    }
}

/// Unfold output slices `z0..z1` of one sample into a `patch × cols` matrix.
fn im2col<T: Scalar>(g: &ConvGeom, x: &[T], z0: usize, z1: usize, col: &mut [T]) {
    let [_, h, w] = g.input;
    let [kd, kh, kw] = g.kernel;
    let [_, oh, ow] = g.output();
    let cols = (z1 - z0) * oh * ow;
    let in_vol = g.in_volume();
    let mut row = 0;
    for ci in 0..g.cin {
        let xc = &x[ci * in_vol..(ci + 1) * in_vol];
        for dz in 0..kd {
            for dy in 0..kh {
                for dx in 0..kw {
                    let dst_row = &mut col[row * cols..(row + 1) * cols];
                    for oz in z0..z1 {
                        for oy in 0..oh {
                            let src = (oz + dz) * h * w + (oy + dy) * w + dx;
                            let dst = ((oz - z0) * oh + oy) * ow;
                            dst_row[dst..dst + ow].copy_from_slice(&xc[src..src + ow]);
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

/// Scatter-add the adjoint of [`im2col`].
fn col2im<T: Scalar>(g: &ConvGeom, col: &[T], z0: usize, z1: usize, dx: &mut [T]) {
    let [_, h, w] = g.input;
    let [kd, kh, kw] = g.kernel;
    let [_, oh, ow] = g.output();
    let cols = (z1 - z0) * oh * ow;
    let in_vol = g.in_volume();
    let mut row = 0;
    for ci in 0..g.cin {
        let xc = &mut dx[ci * in_vol..(ci + 1) * in_vol];
        for dz in 0..kd {
            for dy in 0..kh {
                for dxk in 0..kw {
                    let src_row = &col[row * cols..(row + 1) * cols];
                    for oz in z0..z1 {
                        for oy in 0..oh {
                            let dst = (oz + dz) * h * w + (oy + dy) * w + dxk;
                            let src = ((oz - z0) * oh + oy) * ow;
                            for (d, &s) in xc[dst..dst + ow].iter_mut().zip(&src_row[src..src + ow]) {
                                *d = *d + s;
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

fn chunks(g: &ConvGeom) -> impl Iterator<Item = (usize, usize)> {
    let od = g.output()[0];
    let step = g.slices_per_chunk();
    (0..od).step_by(step).map(move |z0| (z0, (z0 + step).min(od)))
}

pub(crate) fn forward<T: Scalar>(g: &ConvGeom, x: &[T], w: &[T], b: &[T]) -> Vec<T> {
    let in_len = g.cin * g.in_volume();
    let p = g.out_volume();
    let k = g.patch();
    let plane = g.output()[1] * g.output()[2];
    let out_len = g.cout * p;
    let mut out = vec![T::zero(); g.batch * out_len];
    let mut col = vec![T::zero(); if g.pointwise() { 0 } else { k * g.slices_per_chunk() * plane }];
    for bi in 0..g.batch {
        let xb = &x[bi * in_len..(bi + 1) * in_len];
        let ob = &mut out[bi * out_len..(bi + 1) * out_len];
        for (co, chunk) in ob.chunks_exact_mut(p).enumerate() {
            chunk.fill(b[co]);
        }
        if g.pointwise() {
            axpy_rows(g.cout, p, k, w, (k, 1), xb, p, ob, p);
            continue;
        }
        for (z0, z1) in chunks(g) {
            let cols = (z1 - z0) * plane;
            im2col(g, xb, z0, z1, &mut col);
            axpy_rows(g.cout, cols, k, w, (k, 1), &col, cols, &mut ob[z0 * plane..], p);
        }
    }
    out
}

/// Accumulates filter and bias gradients; returns the input gradient when asked.
pub(crate) fn backward<T: Scalar>(
    g: &ConvGeom,
    x: &[T],
    w: &[T],
    dy: &[T],
    dw: &mut [T],
    db: &mut [T],
    want_dx: bool,
) -> Option<Vec<T>> {
    let in_len = g.cin * g.in_volume();
    let p = g.out_volume();
    let k = g.patch();
    let plane = g.output()[1] * g.output()[2];
    let out_len = g.cout * p;
    let mut dx = want_dx.then(|| vec![T::zero(); g.batch * in_len]);
    let chunk_len = if g.pointwise() { 0 } else { k * g.slices_per_chunk() * plane };
    let mut col = vec![T::zero(); chunk_len];
    let mut dcol = vec![T::zero(); if want_dx { chunk_len } else { 0 }];
    for bi in 0..g.batch {
        let xb = &x[bi * in_len..(bi + 1) * in_len];
        let dyb = &dy[bi * out_len..(bi + 1) * out_len];
        for (co, chunk) in dyb.chunks_exact(p).enumerate() {
            db[co] = chunk.iter().fold(db[co], |acc, &v| acc + v);
        }
        if g.pointwise() {
            dot_rows(g.cout, k, p, dyb, p, xb, p, dw, (k, 1));
            if let Some(dx) = dx.as_mut() {
                let dxb = &mut dx[bi * in_len..(bi + 1) * in_len];
                axpy_rows(k, p, g.cout, w, (1, k), dyb, p, dxb, p);
            }
            continue;
        }
        for (z0, z1) in chunks(g) {
            let cols = (z1 - z0) * plane;
            let dy_chunk = &dyb[z0 * plane..];
            im2col(g, xb, z0, z1, &mut col);
            dot_rows(g.cout, k, cols, dy_chunk, p, &col, cols, dw, (k, 1));
            if let Some(dx) = dx.as_mut() {
                let dcol = &mut dcol[..k * cols];
                dcol.fill(T::zero());
                axpy_rows(k, cols, g.cout, w, (1, k), dy_chunk, p, dcol, cols);
                col2im(g, dcol, z0, z1, &mut dx[bi * in_len..(bi + 1) * in_len]);
            }
        }
    }
    dx
}
