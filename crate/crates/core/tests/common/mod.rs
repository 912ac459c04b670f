#![allow(dead_code)]

use isoseg_core::autodiff::{ParamStore, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod grad_cases;

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Random values bounded away from zero, for ops with a kink there.
pub fn random_off_zero(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    random(shape, rng).map(|v| if v.abs() < 0.05 { v.signum() * 0.05 + v } else { v })
}

/// Largest relative error between analytic and central-difference gradients
/// of the scalar built by `f` with respect to every element of `inputs`.
pub fn max_grad_error(inputs: &[Tensor<f64>], f: impl Fn(&mut Tape<f64>, &[Var]) -> Var) -> f64 {
    let mut store = ParamStore::new();
    let eval = |xs: &[Tensor<f64>]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.variable(x.clone())).collect();
        let out = f(&mut tape, &vars);
        (tape, vars, out)
    };
    let (mut tape, vars, out) = eval(inputs);
    tape.backward(out, &mut store).unwrap();
    let mut worst: f64 = 0.0;
    for (i, x) in inputs.iter().enumerate() {
        let analytic = tape.grad(vars[i]).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; x.len()]);
        for j in 0..x.len() {
            let mut shifted = inputs.to_vec();
            shifted[i].data_mut()[j] = x.data()[j] + FD_STEP;
            let (t, _, o) = eval(&shifted);
            let plus = t.value(o).data()[0];
            shifted[i].data_mut()[j] = x.data()[j] - FD_STEP;
            let (t, _, o) = eval(&shifted);
            let minus = t.value(o).data()[0];
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic[j];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

/// Reduces any tensor to a scalar with fixed random weights so every output
/// element contributes a distinct sensitivity.
pub fn project(tape: &mut Tape<f64>, y: Var, seed: u64) -> Var {
    let n = tape.value(y).len();
    let mut r = rng(seed);
    let w: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    tape.dot(y, w).unwrap()
}

/// Direct seven-loop valid cross-correlation.
pub fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64]) -> Tensor<f64> {
    let [bn, cin, d, h, wd] = x.dims5("x").unwrap();
    let [cout, _, kd, kh, kw] = w.dims5("w").unwrap();
    let (od, oh, ow) = (d - kd + 1, h - kh + 1, wd - kw + 1);
    let xs = x.data();
    let ws = w.data();
    let mut out = vec![0.0; bn * cout * od * oh * ow];
    for n in 0..bn {
        for co in 0..cout {
            for z in 0..od {
                for y in 0..oh {
                    for xx in 0..ow {
                        let mut acc = b[co];
                        for ci in 0..cin {
                            for dz in 0..kd {
                                for dy in 0..kh {
                                    for dx in 0..kw {
                                        let xi = (((n * cin + ci) * d + z + dz) * h + y + dy) * wd + xx + dx;
                                        let wi = (((co * cin + ci) * kd + dz) * kh + dy) * kw + dx;
                                        acc += xs[xi] * ws[wi];
                                    }
                                }
                            }
                        }
                        out[(((n * cout + co) * od + z) * oh + y) * ow + xx] = acc;
                    }
                }
            }
        }
    }
    Tensor::new(vec![bn, cout, od, oh, ow], out).unwrap()
}

/// Literal triple sum −(1/(S·V)) Σ_s Σ_v Σ_c δ(y = c) log p over a probability
/// tensor of shape (S, C, d, h, w).
pub fn literal_cross_entropy(probs: &[f64], shape: &[usize], labels: &[u8]) -> f64 {
    let (s, c) = (shape[0], shape[1]);
    let v: usize = shape[2..].iter().product();
    let mut total = 0.0;
    for si in 0..s {
        for vi in 0..v {
            for ci in 0..c {
                if labels[si * v + vi] as usize == ci {
                    total += probs[(si * c + ci) * v + vi].max(1e-12).ln();
                }
            }
        }
    }
    -total / (s * v) as f64
}

/// Random mask with roughly `density` of its voxels set.
pub fn random_mask(dims: [usize; 3], density: f64, rng: &mut impl Rng) -> Vec<bool> {
    (0..dims.iter().product::<usize>()).map(|_| rng.random_bool(density)).collect()
}

pub fn brute_dsc(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let total = a.iter().filter(|x| **x).count() + b.iter().filter(|x| **x).count();
    if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    }
}

/// Boundary by checking each voxel's six neighbours one by one.
pub fn brute_boundary(dims: [usize; 3], bits: &[bool]) -> Vec<[usize; 3]> {
    let at = |p: [i64; 3]| -> bool {
        if (0..3).any(|a| p[a] < 0 || p[a] >= dims[a] as i64) {
            return false;
        }
        bits[p[0] as usize + dims[0] * (p[1] as usize + dims[1] * p[2] as usize)]
    };
    let mut out = Vec::new();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let p = [x as i64, y as i64, z as i64];
                if !at(p) {
                    continue;
                }
                let offsets = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];
                if offsets.iter().any(|o| !at([p[0] + o[0], p[1] + o[1], p[2] + o[2]])) {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// All-pairs minimum distance, evaluated as sqrt(((dx·sx)² + (dy·sy)²) + (dz·sz)²).
pub fn brute_directed(from: &[[usize; 3]], to: &[[usize; 3]], s: [f64; 3]) -> Vec<f64> {
    from.iter()
        .map(|p| {
            to.iter()
                .map(|q| {
                    let d: [f64; 3] = std::array::from_fn(|a| (p[a] as f64 - q[a] as f64) * s[a]);
                    (d[0] * d[0] + d[1] * d[1]) + d[2] * d[2]
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

pub fn brute_p95(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((0.95 * v.len() as f64) - 1e-9).ceil() as usize;
    v[rank.max(1) - 1]
}

pub struct MaskPair {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

/// Two random masks on a grid of at most 12³, each with at least one voxel.
pub fn random_mask_pair(r: &mut impl Rng, anisotropic: bool) -> MaskPair {
    let dims = [r.random_range(1..=12), r.random_range(1..=12), r.random_range(1..=12)];
    let spacing = if anisotropic {
        [r.random_range(0.3..2.5), r.random_range(0.3..2.5), r.random_range(0.3..2.5)]
    } else {
        [1.0; 3]
    };
    let mut a = random_mask(dims, r.random_range(0.05..0.6), r);
    let mut b = random_mask(dims, r.random_range(0.05..0.6), r);
    a[0] = true;
    let last = b.len() - 1;
    b[last] = true;
    MaskPair { dims, spacing, a, b }
}
