//! Exact point-to-set distances on a voxel grid.
//!
//! The squared distance between voxels is always evaluated as
//! `((Δx·sx)² + (Δy·sy)²) + (Δz·sz)²` in `f64`. The transform takes the
//! minimum of that expression one axis at a time; because rounded addition is
//! monotone, the axis-wise minima compose to the exact minimum over all
//! points, so results match a brute-force scan bit for bit.

/// Squared distance from every grid voxel to the nearest voxel of `set`
/// (`f64::INFINITY` everywhere when `set` is empty).
pub(crate) fn squared_distance_map(dims: [usize; 3], spacing: [f64; 3], set: &[[usize; 3]]) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    let n = nx * ny * nz;
    let mut g = vec![f64::INFINITY; n];
    let mut on = vec![false; n];
    for p in set {
        on[p[0] + nx * (p[1] + ny * p[2])] = true;
    }
    let mut line = Vec::new();
    let mut out = Vec::new();
    for row in 0..ny * nz {
        let base = row * nx;
        line.clear();
        line.extend((0..nx).map(|x| if on[base + x] { 0.0 } else { f64::INFINITY }));
        pass(&line, spacing[0], &mut out);
        g[base..base + nx].copy_from_slice(&out);
    }
    for (axis, len, stride) in [(1, ny, nx), (2, nz, nx * ny)] {
        let outer = n / len;
        for o in 0..outer {
            let start = if axis == 1 { (o / nx) * nx * ny + o % nx } else { o };
            line.clear();
            line.extend((0..len).map(|i| g[start + i * stride]));
            pass(&line, spacing[axis], &mut out);
            for (i, &v) in out.iter().enumerate() {
                g[start + i * stride] = v;
            }
        }
    }
    g
}

/// `out[i] = min_j f[j] + ((i − j)·s)²` for `f ≥ 0`. Candidates are visited
/// in order of increasing offset and the scan stops once the offset term
/// alone cannot beat the best value.
fn pass(f: &[f64], s: f64, out: &mut Vec<f64>) {
    out.clear();
    let n = f.len() as isize;
    for i in 0..n {
        let mut best = f[i as usize];
        for k in 1..n {
            let d = k as f64 * s;
            let d2 = d * d;
            if d2 >= best {
                break;
            }
            for j in [i - k, i + k] {
                if (0..n).contains(&j) {
                    let v = f[j as usize] + d2;
                    if v < best {
                        best = v;
                    }
                }
            }
        }
        out.push(best);
    }
}

/// Euclidean distance from each point of `from` to the set `to`.
pub(crate) fn directed(dims: [usize; 3], spacing: [f64; 3], from: &[[usize; 3]], to: &[[usize; 3]]) -> Vec<f64> {
    let map = squared_distance_map(dims, spacing, to);
    from.iter()
        .map(|p| map[p[0] + dims[0] * (p[1] + dims[1] * p[2])].sqrt())
        .collect()
}
