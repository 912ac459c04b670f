//! Hand-blocked kernels for shapes where one GEMM dimension is a small
//! channel count and packing-based GEMM underperforms.

use std::any::TypeId;

use super::Scalar;

const LANES: usize = 8;
const TILE_A: usize = 3;
const TILE_B: usize = 4;

/// `c[i, j] += Σ_p a[i, p] · b[j, p]` for `i < m`, `j < n`, `p < len`.
///
/// Rows of `a` start every `lda` elements and rows of `b` every `ldb`;
/// `c` is addressed with strides `(rsc, csc)`. Each dot product keeps eight
/// lane-wise fused multiply-add sums that are combined in a fixed order, so
/// the vector and portable paths produce identical bits.
#[allow(clippy::too_many_arguments)]
pub(crate) fn dot_rows<T: Scalar>(
    m: usize,
    n: usize,
    len: usize,
    a: &[T],
    lda: usize,
    b: &[T],
    ldb: usize,
    c: &mut [T],
    sc: (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(a.len() >= (m - 1) * lda + len);
    assert!(b.len() >= (n - 1) * ldb + len);
    assert!(c.len() > (m - 1) * sc.0 + (n - 1) * sc.1);
    #[cfg(target_arch = "x86_64")]
    {
        if TypeId::of::<T>() == TypeId::of::<f32>()
            && std::is_x86_feature_detected!("avx2")
            && std::is_x86_feature_detected!("fma")
        {
            // SAFETY: T is f32, so the casts are identity reinterpretations;
            // the features were detected at runtime and the extents checked above.
            unsafe {
                let a = std::slice::from_raw_parts(a.as_ptr().cast::<f32>(), a.len());
                let b = std::slice::from_raw_parts(b.as_ptr().cast::<f32>(), b.len());
                let c = std::slice::from_raw_parts_mut(c.as_mut_ptr().cast::<f32>(), c.len());
                avx::dot_rows(m, n, len, a, lda, b, ldb, c, sc);
            }
            return;
        }
    }
    dot_rows_portable(m, n, len, a, lda, b, ldb, c, sc);
}

#[inline]
fn reduce<T: Scalar>(acc: &[T; LANES]) -> T {
    let pair = [acc[0] + acc[4], acc[1] + acc[5], acc[2] + acc[6], acc[3] + acc[7]];
    (pair[0] + pair[2]) + (pair[1] + pair[3])
}

#[allow(clippy::too_many_arguments)]
fn dot_rows_portable<T: Scalar>(
    m: usize,
    n: usize,
    len: usize,
    a: &[T],
    lda: usize,
    b: &[T],
    ldb: usize,
    c: &mut [T],
    (rsc, csc): (usize, usize),
) {
    let full = len / LANES * LANES;
    for i in 0..m {
        let ar = &a[i * lda..][..len];
        for j in 0..n {
            let br = &b[j * ldb..][..len];
            let mut acc = [T::zero(); LANES];
            for p in (0..full).step_by(LANES) {
                for l in 0..LANES {
                    acc[l] = ar[p + l].mul_add(br[p + l], acc[l]);
                }
            }
            let mut tail = T::zero();
            for q in full..len {
                tail = ar[q].mul_add(br[q], tail);
            }
            let dst = &mut c[i * rsc + j * csc];
            *dst = *dst + (reduce(&acc) + tail);
        }
    }
}

/// `c[i, q] += Σ_k a[i, k] · b[k, q]` for `i < m`, `q < n`, `k < depth`.
///
/// `a` is addressed with strides `(ars, acs)`, rows of `b` start every `ldb`
/// elements and rows of `c` every `ldc`; columns of `b` and `c` are
/// contiguous. Every output element sums over `k` in increasing order with
/// fused multiply-add, on every code path.
#[allow(clippy::too_many_arguments)]
pub(crate) fn axpy_rows<T: Scalar>(
    m: usize,
    n: usize,
    depth: usize,
    a: &[T],
    (ars, acs): (usize, usize),
    b: &[T],
    ldb: usize,
    c: &mut [T],
    ldc: usize,
) {
    if m == 0 || n == 0 || depth == 0 {
        return;
    }
    assert!(a.len() > (m - 1) * ars + (depth - 1) * acs);
    assert!(b.len() >= (depth - 1) * ldb + n);
    assert!(c.len() >= (m - 1) * ldc + n);
    #[cfg(target_arch = "x86_64")]
    {
        if TypeId::of::<T>() == TypeId::of::<f32>()
            && std::is_x86_feature_detected!("avx2")
            && std::is_x86_feature_detected!("fma")
        {
            // SAFETY: as in `dot_rows`.
            unsafe {
                let a = std::slice::from_raw_parts(a.as_ptr().cast::<f32>(), a.len());
                let b = std::slice::from_raw_parts(b.as_ptr().cast::<f32>(), b.len());
                let c = std::slice::from_raw_parts_mut(c.as_mut_ptr().cast::<f32>(), c.len());
                avx::axpy_rows(m, n, depth, a, (ars, acs), b, ldb, c, ldc);
            }
            return;
        }
    }
    axpy_rows_portable(m, n, depth, a, (ars, acs), b, ldb, c, ldc);
}

#[allow(clippy::too_many_arguments)]
fn axpy_rows_portable<T: Scalar>(
    m: usize,
    n: usize,
    depth: usize,
    a: &[T],
    (ars, acs): (usize, usize),
    b: &[T],
    ldb: usize,
    c: &mut [T],
    ldc: usize,
) {
    for i in 0..m {
        let row = &mut c[i * ldc..][..n];
        for k in 0..depth {
            let w = a[i * ars + k * acs];
            let br = &b[k * ldb..][..n];
            for (out, &x) in row.iter_mut().zip(br) {
                *out = w.mul_add(x, *out);
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx {
    use std::arch::x86_64::*;

    use super::{reduce, LANES, TILE_A, TILE_B};

    #[allow(clippy::too_many_arguments)]
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn dot_rows(
        m: usize,
        n: usize,
        len: usize,
        a: &[f32],
        lda: usize,
        b: &[f32],
        ldb: usize,
        c: &mut [f32],
        sc: (usize, usize),
    ) {
        let mut i = 0;
        while i < m {
            let ra = (m - i).min(TILE_A);
            let mut j = 0;
            while j < n {
                let rb = (n - j).min(TILE_B);
                if ra == TILE_A && rb == TILE_B {
                    tile::<TILE_A, TILE_B>(i, j, len, a, lda, b, ldb, c, sc);
                } else {
                    for r in 0..ra {
                        for s in 0..rb {
                            tile::<1, 1>(i + r, j + s, len, a, lda, b, ldb, c, sc);
                        }
                    }
                }
                j += rb;
            }
            i += ra;
        }
    }

    const AXPY_ROWS: usize = 3;
    const AXPY_VECS: usize = 4;

    #[allow(clippy::too_many_arguments)]
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn axpy_rows(
        m: usize,
        n: usize,
        depth: usize,
        a: &[f32],
        (ars, acs): (usize, usize),
        b: &[f32],
        ldb: usize,
        c: &mut [f32],
        ldc: usize,
    ) {
        let ap = a.as_ptr();
        let bp = b.as_ptr();
        let cp = c.as_mut_ptr();
        let mut i = 0;
        while i < m {
            let rows = (m - i).min(AXPY_ROWS);
            let mut q = 0;
            while q + AXPY_VECS * LANES <= n {
                match rows {
                    3 => axpy_block::<3, AXPY_VECS>(i, q, depth, ap, ars, acs, bp, ldb, cp, ldc),
                    2 => axpy_block::<2, AXPY_VECS>(i, q, depth, ap, ars, acs, bp, ldb, cp, ldc),
                    _ => axpy_block::<1, AXPY_VECS>(i, q, depth, ap, ars, acs, bp, ldb, cp, ldc),
                }
                q += AXPY_VECS * LANES;
            }
            while q + LANES <= n {
                match rows {
                    3 => axpy_block::<3, 1>(i, q, depth, ap, ars, acs, bp, ldb, cp, ldc),
                    2 => axpy_block::<2, 1>(i, q, depth, ap, ars, acs, bp, ldb, cp, ldc),
                    _ => axpy_block::<1, 1>(i, q, depth, ap, ars, acs, bp, ldb, cp, ldc),
                }
                q += LANES;
            }
            for r in i..i + rows {
                for col in q..n {
                    let mut acc = *cp.add(r * ldc + col);
                    for k in 0..depth {
                        acc = (*ap.add(r * ars + k * acs)).mul_add(*bp.add(k * ldb + col), acc);
                    }
                    *cp.add(r * ldc + col) = acc;
                }
            }
            i += rows;
        }
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    #[target_feature(enable = "avx2,fma")]
    unsafe fn axpy_block<const R: usize, const V: usize>(
        i: usize,
        q: usize,
        depth: usize,
        ap: *const f32,
        ars: usize,
        acs: usize,
        bp: *const f32,
        ldb: usize,
        cp: *mut f32,
        ldc: usize,
    ) {
        let mut acc: [[__m256; V]; R] =
            std::array::from_fn(|r| std::array::from_fn(|v| _mm256_loadu_ps(cp.add((i + r) * ldc + q + v * LANES))));
        for k in 0..depth {
            let bv: [__m256; V] = std::array::from_fn(|v| _mm256_loadu_ps(bp.add(k * ldb + q + v * LANES)));
            for r in 0..R {
                let w = _mm256_set1_ps(*ap.add((i + r) * ars + k * acs));
                for v in 0..V {
                    acc[r][v] = _mm256_fmadd_ps(w, bv[v], acc[r][v]);
                }
            }
        }
        for r in 0..R {
            for v in 0..V {
                _mm256_storeu_ps(cp.add((i + r) * ldc + q + v * LANES), acc[r][v]);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    #[target_feature(enable = "avx2,fma")]
    unsafe fn tile<const RA: usize, const RB: usize>(
        i: usize,
        j: usize,
        len: usize,
        a: &[f32],
        lda: usize,
        b: &[f32],
        ldb: usize,
        c: &mut [f32],
        (rsc, csc): (usize, usize),
    ) {
        let full = len / LANES * LANES;
        let ap: [*const f32; RA] = std::array::from_fn(|r| a.as_ptr().add((i + r) * lda));
        let bp: [*const f32; RB] = std::array::from_fn(|s| b.as_ptr().add((j + s) * ldb));
        let mut acc = [[_mm256_setzero_ps(); RB]; RA];
        let mut p = 0;
        while p < full {
            let bv: [__m256; RB] = std::array::from_fn(|s| _mm256_loadu_ps(bp[s].add(p)));
            for r in 0..RA {
                let av = _mm256_loadu_ps(ap[r].add(p));
                for s in 0..RB {
                    acc[r][s] = _mm256_fmadd_ps(av, bv[s], acc[r][s]);
                }
            }
            p += LANES;
        }
        for r in 0..RA {
            for s in 0..RB {
                let mut lanes = [0f32; LANES];
                _mm256_storeu_ps(lanes.as_mut_ptr(), acc[r][s]);
                let mut tail = 0f32;
                for q in full..len {
                    tail = (*ap[r].add(q)).mul_add(*bp[s].add(q), tail);
                }
                let dst = &mut c[(i + r) * rsc + (j + s) * csc];
                *dst += reduce(&lanes) + tail;
            }
        }
    }
}
