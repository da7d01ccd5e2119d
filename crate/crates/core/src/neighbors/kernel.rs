//! Blocked brute-force distance kernel.
//!
//! Every pair distance is accumulated left to right over the coordinates
//! (`s += (x_d - y_d)^2`, d = 0, 1, ...), exactly as [`squared_euclidean`]
//! does. Blocking only changes *which* pairs are in flight at the same time:
//! a 4-row query tile against an 8-lane panel of packed reference rows, with
//! the coordinate axis cut into chunks of `KC` whose partial sums are
//! carried across chunks. The SIMD lanes run over different pairs, never
//! over coordinates of the same pair, so results are bit-identical to the
//! scalar loop on every target.

use rayon::prelude::*;

const LANES: usize = 8;
const QT: usize = 4;
const KC: usize = 256;
/// Query rows handled per task.
const MB: usize = 64;
/// Reference rows packed per block.
const NB: usize = 512;

/// Squared Euclidean distance, accumulated sequentially over coordinates.
#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

#[inline(always)]
fn micro(q: &[&[f64]; QT], panel: &[f64], kc: usize, acc: &mut [[f64; LANES]; QT]) {
    debug_assert!(panel.len() >= kc * LANES);
    debug_assert!(q.iter().all(|r| r.len() >= kc));
    for dd in 0..kc {
        // SAFETY: bounds asserted above.
        let p: &[f64; LANES] = unsafe { &*(panel.as_ptr().add(dd * LANES) as *const [f64; LANES]) };
        for t in 0..QT {
            let x = unsafe { *q[t].get_unchecked(dd) };
            let a = &mut acc[t];
            for l in 0..LANES {
                let diff = x - p[l];
                a[l] += diff * diff;
            }
        }
    }
}

/// Squared distances between `queries` and `refs` (row ids into `data`),
/// written row-major into `out` (`queries.len() × refs.len()`).
#[inline(always)]
fn block_impl(data: &[f64], dim: usize, queries: &[usize], refs: &[usize], out: &mut [f64], panel: &mut Vec<f64>) {
    let nq = queries.len();
    let nr = refs.len();
    debug_assert_eq!(out.len(), nq * nr);
    out.fill(0.0);
    if nq == 0 || nr == 0 {
        return;
    }
    let npanels = nr.div_ceil(LANES);
    panel.resize(npanels * KC * LANES, 0.0);
    let mut d0 = 0;
    while d0 < dim {
        let kc = KC.min(dim - d0);
        for p in 0..npanels {
            let base = p * KC * LANES;
            for l in 0..LANES {
                let r = p * LANES + l;
                if r < nr {
                    let row = &data[refs[r] * dim + d0..refs[r] * dim + d0 + kc];
                    for (dd, &v) in row.iter().enumerate() {
                        panel[base + dd * LANES + l] = v;
                    }
                } else {
                    for dd in 0..kc {
                        panel[base + dd * LANES + l] = 0.0;
                    }
                }
            }
        }
        let mut q0 = 0;
        while q0 < nq {
            let tile = QT.min(nq - q0);
            let rows: [&[f64]; QT] = std::array::from_fn(|t| {
                let qi = queries[q0 + t.min(tile - 1)];
                &data[qi * dim + d0..qi * dim + d0 + kc]
            });
            for p in 0..npanels {
                let lanes = LANES.min(nr - p * LANES);
                let mut acc = [[0.0; LANES]; QT];
                for t in 0..tile {
                    let o = (q0 + t) * nr + p * LANES;
                    acc[t][..lanes].copy_from_slice(&out[o..o + lanes]);
                }
                micro(&rows, &panel[p * KC * LANES..], kc, &mut acc);
                for t in 0..tile {
                    let o = (q0 + t) * nr + p * LANES;
                    out[o..o + lanes].copy_from_slice(&acc[t][..lanes]);
                }
            }
            q0 += QT;
        }
        d0 += kc;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn block_avx512(data: &[f64], dim: usize, q: &[usize], r: &[usize], out: &mut [f64], panel: &mut Vec<f64>) {
    block_impl(data, dim, q, r, out, panel)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn block_avx2(data: &[f64], dim: usize, q: &[usize], r: &[usize], out: &mut [f64], panel: &mut Vec<f64>) {
    block_impl(data, dim, q, r, out, panel)
}

pub(crate) fn block_sq_distances(
    data: &[f64],
    dim: usize,
    queries: &[usize],
    refs: &[usize],
    out: &mut [f64],
    panel: &mut Vec<f64>,
) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: feature checked at runtime.
            return unsafe { block_avx512(data, dim, queries, refs, out, panel) };
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            return unsafe { block_avx2(data, dim, queries, refs, out, panel) };
        }
    }
    block_impl(data, dim, queries, refs, out, panel)
}

/// Exact k nearest neighbors of every member among the members.
///
/// `members` are row ids into `data`; returned neighbor ids are positions in
/// `members`. Rows are sorted by `(distance, position)`, self excluded.
pub(crate) fn knn_among(data: &[f64], dim: usize, members: &[usize], k: usize) -> (Vec<u32>, Vec<f64>) {
    let m = members.len();
    let mut indices = vec![0u32; m * k];
    let mut distances = vec![0.0f64; m * k];
    if k == 0 {
        return (indices, distances);
    }
    indices
        .par_chunks_mut(MB * k)
        .zip(distances.par_chunks_mut(MB * k))
        .enumerate()
        .for_each_init(
            || (Vec::new(), Vec::new(), Vec::new(), Vec::<u128>::new()),
            |(rowbuf, tmp, panel, keys), (blk, (idx_out, dist_out))| {
                let q_start = blk * MB;
                let nq = idx_out.len() / k;
                let queries = &members[q_start..q_start + nq];
                rowbuf.resize(nq * m, 0.0);
                let mut r0 = 0;
                while r0 < m {
                    let nr = NB.min(m - r0);
                    tmp.resize(nq * nr, 0.0);
                    block_sq_distances(data, dim, queries, &members[r0..r0 + nr], tmp, panel);
                    for q in 0..nq {
                        rowbuf[q * m + r0..q * m + r0 + nr].copy_from_slice(&tmp[q * nr..(q + 1) * nr]);
                    }
                    r0 += nr;
                }
                for q in 0..nq {
                    let self_pos = q_start + q;
                    let row = &rowbuf[q * m..(q + 1) * m];
                    keys.clear();
                    keys.extend(row.iter().enumerate().filter(|&(j, _)| j != self_pos).map(|(j, &s)| {
                        ((s.sqrt().to_bits() as u128) << 32) | j as u128
                    }));
                    keys.select_nth_unstable(k - 1);
                    keys[..k].sort_unstable();
                    for (r, key) in keys[..k].iter().enumerate() {
                        idx_out[q * k + r] = (*key & 0xffff_ffff) as u32;
                        dist_out[q * k + r] = f64::from_bits((*key >> 32) as u64);
                    }
                }
            },
        );
    (indices, distances)
}
