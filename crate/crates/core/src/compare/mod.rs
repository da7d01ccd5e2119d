//! Comparing representations of the same points.
//!
//! ```text
//! χ_k^{a,b}  = (1/N) Σ_i |N_k^a(i) ∩ N_k^b(i)| / k
//! χ_k^{a,gt} = (1/N) Σ_i #{j ∈ N_k^a(i) : y_j = y_i} / k
//! CKA(K_a, K_b) = tr(K̃_a K̃_b) / √(tr(K̃_a K̃_a) tr(K̃_b K̃_b))
//! ```
//!
//! `K̃` is a centered kernel. For the linear kernel on centered features,
//! `tr(K_a K_b) = ‖X_aᵀ X_b‖²_F`, which is what gets computed when the
//! feature dimensions are small next to `N`. The Gaussian kernel
//! `exp(−‖x − y‖² / (2σ²))` uses `σ = factor × mean first-neighbor
//! distance` and is double-centered.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{out_of_range, Error, Result};
use crate::neighbors::{build_knn, squared_euclidean, NeighborGraph};

/// Default neighborhood size for ground-truth overlap.
pub const DEFAULT_GT_K: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapResult {
    pub chi: f64,
    pub per_point: Vec<f64>,
    pub k: usize,
}

fn from_counts(counts: Vec<usize>, k: usize) -> OverlapResult {
    let per_point: Vec<f64> = counts.into_iter().map(|c| c as f64 / k as f64).collect();
    let chi = per_point.iter().sum::<f64>() / per_point.len() as f64;
    OverlapResult { chi, per_point, k }
}

/// Mean fraction of shared `k`-neighbors between two graphs on the same
/// points.
pub fn overlap(a: &NeighborGraph, b: &NeighborGraph, k: usize) -> Result<OverlapResult> {
    if a.n() != b.n() {
        return Err(Error::LengthMismatch {
            what: "graph sizes",
            left: a.n(),
            right: b.n(),
        });
    }
    if k == 0 || k > a.k_max() || k > b.k_max() {
        return Err(out_of_range(format!("k must be in [1, {}], got {k}", a.k_max().min(b.k_max()))));
    }
    let counts = (0..a.n())
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(k), Vec::with_capacity(k)),
            |(x, y), i| {
                x.clear();
                y.clear();
                x.extend_from_slice(&a.neighbors(i)[..k]);
                y.extend_from_slice(&b.neighbors(i)[..k]);
                x.sort_unstable();
                y.sort_unstable();
                let (mut p, mut q, mut c) = (0, 0, 0);
                while p < k && q < k {
                    match x[p].cmp(&y[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            c += 1;
                            p += 1;
                            q += 1;
                        }
                    }
                }
                c
            },
        )
        .collect();
    Ok(from_counts(counts, k))
}

/// Mean fraction of `k`-neighbors sharing the point's class.
pub fn overlap_gt(graph: &NeighborGraph, labels: Option<&[i32]>, k: usize) -> Result<OverlapResult> {
    let labels = labels.ok_or_else(|| Error::MissingLabels("ground-truth overlap needs class labels".into()))?;
    if labels.len() != graph.n() {
        return Err(Error::LengthMismatch {
            what: "labels vs graph points",
            left: labels.len(),
            right: graph.n(),
        });
    }
    if k == 0 || k > graph.k_max() {
        return Err(out_of_range(format!("k must be in [1, {}], got {k}", graph.k_max())));
    }
    let counts = (0..graph.n())
        .into_par_iter()
        .map(|i| graph.neighbors(i)[..k].iter().filter(|&&j| labels[j as usize] == labels[i]).count())
        .collect();
    Ok(from_counts(counts, k))
}

fn pairs(c: u64) -> f64 {
    (c as f64) * (c.saturating_sub(1) as f64) / 2.0
}

/// Adjusted Rand index of two partitions of the same points.
///
/// When both partitions are trivial in the same way (one block each, or
/// all singletons) the index is undefined; 1 is returned.
pub fn ari<A: Hash + Eq, B: Hash + Eq>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "partition lengths",
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len() as u64;
    let mut table: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sa: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sb: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = if n < 2 { 0.0 } else { sa * sb / pairs(n) };
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum CkaKernel {
    Linear,
    Gaussian { sigma_factor: f64 },
}

impl CkaKernel {
    pub fn gaussian() -> Self {
        CkaKernel::Gaussian { sigma_factor: 0.2 }
    }
}

fn centered(data: &Dataset) -> DMatrix<f64> {
    let mut m = DMatrix::from_row_slice(data.n(), data.dim(), data.points());
    for mut col in m.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    m
}

/// Centered kernel alignment between two representations of the same points.
pub fn cka(a: &Dataset, b: &Dataset, kernel: CkaKernel) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::LengthMismatch {
            what: "representation sizes",
            left: a.n(),
            right: b.n(),
        });
    }
    let (ab, aa, bb) = match kernel {
        CkaKernel::Linear => {
            let (xa, xb) = (centered(a), centered(b));
            let n = a.n();
            let (da, db) = (a.dim(), b.dim());
            if n * (da + db) < da * db + da * da + db * db {
                let (ka, kb) = (&xa * xa.transpose(), &xb * xb.transpose());
                (ka.dot(&kb), ka.dot(&ka), kb.dot(&kb))
            } else {
                let (cab, caa, cbb) = (xa.transpose() * &xb, xa.transpose() * &xa, xb.transpose() * &xb);
                (cab.norm_squared(), caa.norm_squared(), cbb.norm_squared())
            }
        }
        CkaKernel::Gaussian { sigma_factor } => {
            if !(sigma_factor > 0.0) {
                return Err(out_of_range(format!("sigma factor must be positive, got {sigma_factor}")));
            }
            let ka = gaussian_kernel(a, sigma_factor)?;
            let kb = gaussian_kernel(b, sigma_factor)?;
            (ka.dot(&kb), ka.dot(&ka), kb.dot(&kb))
        }
    };
    let denom = (aa * bb).sqrt();
    if !(denom > 0.0) {
        return Err(Error::Degenerate("kernel with zero norm".into()));
    }
    Ok(ab / denom)
}

/// `σ = factor × mean distance to the first neighbor`.
pub fn gaussian_bandwidth(data: &Dataset, sigma_factor: f64) -> Result<f64> {
    let g = build_knn(data, 1)?;
    let mean = (0..g.n()).map(|i| g.distance(i, 1)).sum::<f64>() / g.n() as f64;
    Ok(sigma_factor * mean)
}

fn gaussian_kernel(data: &Dataset, sigma_factor: f64) -> Result<DMatrix<f64>> {
    let sigma = gaussian_bandwidth(data, sigma_factor)?;
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("zero mean first-neighbor distance".into()));
    }
    let n = data.n();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut buf = vec![0.0; n * n];
    buf.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        for (i, v) in col.iter_mut().enumerate() {
            *v = (-squared_euclidean(data.row(i), data.row(j)) * inv).exp();
        }
    });
    Ok(crate::peaks::double_center(&DMatrix::from_vec(n, n, buf)))
}

/// Shannon entropy in bits of per-channel histograms, averaged over channels.
pub fn discrete_entropy(histograms: &[Vec<u64>]) -> Result<f64> {
    if histograms.is_empty() {
        return Err(Error::InvalidData("empty histogram".into()));
    }
    let mut total = 0.0;
    for (c, h) in histograms.iter().enumerate() {
        let n: u64 = h.iter().sum();
        if n == 0 {
            return Err(Error::InvalidData(format!("channel {c} has no counts")));
        }
        let n = n as f64;
        total -= h.iter().filter(|&&v| v > 0).map(|&v| {
            let p = v as f64 / n;
            p * p.log2()
        }).sum::<f64>();
    }
    Ok(total / histograms.len() as f64)
}

/// Histograms of integer values, one per channel, from an `N × channels`
/// row-major array.
pub fn channel_histograms(values: &[i64], n_channels: usize) -> Result<Vec<Vec<u64>>> {
    if n_channels == 0 || !values.len().is_multiple_of(n_channels) {
        return Err(out_of_range("values must fill whole rows of n_channels"));
    }
    let mut out = Vec::with_capacity(n_channels);
    for c in 0..n_channels {
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        for v in values.iter().skip(c).step_by(n_channels) {
            *counts.entry(*v).or_default() += 1;
        }
        out.push(counts.into_values().collect());
    }
    Ok(out)
}

/// Metrics for one pair of named representations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub overlap: f64,
    pub k: usize,
    pub cka_linear: Option<f64>,
    pub cka_gaussian: Option<f64>,
}

/// JSON-ready metrics keyed by `"a:b"`.
pub type CompareReport = BTreeMap<String, PairReport>;

/// Overlap (and optionally CKA) for every pair of layers.
pub fn compare_layers(layers: &[(String, Dataset)], k: usize, with_cka: bool) -> Result<CompareReport> {
    let graphs = layers
        .iter()
        .map(|(_, d)| build_knn(d, k))
        .collect::<Result<Vec<_>>>()?;
    let mut report = CompareReport::new();
    for a in 0..layers.len() {
        for b in a + 1..layers.len() {
            let (cl, cg) = if with_cka {
                (
                    Some(cka(&layers[a].1, &layers[b].1, CkaKernel::Linear)?),
                    Some(cka(&layers[a].1, &layers[b].1, CkaKernel::gaussian())?),
                )
            } else {
                (None, None)
            };
            report.insert(
                format!("{}:{}", layers[a].0, layers[b].0),
                PairReport {
                    overlap: overlap(&graphs[a], &graphs[b], k)?.chi,
                    k,
                    cka_linear: cl,
                    cka_gaussian: cg,
                },
            );
        }
    }
    Ok(report)
}
