//! Density-peak clustering with statistical validation.
//!
//! Points are totally ordered by `(log ρ, −index)`: equal densities are
//! resolved in favor of the lower index. A point is a maximum when
//!
//! ```text
//! (I)  it is above every j ∈ N_k(i)
//! (II) no point above it has it in its own N_k
//! ```
//!
//! Maxima are labeled by descending density; every other point takes the
//! label of its nearest higher point in its neighbor list. When the list
//! holds no higher point, condition (II) failed, and the closest of the
//! higher points that list `i` among their `k` neighbors is used.
//!
//! A point `i ∈ c^α` borders `c^β` if some `j ∈ N_k(i) ∩ c^β` has `i` as its
//! closest `α` point (the first `α` entry of `j`'s list, or no `α` entry
//! at all). The saddle `ρ^{αβ}` is the densest border point on either side.
//! Peak `α` is merged into the peak across its highest saddle while
//!
//! ```text
//! log ρ^α − log ρ^{αβ} < 2 Z √(e_α² + e_{αβ}²)
//! ```
//!
//! Peaks are examined from the lowest up; after each merge the borders of
//! the union are recomputed, until no peak fails the test. A peak without
//! any border (its kNN component is isolated) is tested against the least
//! dense point of the union instead, so that a large enough `Z` always
//! collapses everything into one cluster.

mod hierarchy;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

pub(crate) use hierarchy::double_center;
pub use hierarchy::{embed_peaks_2d, peak_similarity, wpgma, Dendrogram, Merge, PeakEmbedding};

use crate::density::DensityField;
use crate::error::{out_of_range, Error, Result};
use crate::export::{num, Table};
use crate::neighbors::NeighborGraph;

/// Preliminary assignment before any merging.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakAssignment {
    /// Peak label per point, `0..n_peaks`, peaks in descending density.
    pub labels: Vec<usize>,
    /// Point index of each peak's maximum.
    pub peak_index: Vec<usize>,
    /// The density was constant; a single peak at point 0 was used.
    pub constant_density: bool,
}

impl PeakAssignment {
    pub fn n_peaks(&self) -> usize {
        self.peak_index.len()
    }
}

/// Saddle densities between peaks; `-inf` where no border exists.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleMatrix {
    pub log_rho: Vec<Vec<f64>>,
    /// Point index of each saddle.
    pub point: Vec<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakClustering {
    pub labels: Vec<usize>,
    pub peak_index: Vec<usize>,
    pub peak_log_rho: Vec<f64>,
    pub peak_err: Vec<f64>,
    #[serde(skip)]
    pub saddles: SaddleMatrix,
    /// Points below the highest saddle of their own peak.
    pub halo: Vec<bool>,
    pub z: f64,
    pub constant_density: bool,
}

impl PeakClustering {
    pub fn n_peaks(&self) -> usize {
        self.peak_index.len()
    }

    pub fn saddle_log_rho(&self) -> &[Vec<f64>] {
        &self.saddles.log_rho
    }

    /// Columns `index, label, log_rho, is_halo`.
    pub fn table(&self, density: &DensityField) -> Table {
        let mut t = Table::new(&["index", "label", "log_rho", "is_halo"]);
        for i in 0..self.labels.len() {
            t.push(vec![
                i.to_string(),
                self.labels[i].to_string(),
                num(density.log_rho[i]),
                u8::from(self.halo[i]).to_string(),
            ]);
        }
        t
    }

    /// Square saddle matrix with header `peak,0,1,...`.
    pub fn saddle_table(&self) -> Table {
        let m = self.n_peaks();
        let mut header = vec!["peak".to_string()];
        header.extend((0..m).map(|b| b.to_string()));
        let mut t = Table {
            header,
            rows: Vec::new(),
        };
        for a in 0..m {
            let mut row = vec![a.to_string()];
            row.extend(self.saddles.log_rho[a].iter().map(|&v| num(v)));
            t.push(row);
        }
        t
    }
}

/// Descending total order: denser first, then lower index.
#[inline]
fn desc(rho: &[f64], a: usize, b: usize) -> Ordering {
    rho[b].total_cmp(&rho[a]).then(a.cmp(&b))
}

#[inline]
fn above(rho: &[f64], i: usize, j: usize) -> bool {
    match rho[i].total_cmp(&rho[j]) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => i < j,
    }
}

fn check_inputs(graph: &NeighborGraph, density: &DensityField, k: usize) -> Result<()> {
    if density.len() != graph.n() {
        return Err(Error::LengthMismatch {
            what: "density vs graph points",
            left: density.len(),
            right: graph.n(),
        });
    }
    if k == 0 || k > graph.k_max() {
        return Err(out_of_range(format!("k must be in [1, {}], got {k}", graph.k_max())));
    }
    if let Some(i) = density.log_rho.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite log density at point {i}")));
    }
    Ok(())
}

/// Maxima and the preliminary assignment.
pub fn find_peaks(graph: &NeighborGraph, density: &DensityField, k: usize) -> Result<PeakAssignment> {
    check_inputs(graph, density, k)?;
    let n = graph.n();
    let rho = &density.log_rho;
    if rho.iter().all(|&v| v == rho[0]) {
        return Ok(PeakAssignment {
            labels: vec![0; n],
            peak_index: vec![0],
            constant_density: true,
        });
    }
    let mut is_max: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| graph.neighbors(i)[..k].iter().all(|&j| above(rho, i, j as usize)))
        .collect();
    for j in 0..n {
        for &i in &graph.neighbors(j)[..k] {
            if above(rho, j, i as usize) {
                is_max[i as usize] = false;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| desc(rho, a, b));

    // closest higher point listing i among its k neighbors
    let mut reverse: Vec<Option<(f64, usize)>> = vec![None; n];
    for j in 0..n {
        for (r, &i) in graph.neighbors(j)[..k].iter().enumerate() {
            let i = i as usize;
            if above(rho, j, i) {
                let cand = (graph.distances(j)[r], j);
                let better = match reverse[i] {
                    None => true,
                    Some(best) => cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1),
                };
                if better {
                    reverse[i] = Some(cand);
                }
            }
        }
    }

    let mut labels = vec![usize::MAX; n];
    let mut peak_index = Vec::new();
    for &i in &order {
        if is_max[i] {
            labels[i] = peak_index.len();
            peak_index.push(i);
            continue;
        }
        let parent = graph
            .neighbors(i)
            .iter()
            .map(|&j| j as usize)
            .find(|&j| above(rho, j, i))
            .or(reverse[i].map(|(_, j)| j))
            .expect("a non-maximum has a higher point in or around its neighborhood");
        labels[i] = labels[parent];
    }
    Ok(PeakAssignment {
        labels,
        peak_index,
        constant_density: false,
    })
}

/// Border-based saddles for the partition `labels` with `m` peaks.
pub fn find_saddles(
    graph: &NeighborGraph,
    labels: &[usize],
    m: usize,
    density: &DensityField,
    k: usize,
) -> Result<SaddleMatrix> {
    check_inputs(graph, density, k)?;
    if labels.len() != graph.n() {
        return Err(Error::LengthMismatch {
            what: "labels vs graph points",
            left: labels.len(),
            right: graph.n(),
        });
    }
    if labels.iter().any(|&l| l >= m) {
        return Err(out_of_range(format!("labels must be below {m}")));
    }
    Ok(saddles_unchecked(graph, labels, m, density, k))
}

fn saddles_unchecked(graph: &NeighborGraph, labels: &[usize], m: usize, density: &DensityField, k: usize) -> SaddleMatrix {
    let rho = &density.log_rho;
    let borders: Vec<(usize, usize, usize)> = (0..graph.n())
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = labels[i];
            graph.neighbors(i)[..k].iter().filter_map(move |&j| {
                let j = j as usize;
                let b = labels[j];
                if b == a {
                    return None;
                }
                // first point of cluster a in j's list
                let first_a = graph.neighbors(j).iter().map(|&x| x as usize).find(|&x| labels[x] == a);
                match first_a {
                    Some(x) if x != i => None,
                    _ => Some((a, b, i)),
                }
            })
        })
        .collect();
    let mut log_rho = vec![vec![f64::NEG_INFINITY; m]; m];
    let mut point: Vec<Vec<Option<usize>>> = vec![vec![None; m]; m];
    for (a, b, i) in borders {
        let better = match point[a][b] {
            None => true,
            Some(p) => above(rho, i, p),
        };
        if better {
            log_rho[a][b] = rho[i];
            log_rho[b][a] = rho[i];
            point[a][b] = Some(i);
            point[b][a] = Some(i);
        }
    }
    SaddleMatrix { log_rho, point }
}

/// Merges statistically indistinguishable peaks at significance `z`.
pub fn merge_peaks(
    graph: &NeighborGraph,
    density: &DensityField,
    assignment: &PeakAssignment,
    k: usize,
    z: f64,
) -> Result<PeakClustering> {
    check_inputs(graph, density, k)?;
    if !(z > 0.0) {
        return Err(out_of_range(format!("z must be positive, got {z}")));
    }
    let rho = &density.log_rho;
    let err = &density.err;
    let mut labels = assignment.labels.clone();
    let mut peaks = assignment.peak_index.clone();
    loop {
        let m = peaks.len();
        let saddles = saddles_unchecked(graph, &labels, m, density, k);
        if m == 1 {
            return Ok(finish(labels, peaks, saddles, density, z, assignment.constant_density));
        }
        let mut ascending: Vec<usize> = (0..m).collect();
        ascending.sort_unstable_by(|&a, &b| desc(rho, peaks[b], peaks[a]));

        let mut merge = None;
        for &a in &ascending {
            let pa = peaks[a];
            let across = (0..m)
                .filter(|&b| b != a)
                .filter_map(|b| saddles.point[a][b].map(|s| (b, s)))
                .fold(None, |best: Option<(usize, usize)>, (b, s)| match best {
                    Some((_, t)) if !above(rho, s, t) => best,
                    _ => Some((b, s)),
                });
            let (b, s) = match across {
                Some(found) => found,
                None => match isolated_partner(&labels, a, m, rho) {
                    Some(found) => found,
                    None => continue,
                },
            };
            if rho[pa] - rho[s] < 2.0 * z * (err[pa] * err[pa] + err[s] * err[s]).sqrt() {
                merge = Some((a, b));
                break;
            }
        }
        let Some((a, b)) = merge else {
            return Ok(finish(labels, peaks, saddles, density, z, assignment.constant_density));
        };
        // the union keeps the higher maximum and label b's slot, then
        // labels above a shift down
        let top = if above(rho, peaks[a], peaks[b]) { peaks[a] } else { peaks[b] };
        peaks[b] = top;
        peaks.remove(a);
        for l in labels.iter_mut() {
            if *l == a {
                *l = b;
            }
            if *l > a {
                *l -= 1;
            }
        }
    }
}

/// For a peak with no border at all: the partner whose union with `a` has
/// the highest minimum density, and the point realizing that minimum.
fn isolated_partner(labels: &[usize], a: usize, m: usize, rho: &[f64]) -> Option<(usize, usize)> {
    let mut low: Vec<Option<usize>> = vec![None; m];
    for (i, &l) in labels.iter().enumerate() {
        if low[l].is_none_or(|p| above(rho, p, i)) {
            low[l] = Some(i);
        }
    }
    let la = low[a]?;
    (0..m)
        .filter(|&b| b != a)
        .filter_map(|b| {
            let lb = low[b]?;
            Some((b, if above(rho, la, lb) { lb } else { la }))
        })
        .fold(None, |best: Option<(usize, usize)>, (b, s)| match best {
            Some((_, t)) if !above(rho, s, t) => best,
            _ => Some((b, s)),
        })
}

/// Relabels peaks by descending density and derives the halo.
fn finish(
    labels: Vec<usize>,
    peaks: Vec<usize>,
    saddles: SaddleMatrix,
    density: &DensityField,
    z: f64,
    constant_density: bool,
) -> PeakClustering {
    let rho = &density.log_rho;
    let m = peaks.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by(|&a, &b| desc(rho, peaks[a], peaks[b]));
    let mut rank = vec![0; m];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let labels: Vec<usize> = labels.iter().map(|&l| rank[l]).collect();
    let peak_index: Vec<usize> = order.iter().map(|&o| peaks[o]).collect();
    let saddles = SaddleMatrix {
        log_rho: order.iter().map(|&a| order.iter().map(|&b| saddles.log_rho[a][b]).collect()).collect(),
        point: order.iter().map(|&a| order.iter().map(|&b| saddles.point[a][b]).collect()).collect(),
    };
    let top_saddle: Vec<f64> = saddles
        .log_rho
        .iter()
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let halo = labels.iter().zip(rho).map(|(&l, &r)| r < top_saddle[l]).collect();
    PeakClustering {
        labels,
        peak_log_rho: peak_index.iter().map(|&p| rho[p]).collect(),
        peak_err: peak_index.iter().map(|&p| density.err[p]).collect(),
        peak_index,
        saddles,
        halo,
        z,
        constant_density,
    }
}

/// `find_peaks` followed by `merge_peaks`.
pub fn cluster(graph: &NeighborGraph, density: &DensityField, k: usize, z: f64) -> Result<PeakClustering> {
    let a = find_peaks(graph, density, k)?;
    merge_peaks(graph, density, &a, k, z)
}
