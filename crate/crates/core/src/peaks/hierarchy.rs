//! Relations between validated peaks.
//!
//! ```text
//! S_{αβ} = log ρ_max − log ρ^{αβ}        (+∞ without a saddle)
//! S_{αα} = log ρ_max − log ρ^α
//! ```
//!
//! WPGMA joins the pair with the highest saddle and sets the saddle of the
//! union `γ = α ∪ β` to any other node `δ` to
//!
//! ```text
//! log ρ^{γδ} = (log ρ^{αδ} + log ρ^{βδ}) / 2
//! ```
//!
//! When only one of the two has a saddle with `δ`, that value is kept.
//! Node ids follow the usual linkage layout: leaves `0..m`, the `s`-th
//! merge creates node `m + s`.
//!
//! The 2-D map takes `K = exp(−S/σ)` with `σ` the mean entry of `S`,
//! double-centers it and projects on the two leading eigenvectors scaled
//! by `√λ`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::PeakClustering;
use crate::error::{out_of_range, Result};
use crate::export::{num, Table};

/// Saddle-based dissimilarity between peaks.
pub fn peak_similarity(c: &PeakClustering) -> Result<Vec<Vec<f64>>> {
    let m = c.n_peaks();
    if m < 2 {
        return Err(out_of_range("similarity needs at least two peaks"));
    }
    let top = c.peak_log_rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((0..m)
        .map(|a| {
            (0..m)
                .map(|b| if a == b { top - c.peak_log_rho[a] } else { top - c.saddles.log_rho[a][b] })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    /// Saddle log density at which the two nodes join.
    pub height: f64,
    /// Number of peaks below the new node.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_heights: Vec<f64>,
    /// Some joins happened at `-inf` because no saddle linked the parts.
    pub disconnected: bool,
}

impl Dendrogram {
    /// Columns `node_a, node_b, log_rho_saddle`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["node_a", "node_b", "log_rho_saddle"]);
        for m in &self.merges {
            t.push(vec![m.a.to_string(), m.b.to_string(), num(m.height)]);
        }
        t
    }
}

/// Weighted pair-group hierarchy over the saddle matrix.
pub fn wpgma(c: &PeakClustering) -> Result<Dendrogram> {
    let m = c.n_peaks();
    if m < 2 {
        return Err(out_of_range("dendrogram needs at least two peaks"));
    }
    let total = 2 * m - 1;
    let mut h = vec![vec![f64::NEG_INFINITY; total]; total];
    for a in 0..m {
        for b in 0..m {
            if a != b {
                h[a][b] = c.saddles.log_rho[a][b];
            }
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..m).collect();
    let mut merges = Vec::with_capacity(m - 1);
    let mut disconnected = false;
    for step in 0..m - 1 {
        let mut best: Option<(usize, usize)> = None;
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                if best.is_none_or(|(p, q)| h[a][b] > h[p][q]) {
                    best = Some((a, b));
                }
            }
        }
        let (a, b) = best.expect("at least two active nodes");
        let height = h[a][b];
        disconnected |= height == f64::NEG_INFINITY;
        let g = m + step;
        size[g] = size[a] + size[b];
        active.retain(|&x| x != a && x != b);
        for &d in &active {
            let v = match (h[a][d].is_finite(), h[b][d].is_finite()) {
                (true, true) => 0.5 * (h[a][d] + h[b][d]),
                (true, false) => h[a][d],
                (false, true) => h[b][d],
                (false, false) => f64::NEG_INFINITY,
            };
            h[g][d] = v;
            h[d][g] = v;
        }
        active.push(g);
        merges.push(Merge {
            a,
            b,
            height,
            size: size[g],
        });
    }
    Ok(Dendrogram {
        merges,
        leaf_heights: c.peak_log_rho.clone(),
        disconnected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakEmbedding {
    pub coords: Vec<[f64; 2]>,
    pub sigma: f64,
    /// Infinite entries of `S` were replaced by the largest finite one + 1.
    pub replaced_infinite: bool,
    /// Fewer than two positive eigenvalues; missing axes are zero.
    pub rank_deficient: bool,
}

/// Principal-axes map of the peaks from their dissimilarity matrix.
pub fn embed_peaks_2d(s: &[Vec<f64>]) -> Result<PeakEmbedding> {
    let m = s.len();
    if m == 0 || s.iter().any(|r| r.len() != m) {
        return Err(out_of_range("similarity matrix must be square and non-empty"));
    }
    let finite_max = s.iter().flatten().cloned().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let fill = if finite_max.is_finite() { finite_max + 1.0 } else { 1.0 };
    let mut replaced_infinite = false;
    let sm = DMatrix::from_fn(m, m, |a, b| {
        let v = s[a][b];
        if v.is_finite() {
            v
        } else {
            replaced_infinite = true;
            fill
        }
    });
    let mean = sm.mean();
    let sigma = if mean > 0.0 { mean } else { 1.0 };
    let k = sm.map(|v| (-v / sigma).exp());
    let kc = double_center(&k);
    let eig = SymmetricEigen::new(kc);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = eig.eigenvalues.amax().max(1.0) * 1e-12;
    let mut coords = vec![[0.0; 2]; m];
    let mut rank_deficient = false;
    for (axis, &e) in idx.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[e];
        if lambda <= scale {
            rank_deficient = true;
            continue;
        }
        let v = eig.eigenvectors.column(e);
        let sign = v.iter().find(|x| x.abs() > 1e-12).map_or(1.0, |x| x.signum());
        for p in 0..m {
            coords[p][axis] = sign * v[p] * lambda.sqrt();
        }
    }
    rank_deficient |= m < 2;
    Ok(PeakEmbedding {
        coords,
        sigma,
        replaced_infinite,
        rank_deficient,
    })
}

pub(crate) fn double_center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let m = k.nrows();
    let row_mean: Vec<f64> = (0..m).map(|a| k.row(a).mean()).collect();
    let col_mean: Vec<f64> = (0..m).map(|b| k.column(b).mean()).collect();
    let all = k.mean();
    DMatrix::from_fn(m, m, |a, b| k[(a, b)] - row_mean[a] - col_mean[b] + all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peaks::SaddleMatrix;

    fn clustering(peaks: Vec<f64>, saddles: Vec<Vec<f64>>) -> PeakClustering {
        let m = peaks.len();
        PeakClustering {
            labels: (0..m).collect(),
            peak_index: (0..m).collect(),
            peak_err: vec![0.1; m],
            halo: vec![false; m],
            saddles: SaddleMatrix {
                point: vec![vec![None; m]; m],
                log_rho: saddles,
            },
            peak_log_rho: peaks,
            z: 1.6,
            constant_density: false,
        }
    }

    const NI: f64 = f64::NEG_INFINITY;

    #[test]
    fn similarity_values() {
        let c = clustering(vec![-1.0, -2.0], vec![vec![NI, -3.0], vec![-3.0, NI]]);
        let s = peak_similarity(&c).unwrap();
        assert_eq!(s, vec![vec![0.0, 2.0], vec![2.0, 1.0]]);
        let c = clustering(vec![-1.0, -2.0], vec![vec![NI, NI], vec![NI, NI]]);
        assert_eq!(peak_similarity(&c).unwrap()[0][1], f64::INFINITY);
    }

    #[test]
    fn two_peaks_single_merge() {
        let c = clustering(vec![0.0, -0.5], vec![vec![NI, -2.0], vec![-2.0, NI]]);
        let d = wpgma(&c).unwrap();
        assert_eq!(d.merges, vec![Merge { a: 0, b: 1, height: -2.0, size: 2 }]);
        assert!(!d.disconnected);
    }

    #[test]
    fn three_peak_chain_by_hand() {
        // 0–1 at −1, 1–2 at −3, 0–2 at −5:
        // join (0,1) at −1 → node 3; saddle(3,2) = (−5 + −3)/2 = −4
        let c = clustering(
            vec![0.0, 0.0, 0.0],
            vec![vec![NI, -1.0, -5.0], vec![-1.0, NI, -3.0], vec![-5.0, -3.0, NI]],
        );
        let d = wpgma(&c).unwrap();
        assert_eq!(d.merges[0], Merge { a: 0, b: 1, height: -1.0, size: 2 });
        assert_eq!(d.merges[1], Merge { a: 2, b: 3, height: -4.0, size: 3 });
        assert_eq!(d.table().to_csv(), "node_a,node_b,log_rho_saddle\n0,1,-1\n2,3,-4\n");
    }

    #[test]
    fn missing_saddle_keeps_the_other_and_isolated_is_flagged() {
        let c = clustering(
            vec![0.0; 4],
            vec![
                vec![NI, -1.0, -3.0, NI],
                vec![-1.0, NI, NI, NI],
                vec![-3.0, NI, NI, NI],
                vec![NI, NI, NI, NI],
            ],
        );
        let d = wpgma(&c).unwrap();
        let heights: Vec<f64> = d.merges.iter().map(|m| m.height).collect();
        assert_eq!(heights, vec![-1.0, -3.0, NI]);
        assert!(d.disconnected);
        assert!(heights.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn two_peaks_symmetric_on_one_axis() {
        let e = embed_peaks_2d(&[vec![0.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!((e.coords[0][0] + e.coords[1][0]).abs() < 1e-12);
        assert!(e.coords[0][0] > 0.0);
        assert!(e.rank_deficient);
        assert_eq!(e.coords[0][1], 0.0);
    }

    #[test]
    fn identical_rows_coincide() {
        let s = vec![vec![0.0, 0.0, 3.0], vec![0.0, 0.0, 3.0], vec![3.0, 3.0, 1.0]];
        let e = embed_peaks_2d(&s).unwrap();
        assert!((e.coords[0][0] - e.coords[1][0]).abs() < 1e-12);
        assert!((e.coords[0][1] - e.coords[1][1]).abs() < 1e-12);
    }

    #[test]
    fn infinite_entries_replaced() {
        let inf = f64::INFINITY;
        let e = embed_peaks_2d(&[vec![0.0, inf], vec![inf, 1.0]]).unwrap();
        assert!(e.replaced_infinite);
        assert!((e.sigma - 1.25).abs() < 1e-15);
    }
}
