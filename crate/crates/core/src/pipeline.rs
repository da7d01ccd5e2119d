//! End-to-end runs on in-memory arrays.
//!
//! The CLI and host-language bindings both go through these functions, so
//! the same flags produce the same numbers on either side.

use serde::Serialize;

use crate::dataset::Dataset;
use crate::density::{knn_density, pak_density, DensityField};
use crate::error::{out_of_range, Error, Result};
use crate::id::{
    decimation_scan, gride_fit, gride_scan, halving_fractions, mle_fit, mu_ratios, DecimationEstimator, Estimator,
    IdEstimate, IdScan,
};
use crate::neighbors::build_knn;
use crate::peaks::{cluster, embed_peaks_2d, peak_similarity, wpgma, Dendrogram, PeakClustering, PeakEmbedding};

/// Smallest point count any pipeline accepts.
pub const MIN_POINTS: usize = 3;

/// Validates a row-major `(n, dim)` buffer coming from outside the crate.
pub fn array_dataset(n: usize, dim: usize, buffer: Vec<f64>) -> Result<Dataset> {
    if n < MIN_POINTS {
        return Err(Error::InvalidData(format!("N too small: need at least {MIN_POINTS} points, got {n}")));
    }
    Dataset::from_row_major(n, dim, buffer)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdScanConfig {
    pub method: Estimator,
    /// Largest neighbor rank for graph-based scans (power of two).
    pub k_max: usize,
    /// Decimation fractions; `None` runs the graph-based scan for Gride and
    /// MLE, and halving fractions for TwoNN.
    pub fractions: Option<Vec<f64>>,
    pub repeats: Option<usize>,
    /// Neighbor order for MLE on subsets.
    pub mle_k: usize,
    pub seed: u64,
}

impl Default for IdScanConfig {
    fn default() -> Self {
        Self {
            method: Estimator::Gride,
            k_max: 64,
            fractions: None,
            repeats: None,
            mle_k: 10,
            seed: 0,
        }
    }
}

/// Halving fractions down to 1/256, stopping before subsets drop below 16
/// points.
pub fn default_fractions(n: usize) -> Vec<f64> {
    let mut levels = 0;
    while levels < 8 && n >> (levels + 1) >= 16 {
        levels += 1;
    }
    halving_fractions(levels)
}

pub fn id_scan(data: &Dataset, cfg: &IdScanConfig) -> Result<IdScan> {
    let check_kmax = || {
        if cfg.k_max >= data.n() {
            Err(out_of_range(format!("k_max {} needs more than {} points", cfg.k_max, data.n())))
        } else {
            Ok(())
        }
    };
    match (cfg.method, &cfg.fractions) {
        (Estimator::Gride, Some(_)) => Err(out_of_range("gride scans by neighbor order, not by fractions")),
        (Estimator::Gride, None) => {
            check_kmax()?;
            gride_scan(&build_knn(data, cfg.k_max)?, cfg.k_max)
        }
        (Estimator::TwoNn, f) => {
            let f = f.clone().unwrap_or_else(|| default_fractions(data.n()));
            decimation_scan(data, &f, cfg.repeats, DecimationEstimator::TwoNn, cfg.seed)
        }
        (Estimator::Mle, Some(f)) => {
            decimation_scan(data, f, cfg.repeats, DecimationEstimator::Mle { k: cfg.mle_k }, cfg.seed)
        }
        (Estimator::Mle, None) => mle_k_scan(data, cfg.k_max),
    }
}

/// MLE at `k = 2, 4, ..., k_max` on one graph.
fn mle_k_scan(data: &Dataset, k_max: usize) -> Result<IdScan> {
    if k_max < 2 || !k_max.is_power_of_two() {
        return Err(out_of_range(format!("k_max must be a power of two >= 2, got {k_max}")));
    }
    if k_max + 1 >= data.n() {
        return Err(out_of_range(format!("k_max {k_max} needs more than {} points", data.n())));
    }
    // the statistic at k uses r_{k+1}
    let g = build_knn(data, k_max + 1)?;
    let estimates = std::iter::successors(Some(2usize), |k| (k * 2 <= k_max).then_some(k * 2))
        .map(|k| mle_fit(&g, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdScan {
        method: Estimator::Mle,
        estimates,
        fractions: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum DensityMethod {
    Knn { k: usize },
    Pak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IdChoice {
    /// Gride at `(k1, k2) = (2, 4)`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub density: DensityMethod,
    pub id: IdChoice,
    pub z: f64,
    /// Neighbors used for the graph, the peak conditions and the borders.
    /// PAk picks `k*` below this value.
    pub k_graph: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            density: DensityMethod::Pak,
            id: IdChoice::Auto,
            z: 1.6,
            k_graph: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterRun {
    pub id_choice: IdChoice,
    pub id_used: f64,
    pub id_estimate: Option<IdEstimate>,
    pub density_method: DensityMethod,
    pub density: DensityField,
    pub clustering: PeakClustering,
    /// Present when at least two peaks survive.
    pub dendrogram: Option<Dendrogram>,
    pub embedding: Option<PeakEmbedding>,
}

pub fn cluster_run(data: &Dataset, cfg: &ClusterConfig) -> Result<ClusterRun> {
    if cfg.k_graph < 4 {
        return Err(out_of_range(format!("k_graph must be >= 4, got {}", cfg.k_graph)));
    }
    let k_max = match cfg.density {
        DensityMethod::Knn { k } => cfg.k_graph.max(k),
        DensityMethod::Pak => cfg.k_graph,
    };
    if k_max >= data.n() {
        return Err(out_of_range(format!("{k_max} neighbors need more than {} points", data.n())));
    }
    let graph = build_knn(data, k_max)?;
    let (id_used, id_estimate) = match cfg.id {
        IdChoice::Fixed(d) => (d, None),
        IdChoice::Auto => {
            let est = gride_fit(&mu_ratios(&graph, 2)?)?;
            (est.d_hat, Some(est))
        }
    };
    let density = match cfg.density {
        DensityMethod::Knn { k } => knn_density(&graph, k, id_used)?,
        DensityMethod::Pak => pak_density(&graph, id_used)?,
    };
    let clustering = cluster(&graph, &density, cfg.k_graph, cfg.z)?;
    let (dendrogram, embedding) = if clustering.n_peaks() >= 2 {
        (Some(wpgma(&clustering)?), Some(embed_peaks_2d(&peak_similarity(&clustering)?)?))
    } else {
        (None, None)
    };
    Ok(ClusterRun {
        id_choice: cfg.id,
        id_used,
        id_estimate,
        density_method: cfg.density,
        density,
        clustering,
        dendrogram,
        embedding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate, Family, ManifoldSpec};

    #[test]
    fn array_validation() {
        let e = array_dataset(2, 2, vec![0.0; 4]).unwrap_err();
        assert!(e.to_string().contains("N too small"));
        let e = array_dataset(3, 2, vec![0.0, 1.0, 2.0, f64::NAN, 4.0, 5.0]).unwrap_err();
        assert!(matches!(e, Error::NonFinite { row: 1, col: 1 }));
    }

    #[test]
    fn scans_by_method() {
        let d = generate(&ManifoldSpec::new(Family::Hypercube, 2, 1000).seed(3)).unwrap();
        let g = id_scan(&d, &IdScanConfig::default()).unwrap();
        assert_eq!(g.estimates.len(), 6);
        let t = id_scan(&d, &IdScanConfig { method: Estimator::TwoNn, ..Default::default() }).unwrap();
        assert_eq!(t.estimates.len(), 6);
        let m = id_scan(&d, &IdScanConfig { method: Estimator::Mle, k_max: 16, ..Default::default() }).unwrap();
        assert_eq!(m.estimates.iter().map(|e| e.k2).collect::<Vec<_>>(), vec![2, 4, 8, 16]);
        let bad = IdScanConfig { fractions: Some(vec![1.0]), ..Default::default() };
        assert!(id_scan(&d, &bad).is_err());
    }

    #[test]
    fn default_fraction_levels() {
        assert_eq!(default_fractions(20_000).len(), 9);
        assert_eq!(default_fractions(100).len(), 3);
    }

    #[test]
    fn cluster_records_auto_id() {
        let d = generate(&ManifoldSpec::new(Family::Gaussian, 2, 400).seed(1)).unwrap();
        let r = cluster_run(&d, &ClusterConfig::default()).unwrap();
        assert_eq!(r.id_choice, IdChoice::Auto);
        assert!(r.id_estimate.is_some());
        assert_eq!(r.clustering.labels.len(), 400);
        let json = serde_json::to_string(&r.id_choice).unwrap();
        assert_eq!(json, "\"auto\"");
    }
}
