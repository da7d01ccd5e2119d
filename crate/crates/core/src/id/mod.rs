//! Intrinsic dimension from nearest-neighbor distance ratios.
//!
//! Three maximum-likelihood estimators share one result type:
//!
//! | estimator | statistic | scale knob |
//! |-----------|-----------|------------|
//! | Gride     | `μ_k = r_{2k}/r_k` | neighbor order `k` |
//! | TwoNN     | `μ_1 = r_2/r_1` (Gride at `k = 1`) | subset size |
//! | MLE       | `log(r_{k+1}/r_j)`, `j ≤ k`, harmonic mean over points | `k` |
//!
//! Two scan protocols probe how `d̂` depends on scale:
//! [`gride_scan`] doubles `(k, 2k)` on one graph, [`decimation_scan`] runs
//! TwoNN or MLE on random subsets of size `N·2^{−i}`. Both report
//! `scale_param = N/k̄` with `k̄ = (k1 + k2)/2`, where `N` is the number of
//! points the graph was built on.

mod gride;
mod mle;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

pub use gride::{
    cdf_diagnostic, default_d_grid, gride_cdf, gride_fisher, gride_fit, gride_loglik, gride_pdf,
    gride_score, posterior, sample_mu, CdfDiagnostic, CdfPoint, D_MAX, D_MIN,
};
pub use mle::{mle_fit, mle_pointwise};

use crate::dataset::Dataset;
use crate::error::{out_of_range, Error, Result};
use crate::export::{num, Table};
use crate::neighbors::{build_knn, subsample_graph, RankDistances};
use crate::rng::{purpose_stream, Purpose};

/// Distance ratios `μ_i = r_{2k,i} / r_{k,i}` with degenerate entries removed.
#[derive(Debug, Clone, PartialEq)]
pub struct MuSample {
    /// Retained ratios, all `> 1`.
    pub values: Vec<f64>,
    pub k: usize,
    /// Points with `r_k = 0` or `μ = 1`.
    pub dropped: usize,
    /// Mean of `(r_k + r_{2k})/2` over all points; NaN for model samples.
    pub scale: f64,
    /// Size of the point set the ratios came from.
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Gride,
    #[serde(rename = "twonn")]
    TwoNn,
    Mle,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::Gride => "gride",
            Estimator::TwoNn => "twonn",
            Estimator::Mle => "mle",
        })
    }
}

/// One intrinsic-dimension estimate with its 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdEstimate {
    pub d_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_used: usize,
    pub n_dropped: usize,
    pub scale: f64,
    pub scale_param: f64,
    pub method: Estimator,
    pub k1: usize,
    pub k2: usize,
    /// The score kept one sign over the whole bracket; `d_hat` is the edge.
    pub boundary: bool,
    /// The bisection reached its tolerance within the iteration cap.
    pub converged: bool,
}

impl IdEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Estimates ordered from the smallest to the largest scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdScan {
    pub method: Estimator,
    pub estimates: Vec<IdEstimate>,
    /// Subset fractions, for decimation scans.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fractions: Option<Vec<f64>>,
}

impl IdScan {
    pub fn estimates(&self) -> &[IdEstimate] {
        &self.estimates
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["k1", "k2", "scale", "scale_param", "d_hat", "ci_low", "ci_high", "n_used"]);
        for e in &self.estimates {
            t.push(vec![
                e.k1.to_string(),
                e.k2.to_string(),
                num(e.scale),
                num(e.scale_param),
                num(e.d_hat),
                num(e.ci_low),
                num(e.ci_high),
                e.n_used.to_string(),
            ]);
        }
        t
    }
}

/// Ratios of the `2k`-th to the `k`-th neighbor distance.
pub fn mu_ratios<G: RankDistances + ?Sized>(graph: &G, k: usize) -> Result<MuSample> {
    if k == 0 {
        return Err(out_of_range("k must be >= 1"));
    }
    if !graph.has_rank(k) || !graph.has_rank(2 * k) {
        return Err(out_of_range(format!("graph lacks ranks {k} and {}", 2 * k)));
    }
    let n = graph.n_points();
    let mut values = Vec::with_capacity(n);
    let mut dropped = 0;
    let mut scale = 0.0;
    for i in 0..n {
        let r1 = graph.rank_distance(i, k);
        let r2 = graph.rank_distance(i, 2 * k);
        scale += 0.5 * (r1 + r2);
        let m = r2 / r1;
        if r1 > 0.0 && m > 1.0 {
            values.push(m);
        } else {
            dropped += 1;
        }
    }
    Ok(MuSample {
        values,
        k,
        dropped,
        scale: scale / n as f64,
        n_points: n,
    })
}

/// TwoNN: Gride at `k = 1`, relabeled.
pub fn twonn_fit<G: RankDistances + ?Sized>(graph: &G) -> Result<IdEstimate> {
    let mut e = gride_fit(&mu_ratios(graph, 1)?)?;
    e.method = Estimator::TwoNn;
    Ok(e)
}

/// Gride at `(1,2), (2,4), ..., (k_max/2, k_max)`.
pub fn gride_scan<G: RankDistances + Sync + ?Sized>(graph: &G, k_max: usize) -> Result<IdScan> {
    if k_max < 2 || !k_max.is_power_of_two() {
        return Err(out_of_range(format!("k_max must be a power of two >= 2, got {k_max}")));
    }
    let ks: Vec<usize> = std::iter::successors(Some(1usize), |k| Some(k * 2))
        .take_while(|&k| 2 * k <= k_max)
        .collect();
    let estimates = ks
        .par_iter()
        .map(|&k| gride_fit(&mu_ratios(graph, k)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdScan {
        method: Estimator::Gride,
        estimates,
        fractions: None,
    })
}

/// Estimator run on each random subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecimationEstimator {
    TwoNn,
    Mle { k: usize },
}

impl DecimationEstimator {
    fn k_max(self) -> usize {
        match self {
            DecimationEstimator::TwoNn => 2,
            DecimationEstimator::Mle { k } => k + 1,
        }
    }

    fn method(self) -> Estimator {
        match self {
            DecimationEstimator::TwoNn => Estimator::TwoNn,
            DecimationEstimator::Mle { .. } => Estimator::Mle,
        }
    }
}

/// Parses `"1,1/2,1/4"` or `"1,0.5,0.25"`; every entry must be `2^{−i}`.
pub fn parse_fractions(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let v = match part.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| Error::Format(format!("bad fraction '{part}'")))?;
                let b: f64 = b.trim().parse().map_err(|_| Error::Format(format!("bad fraction '{part}'")))?;
                a / b
            }
            None => part.parse().map_err(|_| Error::Format(format!("bad fraction '{part}'")))?,
        };
        fraction_level(v)?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Format("no fractions given".into()));
    }
    Ok(out)
}

/// `i` such that `f = 2^{−i}`.
fn fraction_level(f: f64) -> Result<u32> {
    if f > 0.0 && f <= 1.0 {
        let i = -f.log2();
        if i.fract() == 0.0 && i < 63.0 {
            return Ok(i as u32);
        }
    }
    Err(out_of_range(format!("fraction {f} is not 1/2^i")))
}

/// Fractions `1, 1/2, ..., 2^{−levels}`.
pub fn halving_fractions(levels: u32) -> Vec<f64> {
    (0..=levels).map(|i| 0.5f64.powi(i as i32)).collect()
}

/// Runs `estimator` on random subsets of `N·f` points for every fraction
/// `f` and averages the repeats.
///
/// With `repeats = None`, fraction `2^{−i}` is repeated `2^i` times, so each
/// fraction costs about the same as one full-size run. Subsets are
/// consecutive chunks of a seeded random permutation (disjoint until the
/// permutation is used up, then a fresh one is drawn). The full set is used
/// as is and evaluated once. The reported interval is the mean half-width
/// over repeats divided by `√repeats`.
pub fn decimation_scan(
    data: &Dataset,
    fractions: &[f64],
    repeats: Option<usize>,
    estimator: DecimationEstimator,
    seed: u64,
) -> Result<IdScan> {
    if let DecimationEstimator::Mle { k } = estimator {
        if k < 2 {
            return Err(out_of_range("mle needs k >= 2"));
        }
    }
    if repeats == Some(0) {
        return Err(out_of_range("repeats must be >= 1"));
    }
    let n = data.n();
    let mut estimates = Vec::with_capacity(fractions.len());
    for (pos, &f) in fractions.iter().enumerate() {
        let level = fraction_level(f)?;
        let n_sub = (n as f64 * f).floor() as usize;
        if n_sub < estimator.k_max() + 1 {
            return Err(out_of_range(format!(
                "subset of {n_sub} points at fraction {f} is too small"
            )));
        }
        let est = if n_sub == n {
            fit_graph(&build_knn(data, estimator.k_max())?, estimator)?
        } else {
            let reps = repeats.unwrap_or(1usize << level);
            let chunks = n / n_sub;
            let mut perm: Vec<usize> = Vec::new();
            let mut fits = Vec::with_capacity(reps);
            for r in 0..reps {
                let c = r % chunks;
                if c == 0 {
                    let mut rng = purpose_stream(seed, Purpose::Subset, ((pos as u64) << 32) | (r / chunks) as u64);
                    perm = (0..n).collect();
                    perm.shuffle(&mut rng);
                }
                let mut subset = perm[c * n_sub..(c + 1) * n_sub].to_vec();
                subset.sort_unstable();
                fits.push(fit_graph(&subsample_graph(data, &subset, estimator.k_max())?, estimator)?);
            }
            average(&fits)
        };
        estimates.push(est);
    }
    Ok(IdScan {
        method: estimator.method(),
        estimates,
        fractions: Some(fractions.to_vec()),
    })
}

fn fit_graph<G: RankDistances + ?Sized>(graph: &G, estimator: DecimationEstimator) -> Result<IdEstimate> {
    match estimator {
        DecimationEstimator::TwoNn => twonn_fit(graph),
        DecimationEstimator::Mle { k } => mle_fit(graph, k),
    }
}

fn average(fits: &[IdEstimate]) -> IdEstimate {
    let m = fits.len() as f64;
    let d = fits.iter().map(|e| e.d_hat).sum::<f64>() / m;
    let half = fits.iter().map(IdEstimate::half_width).sum::<f64>() / m / m.sqrt();
    IdEstimate {
        d_hat: d,
        ci_low: d - half,
        ci_high: d + half,
        n_used: fits.iter().map(|e| e.n_used).sum(),
        n_dropped: fits.iter().map(|e| e.n_dropped).sum(),
        scale: fits.iter().map(|e| e.scale).sum::<f64>() / m,
        scale_param: fits[0].scale_param,
        method: fits[0].method,
        k1: fits[0].k1,
        k2: fits[0].k2,
        boundary: fits.iter().any(|e| e.boundary),
        converged: fits.iter().all(|e| e.converged),
    }
}
