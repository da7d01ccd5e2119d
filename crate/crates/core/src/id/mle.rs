//! Pointwise maximum-likelihood dimension, averaged harmonically.
//!
//! ```text
//! d̂_i = [ (1/k) Σ_{j=1..k} log(r_{i,k+1} / r_{i,j}) ]^{−1}
//! d̂   = [ (1/n) Σ_i 1/d̂_i ]^{−1}
//! ```
//!
//! The interval uses the asymptotic variance of the pooled estimator,
//! `d̂ ± 1.96·d̂/√(n k)`. Reported as `(k1, k2) = (1, k)`.

use super::{Estimator, IdEstimate};
use crate::error::{out_of_range, Error, Result};
use crate::neighbors::RankDistances;

/// `d̂_i` from one row `r_1 ≤ ... ≤ r_{k+1}`; `None` when `r_1 = 0` or
/// all distances coincide.
pub fn mle_pointwise(row: &[f64]) -> Option<f64> {
    let k = row.len().checked_sub(1).filter(|&k| k > 0)?;
    inverse_pointwise(row, k).map(f64::recip)
}

fn inverse_pointwise(row: &[f64], k: usize) -> Option<f64> {
    if !(row[0] > 0.0) {
        return None;
    }
    let top = row[k];
    let m = row[..k].iter().map(|&r| (top / r).ln()).sum::<f64>() / k as f64;
    (m > 0.0).then_some(m)
}

pub fn mle_fit<G: RankDistances + ?Sized>(graph: &G, k: usize) -> Result<IdEstimate> {
    if k < 2 {
        return Err(out_of_range("mle needs k >= 2"));
    }
    if !(1..=k + 1).all(|r| graph.has_rank(r)) {
        return Err(out_of_range(format!("graph lacks ranks 1..={}", k + 1)));
    }
    let n = graph.n_points();
    let mut row = vec![0.0; k + 1];
    let mut inv_sum = 0.0;
    let mut used = 0usize;
    let mut scale = 0.0;
    for i in 0..n {
        for (r, slot) in row.iter_mut().enumerate() {
            *slot = graph.rank_distance(i, r + 1);
        }
        scale += 0.5 * (row[0] + row[k - 1]);
        if let Some(m) = inverse_pointwise(&row, k) {
            inv_sum += m;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Degenerate(format!("no usable points for mle at k={k}")));
    }
    let d = used as f64 / inv_sum;
    let half = 1.96 * d / ((used * k) as f64).sqrt();
    Ok(IdEstimate {
        d_hat: d,
        ci_low: d - half,
        ci_high: d + half,
        n_used: used,
        n_dropped: n - used,
        scale: scale / n as f64,
        scale_param: n as f64 / (0.5 * (1 + k) as f64),
        method: Estimator::Mle,
        k1: 1,
        k2: k,
        boundary: false,
        converged: true,
    })
}
