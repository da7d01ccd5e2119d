//! Pointwise density on the data manifold.
//!
//! Fixed-k estimator, with volumes measured in the intrinsic dimension `d`:
//!
//! ```text
//! ρ_i = k / (N ω_d r_{k,i}^d),     ω_d = π^{d/2} / Γ(d/2 + 1)
//! e_i = √((4k + 2) / ((k − 1) k))  (asymptotic std of log ρ_i)
//! ```
//!
//! [`pak_density`] picks `k` per point instead; see [`PakOptions`].

mod pak;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

pub use pak::{pak_density, pak_density_with, pak_threshold, PakOptions};

use crate::error::{out_of_range, Error, Result};
use crate::export::{num, Table};
use crate::neighbors::NeighborGraph;

/// `k*` hit the lower bound: the constant-density test already failed at 3.
pub const FLAG_K_FLOOR: u8 = 1;
/// The linear correction did not converge; the uncorrected value is kept.
pub const FLAG_NO_CORRECTION: u8 = 2;

/// Log density, its standard error and the neighborhood size per point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityField {
    pub log_rho: Vec<f64>,
    pub err: Vec<f64>,
    pub k_used: Vec<usize>,
    pub intrinsic_dim: f64,
    /// Bitwise OR of `FLAG_*` per point.
    pub flags: Vec<u8>,
}

impl DensityField {
    pub fn len(&self) -> usize {
        self.log_rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_rho.is_empty()
    }

    /// Columns `index, log_rho, err, k_used`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["index", "log_rho", "err", "k_used"]);
        for i in 0..self.len() {
            t.push(vec![
                i.to_string(),
                num(self.log_rho[i]),
                num(self.err[i]),
                self.k_used[i].to_string(),
            ]);
        }
        t
    }

    /// Copy with the given points in the given order.
    pub fn select(&self, order: &[usize]) -> Self {
        Self {
            log_rho: order.iter().map(|&i| self.log_rho[i]).collect(),
            err: order.iter().map(|&i| self.err[i]).collect(),
            k_used: order.iter().map(|&i| self.k_used[i]).collect(),
            intrinsic_dim: self.intrinsic_dim,
            flags: order.iter().map(|&i| self.flags[i]).collect(),
        }
    }
}

/// `log ω_d`, valid for non-integer `d`.
pub fn log_unit_ball_volume(d: f64) -> f64 {
    0.5 * d * std::f64::consts::PI.ln() - ln_gamma(0.5 * d + 1.0)
}

/// Volume of the unit `d`-ball.
pub fn unit_ball_volume(d: f64) -> f64 {
    if d < 300.0 {
        std::f64::consts::PI.powf(0.5 * d) / gamma(0.5 * d + 1.0)
    } else {
        log_unit_ball_volume(d).exp()
    }
}

/// Standard error of `log ρ` at neighborhood size `k ≥ 2`.
pub fn density_error(k: usize) -> f64 {
    let k = k as f64;
    ((4.0 * k + 2.0) / ((k - 1.0) * k)).sqrt()
}

pub(crate) fn check_dim(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(out_of_range(format!("intrinsic dimension must be positive, got {d}")))
    }
}

/// `log k − log N − log ω_d − d log r`.
#[inline]
pub(crate) fn knn_log_rho(k: usize, n: usize, log_omega: f64, d: f64, r: f64) -> f64 {
    (k as f64).ln() - (n as f64).ln() - log_omega - d * r.ln()
}

/// Fixed-k density for every point of the graph.
pub fn knn_density(graph: &NeighborGraph, k: usize, d: f64) -> Result<DensityField> {
    check_dim(d)?;
    if k < 2 || k > graph.k_max() {
        return Err(out_of_range(format!("k must be in [2, {}], got {k}", graph.k_max())));
    }
    let n = graph.n();
    if let Some(i) = (0..n).find(|&i| !(graph.distance(i, k) > 0.0)) {
        return Err(Error::Degenerate(format!("r_{k} = 0 at point {i}")));
    }
    let log_omega = log_unit_ball_volume(d);
    let log_rho = (0..n)
        .into_par_iter()
        .map(|i| knn_log_rho(k, n, log_omega, d, graph.distance(i, k)))
        .collect();
    Ok(DensityField {
        log_rho,
        err: vec![density_error(k); n],
        k_used: vec![k; n],
        intrinsic_dim: d,
        flags: vec![0; n],
    })
}
