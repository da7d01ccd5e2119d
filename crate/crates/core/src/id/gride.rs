//! Gride likelihood, fit, sampler and model CDF.
//!
//! For `μ = r_{2k}/r_k` on a locally uniform `d`-manifold,
//!
//! ```text
//! p(μ | d) = d (μ^d − 1)^{k−1} / ( μ^{(2k−1)d + 1} B(k, k) ),   μ > 1
//! ```
//!
//! With `L_i = log μ_i` and `t_i = d L_i`:
//!
//! ```text
//! ℓ(d)   = Σ [ log d + (k−1) log(e^{t_i} − 1) − ((2k−1)d + 1) L_i − log B(k,k) ]
//! ℓ'(d)  = N/d + (k−1) Σ L_i / (1 − e^{−t_i}) − (2k−1) Σ L_i
//! −ℓ''(d) = N/d² + (k−1) Σ L_i² / (4 sinh²(t_i/2))  =: I(d)
//! ```
//!
//! `ℓ` is strictly concave, so the score has at most one root. `u =
//! 1 − μ^{−d}` is Beta(k, k) distributed, which gives both the sampler and
//! the CDF `F(μ) = I_{1−μ^{−d}}(k, k)`.

use rand_distr::{Beta, Distribution};
use statrs::function::beta::{beta_reg, ln_beta};

use super::{Estimator, IdEstimate, MuSample};
use crate::error::{Error, Result};
use crate::rng::{purpose_stream, Purpose};

pub const D_MIN: f64 = 1e-3;
pub const D_MAX: f64 = 1e3;
const TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;
const Z95: f64 = 1.96;

/// `log(e^t − 1)` for `t > 0` without overflow or cancellation.
#[inline]
pub(crate) fn log_expm1(t: f64) -> f64 {
    if t > 1.0 {
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}

/// Log-likelihood of the sample at dimension `d`.
pub fn gride_loglik(mu: &MuSample, d: f64) -> f64 {
    let k = mu.k as f64;
    let lb = ln_beta(k, k);
    let n = mu.values.len() as f64;
    let mut s = 0.0;
    for &m in &mu.values {
        let l = m.ln();
        let mut term = -((2.0 * k - 1.0) * d + 1.0) * l;
        if mu.k > 1 {
            term += (k - 1.0) * log_expm1(d * l);
        }
        s += term;
    }
    s + n * (d.ln() - lb)
}

/// Score `ℓ'(d)`.
pub fn gride_score(mu: &MuSample, d: f64) -> f64 {
    let k = mu.k as f64;
    let n = mu.values.len() as f64;
    let mut sum_l = 0.0;
    let mut sum_r = 0.0;
    for &m in &mu.values {
        let l = m.ln();
        sum_l += l;
        if mu.k > 1 {
            sum_r += l / -(-d * l).exp_m1();
        }
    }
    n / d + (k - 1.0) * sum_r - (2.0 * k - 1.0) * sum_l
}

/// Fisher information `I(d) = −ℓ''(d)`.
pub fn gride_fisher(mu: &MuSample, d: f64) -> f64 {
    let k = mu.k as f64;
    let n = mu.values.len() as f64;
    let mut s = 0.0;
    if mu.k > 1 {
        for &m in &mu.values {
            let l = m.ln();
            let sh = (0.5 * d * l).sinh();
            s += l * l / (4.0 * sh * sh);
        }
    }
    n / (d * d) + (k - 1.0) * s
}

/// Maximum-likelihood `d` with a 95% large-sample interval.
///
/// Bisection on the score over `[1e-3, 1e3]` down to a bracket of width
/// `1e-8`, then Newton steps that are kept only while they stay inside the
/// bracket. For `k = 1` this lands on the closed form `N / Σ log μ`.
pub fn gride_fit(mu: &MuSample) -> Result<IdEstimate> {
    if mu.values.is_empty() {
        return Err(Error::Degenerate(format!(
            "no usable ratios at k={} ({} dropped)",
            mu.k, mu.dropped
        )));
    }
    let (d, boundary, converged) = solve(mu);
    let info = gride_fisher(mu, d);
    let half = Z95 / info.sqrt();
    Ok(IdEstimate {
        d_hat: d,
        ci_low: d - half,
        ci_high: d + half,
        n_used: mu.values.len(),
        n_dropped: mu.dropped,
        scale: mu.scale,
        scale_param: mu.n_points as f64 / (1.5 * mu.k as f64),
        method: Estimator::Gride,
        k1: mu.k,
        k2: 2 * mu.k,
        boundary,
        converged,
    })
}

fn solve(mu: &MuSample) -> (f64, bool, bool) {
    let (mut lo, mut hi) = (D_MIN, D_MAX);
    let s_lo = gride_score(mu, lo);
    let s_hi = gride_score(mu, hi);
    if s_lo <= 0.0 {
        return (lo, true, s_lo == 0.0);
    }
    if s_hi >= 0.0 {
        return (hi, true, s_hi == 0.0);
    }
    let mut iter = 0;
    while hi - lo > TOL && iter < MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let s = gride_score(mu, mid);
        if s > 0.0 {
            lo = mid;
        } else if s < 0.0 {
            hi = mid;
        } else {
            return (mid, false, true);
        }
        iter += 1;
    }
    let converged = hi - lo <= TOL;
    let mut d = 0.5 * (lo + hi);
    for _ in 0..8 {
        let step = gride_score(mu, d) / gride_fisher(mu, d);
        let next = d + step;
        if !(next > lo && next < hi) || next == d {
            break;
        }
        d = next;
    }
    (d, false, converged)
}

/// `n` independent ratios from the model at `(d, k)`.
pub fn sample_mu(d: f64, k: usize, n: usize, seed: u64) -> Result<MuSample> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(crate::error::out_of_range(format!("d must be positive, got {d}")));
    }
    if k == 0 {
        return Err(crate::error::out_of_range("k must be >= 1"));
    }
    let beta = Beta::new(k as f64, k as f64).map_err(|e| Error::OutOfRange(e.to_string()))?;
    let mut rng = purpose_stream(seed, Purpose::Sampler, k as u64);
    let mut values = Vec::with_capacity(n);
    let mut dropped = 0;
    for _ in 0..n {
        let u: f64 = beta.sample(&mut rng);
        // μ = (1 − u)^{−1/d}
        let m = (-(-u).ln_1p() / d).exp();
        if m > 1.0 && m.is_finite() {
            values.push(m);
        } else {
            dropped += 1;
        }
    }
    Ok(MuSample {
        values,
        k,
        dropped,
        scale: f64::NAN,
        n_points: n,
    })
}

/// Model density `p(μ | d, k)`.
pub fn gride_pdf(mu: f64, d: f64, k: usize) -> f64 {
    if mu <= 1.0 {
        return 0.0;
    }
    let kf = k as f64;
    let l = mu.ln();
    let mut lp = d.ln() - ((2.0 * kf - 1.0) * d + 1.0) * l - ln_beta(kf, kf);
    if k > 1 {
        lp += (kf - 1.0) * log_expm1(d * l);
    }
    lp.exp()
}

/// Model CDF `F(μ) = I_{1−μ^{−d}}(k, k)`.
pub fn gride_cdf(mu: f64, d: f64, k: usize) -> f64 {
    if mu <= 1.0 {
        return 0.0;
    }
    let x = -(-d * mu.ln()).exp_m1();
    if x >= 1.0 {
        return 1.0;
    }
    let kf = k as f64;
    beta_reg(kf, kf, x)
}

/// Normalized posterior over `d_grid` under a flat prior.
pub fn posterior(mu: &MuSample, d_grid: &[usize]) -> Result<Vec<f64>> {
    if d_grid.is_empty() {
        return Err(crate::error::out_of_range("empty dimension grid"));
    }
    if d_grid.contains(&0) {
        return Err(crate::error::out_of_range("dimension grid must be positive"));
    }
    let logs: Vec<f64> = d_grid.iter().map(|&d| gride_loglik(mu, d as f64)).collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// Integers `1..=max(50, ceil(2·d̂))`.
pub fn default_d_grid(d_hat: f64) -> Vec<usize> {
    let top = 50usize.max((2.0 * d_hat).ceil() as usize);
    (1..=top).collect()
}

/// One row of an empirical-vs-model CDF comparison.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CdfPoint {
    pub mu: f64,
    pub f_emp: f64,
    pub f_model: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CdfDiagnostic {
    pub ks_distance: f64,
    pub curve: Vec<CdfPoint>,
}

/// Kolmogorov-Smirnov distance between the sample and the model at `d`.
pub fn cdf_diagnostic(mu: &MuSample, d: f64) -> Result<CdfDiagnostic> {
    if !(d > 0.0) {
        return Err(crate::error::out_of_range(format!("d must be positive, got {d}")));
    }
    let mut xs = mu.values.clone();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut ks: f64 = 0.0;
    let curve: Vec<CdfPoint> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = gride_cdf(x, d, mu.k);
            let above = (i + 1) as f64 / n;
            let below = i as f64 / n;
            ks = ks.max(above - f).max(f - below);
            CdfPoint {
                mu: x,
                f_emp: above,
                f_model: f,
            }
        })
        .collect();
    Ok(CdfDiagnostic { ks_distance: ks, curve })
}
