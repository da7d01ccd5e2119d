//! Redundancy of a wide representation, probed through random chunks.
//!
//! A chunk is a random subset of `w_c` of the `W` columns of an `N × W`
//! matrix `X`. The whole matrix is reconstructed from the chunk by ridge
//! regression,
//!
//! ```text
//! Â = argmin_A ‖X − X_c A‖² + λ‖A‖²  = (X_cᵀX_c + λI)⁻¹ X_cᵀX,   λ = 1e-8
//! R² = Σ_j var_j R²_j / Σ_j var_j = 1 − Σ_j SSE_j / Σ_j SST_j
//! ρ_ij = C_ij / (√(C_ii C_jj) + 1e-8)
//! ```
//!
//! with `C` the covariance of the residuals. The redundancy signal is the
//! mean of `|ρ_ij|` over `i ≠ j`: a chunk that is a clone of the full
//! representation leaves residuals that look like independent noise, whose
//! mean absolute correlation is `√(2/(πN))`.
//!
//! Error curves are summarized by `err(w) − err_∞ = A w^b`, fitted by least
//! squares in log-log coordinates.

use nalgebra::DMatrix;
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{out_of_range, Error, Result};
use crate::export::{num, Table};
use crate::rng::{purpose_stream, Purpose};

pub const DEFAULT_RIDGE: f64 = 1e-8;
const CORR_GUARD: f64 = 1e-8;

/// Uniform sample of `w_c` distinct columns out of `W`, sorted.
pub fn sample_chunk(w: usize, w_c: usize, seed: u64) -> Result<Vec<usize>> {
    if w_c == 0 || w_c > w {
        return Err(out_of_range(format!("chunk size must be in [1, {w}], got {w_c}")));
    }
    let mut rng = purpose_stream(seed, Purpose::Chunk, w_c as u64);
    let mut idx = index::sample(&mut rng, w, w_c).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    /// Subtract column means before fitting.
    pub center: bool,
    pub ridge: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            center: true,
            ridge: DEFAULT_RIDGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkReport {
    pub chunk_size: usize,
    pub r2_weighted: f64,
    pub mean_abs_offdiag_corr: f64,
    pub seed: u64,
    pub chunk_indices: Vec<usize>,
    /// `N ≤ w_c`: the fit is determined by the ridge term.
    pub underdetermined: bool,
    /// Chunk columns with zero variance.
    pub degenerate_columns: Vec<usize>,
}

fn matrix(full: &Dataset, center: bool) -> DMatrix<f64> {
    let mut m = DMatrix::from_row_slice(full.n(), full.dim(), full.points());
    if center {
        for mut col in m.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
    }
    m
}

/// Reconstructs every column from the chunk with the default options.
pub fn reconstruct(full: &Dataset, chunk: &[usize]) -> Result<ChunkReport> {
    reconstruct_with(full, chunk, &ReconstructOptions::default())
}

pub fn reconstruct_with(full: &Dataset, chunk: &[usize], opts: &ReconstructOptions) -> Result<ChunkReport> {
    reconstruct_matrix(&matrix(full, opts.center), chunk, opts.ridge)
}

fn check_chunk(w: usize, chunk: &[usize]) -> Result<()> {
    if chunk.is_empty() {
        return Err(out_of_range("empty chunk"));
    }
    if let Some(&c) = chunk.iter().find(|&&c| c >= w) {
        return Err(out_of_range(format!("chunk index {c} outside [0, {w})")));
    }
    let mut s = chunk.to_vec();
    s.sort_unstable();
    if s.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::InvalidData("duplicate chunk index".into()));
    }
    Ok(())
}

fn reconstruct_matrix(y: &DMatrix<f64>, chunk: &[usize], ridge: f64) -> Result<ChunkReport> {
    let (n, w) = y.shape();
    check_chunk(w, chunk)?;
    if !(ridge >= 0.0) {
        return Err(out_of_range(format!("ridge must be non-negative, got {ridge}")));
    }
    if n < 2 {
        return Err(Error::InvalidData("need at least two rows".into()));
    }
    let x = y.select_columns(chunk);
    let mut gram = x.transpose() * &x;
    let degenerate_columns: Vec<usize> = (0..chunk.len())
        .filter(|&c| gram[(c, c)] == 0.0 || column_variance(&x, c) == 0.0)
        .map(|c| chunk[c])
        .collect();
    for c in 0..chunk.len() {
        gram[(c, c)] += ridge;
    }
    let rhs = x.transpose() * y;
    let a = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Degenerate("singular chunk Gram matrix".into()))?,
    };
    let resid = y - &x * a;

    let mut sse = 0.0;
    let mut sst = 0.0;
    for j in 0..w {
        sse += resid.column(j).norm_squared();
        sst += column_variance(y, j) * (n - 1) as f64;
    }
    if !(sst > 0.0) {
        return Err(Error::Degenerate("all columns have zero variance".into()));
    }

    // residual covariance on centered residuals
    let mut rc = resid;
    for mut col in rc.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let cov = (rc.transpose() * &rc) / (n - 1) as f64;
    let sd: Vec<f64> = (0..w).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let mut total = 0.0;
    for i in 0..w {
        for j in 0..w {
            if i != j {
                total += (cov[(i, j)] / (sd[i] * sd[j] + CORR_GUARD)).abs();
            }
        }
    }
    let pairs = (w * (w - 1)) as f64;
    let mut indices = chunk.to_vec();
    indices.sort_unstable();
    Ok(ChunkReport {
        chunk_size: chunk.len(),
        r2_weighted: 1.0 - sse / sst,
        mean_abs_offdiag_corr: if w > 1 { total / pairs } else { 0.0 },
        seed: 0,
        chunk_indices: indices,
        underdetermined: n <= chunk.len(),
        degenerate_columns,
    })
}

fn column_variance(m: &DMatrix<f64>, j: usize) -> f64 {
    let col = m.column(j);
    let mean = col.mean();
    col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m.nrows() - 1) as f64
}

/// Aggregate over the repeats of one chunk size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkScanRow {
    pub chunk_size: usize,
    pub mean_r2: f64,
    pub std_r2: f64,
    pub mean_corr: f64,
    pub std_corr: f64,
    pub reports: Vec<ChunkReport>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Repeat `r` of every size uses seed `seed + r`.
pub fn chunk_scan(full: &Dataset, sizes: &[usize], repeats: usize, seed: u64) -> Result<Vec<ChunkScanRow>> {
    chunk_scan_with(full, sizes, repeats, seed, &ReconstructOptions::default())
}

pub fn chunk_scan_with(
    full: &Dataset,
    sizes: &[usize],
    repeats: usize,
    seed: u64,
    opts: &ReconstructOptions,
) -> Result<Vec<ChunkScanRow>> {
    if repeats == 0 || sizes.is_empty() {
        return Err(out_of_range("need at least one size and one repeat"));
    }
    let w = full.dim();
    for &s in sizes {
        if s == 0 || s > w {
            return Err(out_of_range(format!("chunk size must be in [1, {w}], got {s}")));
        }
    }
    let y = matrix(full, opts.center);
    let jobs: Vec<(usize, usize)> = sizes.iter().flat_map(|&s| (0..repeats).map(move |r| (s, r))).collect();
    let reports = jobs
        .par_iter()
        .map(|&(s, r)| {
            let sd = seed.wrapping_add(r as u64);
            let chunk = sample_chunk(w, s, sd)?;
            let mut rep = reconstruct_matrix(&y, &chunk, opts.ridge)?;
            rep.seed = sd;
            Ok(rep)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(reports
        .chunks(repeats)
        .map(|reps| {
            let (mean_r2, std_r2) = mean_std(&reps.iter().map(|r| r.r2_weighted).collect::<Vec<_>>());
            let (mean_corr, std_corr) = mean_std(&reps.iter().map(|r| r.mean_abs_offdiag_corr).collect::<Vec<_>>());
            ChunkScanRow {
                chunk_size: reps[0].chunk_size,
                mean_r2,
                std_r2,
                mean_corr,
                std_corr,
                reports: reps.to_vec(),
            }
        })
        .collect())
}

/// Columns `w_c, mean_r2, std_r2, mean_corr, std_corr`.
pub fn scan_table(rows: &[ChunkScanRow]) -> Table {
    let mut t = Table::new(&["w_c", "mean_r2", "std_r2", "mean_corr", "std_corr"]);
    for r in rows {
        t.push(vec![
            r.chunk_size.to_string(),
            num(r.mean_r2),
            num(r.std_r2),
            num(r.mean_corr),
            num(r.std_corr),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub r2_of_fit: f64,
    pub err_inf: f64,
}

/// Fits `err − err_inf = amplitude · size^exponent`.
pub fn fit_power_law(sizes: &[f64], errors: &[f64], err_inf: f64) -> Result<PowerLawFit> {
    if sizes.len() != errors.len() {
        return Err(Error::LengthMismatch {
            what: "sizes vs errors",
            left: sizes.len(),
            right: errors.len(),
        });
    }
    if sizes.len() < 3 {
        return Err(out_of_range("power-law fit needs at least three sizes"));
    }
    if let Some(s) = sizes.iter().find(|&&s| !(s > 0.0)) {
        return Err(out_of_range(format!("sizes must be positive, got {s}")));
    }
    if let Some(e) = errors.iter().find(|&&e| !(e - err_inf > 0.0)) {
        return Err(Error::InvalidData(format!("non-positive excess error at {e}")));
    }
    let xs: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| (e - err_inf).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all sizes are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(PowerLawFit {
        exponent: slope,
        amplitude: intercept.exp(),
        r2_of_fit: if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 },
        err_inf,
    })
}

/// `copies` noisy copies of `base` Gaussian features: column `c·base + f`
/// holds feature `f` plus independent noise of std `noise`.
pub fn clone_matrix(n: usize, base: usize, copies: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || base == 0 || copies == 0 {
        return Err(out_of_range("clone matrix needs positive n, base and copies"));
    }
    if !(noise >= 0.0) {
        return Err(out_of_range(format!("noise must be non-negative, got {noise}")));
    }
    let w = base * copies;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = purpose_stream(seed, Purpose::Point, i as u64);
            let feats: Vec<f64> = (0..base).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut nrng = purpose_stream(seed, Purpose::Noise, i as u64);
            (0..w)
                .map(|j| {
                    let e: f64 = StandardNormal.sample(&mut nrng);
                    feats[j % base] + noise * e
                })
                .collect()
        })
        .collect();
    Ok(Dataset::from_rows(&rows)?.with_name(format!("clones_{base}x{copies}")))
}
